// util.hpp — small numeric and text helpers shared across modules

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace specfit::util {

inline constexpr double kPi = 3.14159265358979323846;

// Trapezoidal integral of y over a (not necessarily uniform) ascending axis x.
inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("trapezoid: need at least 2 points");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        sum += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    return sum;
}

// Uniform ascending axis with n points covering [lo, hi].
inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
    if (!(lo < hi)) throw std::invalid_argument("linspace: need lo < hi");
    std::vector<double> v(static_cast<std::size_t>(n));
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + step * i;
    v.back() = hi;
    return v;
}

// Shortest-round-trip decimal formatting; used by all text exports so that
// identical doubles always serialize to identical bytes.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// FNV-1a; stable across platforms and runs (std::hash is not), used for
// disk-cache keys.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Portable uniform double in [0,1) from a raw 64-bit state; avoids
// std::uniform_real_distribution whose output is implementation-defined.
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Static-partition parallel map: fn(i) for i in [0, n). Deterministic output
// placement is the caller's job (write to slot i). Runs serially when
// workers <= 1. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace specfit::util
