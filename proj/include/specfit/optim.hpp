// optim.hpp — deterministic derivative-free building blocks: a shifted Halton
// sequence and a bounded Nelder-Mead search on the unit hypercube.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace specfit::optim {

// Halton low-discrepancy sequence in [0,1)^dim with a Cranley-Patterson
// rotation derived from `seed` (seed 0 means no rotation). Consumption order
// is part of the reproducibility contract: callers that share a sampler get
// a single well-defined stream.
class HaltonSampler {
public:
    HaltonSampler(std::size_t dim, std::uint64_t seed);

    std::vector<double> next();
    std::size_t dim() const { return shift_.size(); }

private:
    std::vector<double> shift_;
    std::uint64_t index_ = 0;
};

// Radical inverse of `index` in the given prime base (Halton coordinate).
double radical_inverse(std::uint64_t index, unsigned base);

struct NelderMeadOptions {
    int max_evals = 200;
    double initial_step = 0.15;   // simplex edge, unit-cube units
    double f_tol = 1e-12;         // absolute spread of simplex values
    double x_tol = 1e-10;         // simplex diameter
};

struct NelderMeadResult {
    std::vector<double> x;  // clamped into [0,1]^dim
    double f = 0.0;
    int evals = 0;
};

// Minimizes f over [0,1]^dim starting from x0 (clamped). Points proposed
// outside the cube are evaluated at their clamped image, so boundary optima
// are reachable. Fully deterministic.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts = {});

}  // namespace specfit::optim
