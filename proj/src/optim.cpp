#include "specfit/optim.hpp"

#include "specfit/util.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace specfit::optim {

namespace {

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                23, 29, 31, 37, 41, 43, 47, 53};

std::vector<double> clamp01(std::vector<double> x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
}

}  // namespace

double radical_inverse(std::uint64_t index, unsigned base) {
    double result = 0.0;
    double inv = 1.0 / base;
    double scale = inv;
    while (index > 0) {
        result += static_cast<double>(index % base) * scale;
        index /= base;
        scale *= inv;
    }
    return result;
}

HaltonSampler::HaltonSampler(std::size_t dim, std::uint64_t seed) {
    if (dim == 0 || dim > std::size(kPrimes)) {
        throw std::invalid_argument("HaltonSampler: dimension out of range");
    }
    shift_.resize(dim, 0.0);
    if (seed != 0) {
        std::mt19937_64 engine(seed);
        for (double& s : shift_) s = util::uniform01(engine());
    }
    index_ = 1;  // skip the all-zero point
}

std::vector<double> HaltonSampler::next() {
    std::vector<double> p(shift_.size());
    for (std::size_t d = 0; d < shift_.size(); ++d) {
        double v = radical_inverse(index_, kPrimes[d]) + shift_[d];
        p[d] = v - std::floor(v);
    }
    ++index_;
    return p;
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(clamp01(x));
    };

    // initial simplex: x0 plus one offset vertex per coordinate, stepping
    // inward when the step would leave the cube
    std::vector<std::vector<double>> xs;
    std::vector<double> fs;
    xs.push_back(clamp01(x0));
    fs.push_back(eval(xs[0]));
    for (std::size_t i = 0; i < n; ++i) {
        auto v = xs[0];
        v[i] += (v[i] + opts.initial_step <= 1.0) ? opts.initial_step : -opts.initial_step;
        xs.push_back(v);
        fs.push_back(eval(v));
    }

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&]() {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    };

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    while (evals < opts.max_evals) {
        sort_simplex();
        const std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diameter = std::max(diameter, std::abs(xs[worst][i] - xs[best][i]));
        }
        if (fs[worst] - fs[best] < opts.f_tol && diameter < opts.x_tol) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < order.size(); ++v) {
            if (order[v] == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += xs[order[v]][i];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coeff) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + coeff * (centroid[i] - xs[worst][i]);
            return x;
        };

        auto reflected = blend(alpha);
        const double fr = eval(reflected);
        if (fr < fs[best]) {
            auto expanded = blend(gamma);
            const double fe = eval(expanded);
            if (fe < fr) {
                xs[worst] = std::move(expanded);
                fs[worst] = fe;
            } else {
                xs[worst] = std::move(reflected);
                fs[worst] = fr;
            }
            continue;
        }
        if (fr < fs[second_worst]) {
            xs[worst] = std::move(reflected);
            fs[worst] = fr;
            continue;
        }

        auto contracted = blend((fr < fs[worst]) ? rho : -rho);
        const double fc = eval(contracted);
        if (fc < std::min(fr, fs[worst])) {
            xs[worst] = std::move(contracted);
            fs[worst] = fc;
            continue;
        }

        // shrink toward the best vertex
        for (std::size_t v = 0; v < order.size(); ++v) {
            if (order[v] == best) continue;
            auto& x = xs[order[v]];
            for (std::size_t i = 0; i < n; ++i) x[i] = xs[best][i] + sigma * (x[i] - xs[best][i]);
            fs[order[v]] = eval(x);
            if (evals >= opts.max_evals) break;
        }
    }

    sort_simplex();
    NelderMeadResult result;
    result.x = clamp01(xs[order[0]]);
    result.f = fs[order[0]];
    result.evals = evals;
    return result;
}

}  // namespace specfit::optim
