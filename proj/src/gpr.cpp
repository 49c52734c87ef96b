#include "specfit/gpr.hpp"

#include "specfit/optim.hpp"
#include "specfit/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace specfit::gpr {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// log-scale map between the hyperparameter box and the unit cube used by the
// likelihood search: [length scales..., signal variance, noise variance]
struct HyperCoder {
    HyperBounds bounds;
    std::size_t space_dim = 0;

    std::size_t size() const { return space_dim + 2; }

    static double decode1(double u, double lo, double hi) {
        return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
    }
    static double encode1(double v, double lo, double hi) {
        const double u = (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
        return std::clamp(u, 0.0, 1.0);
    }

    KernelHyperparams decode(const std::vector<double>& u) const {
        KernelHyperparams h;
        h.length_scales.resize(space_dim);
        for (std::size_t d = 0; d < space_dim; ++d) {
            h.length_scales[d] = decode1(u[d], bounds.length_scale_lo, bounds.length_scale_hi);
        }
        h.signal_variance = decode1(u[space_dim], bounds.signal_lo, bounds.signal_hi);
        h.noise_variance = decode1(u[space_dim + 1], bounds.noise_lo, bounds.noise_hi);
        return h;
    }

    std::vector<double> encode(const KernelHyperparams& h) const {
        std::vector<double> u(size());
        for (std::size_t d = 0; d < space_dim; ++d) {
            u[d] = encode1(h.length_scales[d], bounds.length_scale_lo, bounds.length_scale_hi);
        }
        u[space_dim] = encode1(h.signal_variance, bounds.signal_lo, bounds.signal_hi);
        u[space_dim + 1] = encode1(h.noise_variance, bounds.noise_lo, bounds.noise_hi);
        return u;
    }
};

Eigen::MatrixXd scale_inputs(const TrainingSet& train, const ParameterSpace& space) {
    const std::size_t n = train.size();
    const std::size_t d = space.size();
    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto u = space.to_unit(train.inputs[i]);
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u[j];
    }
    return x;
}

// per-dimension squared distances, shared by all likelihood evaluations
std::vector<Eigen::MatrixXd> squared_distances(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    std::vector<Eigen::MatrixXd> d2(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double r = x(i, d) - x(j, d);
                m(i, j) = m(j, i) = r * r;
            }
        }
        d2[static_cast<std::size_t>(d)] = std::move(m);
    }
    return d2;
}

Eigen::MatrixXd kernel_matrix(const std::vector<Eigen::MatrixXd>& d2,
                              const KernelHyperparams& h) {
    const Eigen::Index n = d2.empty() ? 0 : d2[0].rows();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t d = 0; d < d2.size(); ++d) {
        w += d2[d] * (0.5 / (h.length_scales[d] * h.length_scales[d]));
    }
    return h.signal_variance * (-w.array()).exp().matrix();
}

struct Factorization {
    bool ok = false;
    Eigen::MatrixXd chol_lower;
    Eigen::VectorXd alpha;
    double jitter = 0.0;
    double log_marginal = -std::numeric_limits<double>::infinity();
};

// Cholesky with escalating diagonal jitter; the marginal likelihood uses the
// actually factorized matrix.
Factorization factorize(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& y_centered,
                        double noise_variance, double signal_variance) {
    const Eigen::Index n = kernel.rows();
    Factorization f;
    double jitter = 0.0;
    for (int attempt = 0; attempt < 10; ++attempt) {
        Eigen::MatrixXd k = kernel;
        k.diagonal().array() += noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() == Eigen::Success) {
            f.ok = true;
            f.jitter = jitter;
            f.chol_lower = llt.matrixL();
            f.alpha = llt.solve(y_centered);
            f.log_marginal = -0.5 * y_centered.dot(f.alpha) -
                             f.chol_lower.diagonal().array().log().sum() -
                             0.5 * static_cast<double>(n) * std::log(2.0 * util::kPi);
            return f;
        }
        jitter = (jitter == 0.0) ? 1e-12 * std::max(signal_variance, 1e-8) : jitter * 10.0;
        if (jitter > 1e-4 * std::max(signal_variance, 1.0)) break;
    }
    return f;
}

void validate_training(const TrainingSet& train, const ParameterSpace& space) {
    if (train.inputs.size() != train.costs.size()) {
        throw std::invalid_argument("TrainingSet: inputs/costs length mismatch");
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train.inputs[i].size() != space.size()) {
            throw std::invalid_argument("TrainingSet: input dimension mismatch at index " +
                                        std::to_string(i));
        }
        if (!space.contains(train.inputs[i], 1e-8)) {
            throw std::invalid_argument("TrainingSet: input outside bounds at index " +
                                        std::to_string(i));
        }
        if (!std::isfinite(train.costs[i])) {
            throw std::invalid_argument("TrainingSet: non-finite cost at index " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
        for (std::size_t j = i + 1; j < train.size(); ++j) {
            if (train.inputs[i] == train.inputs[j] && train.costs[i] != train.costs[j]) {
                throw std::invalid_argument(
                    "TrainingSet: duplicate input with conflicting costs at indices " +
                    std::to_string(i) + ", " + std::to_string(j));
            }
        }
    }
}

GprModel condition_model(const TrainingSet& train, const ParameterSpace& space,
                         const KernelHyperparams& hyper) {
    GprModel m;
    m.space = space;
    m.train = train;
    m.hyper = hyper;
    m.unit_inputs = scale_inputs(train, space);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        train.costs.data(), static_cast<Eigen::Index>(train.costs.size()));
    m.prior_mean = y.mean();
    const Eigen::VectorXd y_centered = y.array() - m.prior_mean;
    const auto d2 = squared_distances(m.unit_inputs);
    const Factorization f =
        factorize(kernel_matrix(d2, hyper), y_centered, hyper.noise_variance, hyper.signal_variance);
    if (!f.ok) {
        std::ostringstream msg;
        msg << "GPR factorization failed after jitter escalation (n=" << train.size()
            << ", signal=" << hyper.signal_variance << ", noise=" << hyper.noise_variance << ")";
        throw std::runtime_error(msg.str());
    }
    m.chol_lower = f.chol_lower;
    m.alpha_weights = f.alpha;
    m.jitter = f.jitter;
    m.log_marginal = f.log_marginal;
    return m;
}

Prediction predict_unit(const GprModel& m, const double* u, bool need_std) {
    const Eigen::Index n = m.unit_inputs.rows();
    const Eigen::Index dim = m.unit_inputs.cols();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index d = 0; d < dim; ++d) {
            const double r = (u[d] - m.unit_inputs(i, d)) / m.hyper.length_scales[static_cast<std::size_t>(d)];
            s += r * r;
        }
        kstar(i) = m.hyper.signal_variance * std::exp(-0.5 * s);
    }
    Prediction p;
    p.mean = m.prior_mean + kstar.dot(m.alpha_weights);
    if (need_std) {
        const Eigen::VectorXd v = m.chol_lower.triangularView<Eigen::Lower>().solve(kstar);
        p.stddev = std::sqrt(std::max(0.0, m.hyper.signal_variance - v.squaredNorm()));
    }
    return p;
}

double unit_distance(const std::vector<double>& a, const Eigen::MatrixXd& rows, Eigen::Index i) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < rows.cols(); ++d) {
        const double r = a[static_cast<std::size_t>(d)] - rows(i, d);
        s += r * r;
    }
    return std::sqrt(s);
}

double unit_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double r = a[d] - b[d];
        s += r * r;
    }
    return std::sqrt(s);
}

}  // namespace

void ParameterSpace::validate() const {
    if (dims.empty()) throw std::invalid_argument("ParameterSpace: need at least one dimension");
    for (const auto& d : dims) {
        if (d.name.empty()) throw std::invalid_argument("ParameterSpace: empty dimension name");
        if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper)) {
            throw std::invalid_argument("ParameterSpace: bad bounds for '" + d.name + "'");
        }
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        for (std::size_t j = i + 1; j < dims.size(); ++j) {
            if (dims[i].name == dims[j].name) {
                throw std::invalid_argument("ParameterSpace: duplicate name '" + dims[i].name + "'");
            }
        }
    }
}

int ParameterSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::vector<double> ParameterSpace::to_unit(const std::vector<double>& raw) const {
    if (raw.size() != dims.size()) throw std::invalid_argument("to_unit: dimension mismatch");
    std::vector<double> u(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        u[i] = (raw[i] - dims[i].lower) / (dims[i].upper - dims[i].lower);
    }
    return u;
}

std::vector<double> ParameterSpace::from_unit(const std::vector<double>& unit) const {
    if (unit.size() != dims.size()) throw std::invalid_argument("from_unit: dimension mismatch");
    std::vector<double> raw(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) {
        raw[i] = dims[i].lower + unit[i] * (dims[i].upper - dims[i].lower);
    }
    return raw;
}

bool ParameterSpace::contains(const std::vector<double>& raw, double unit_tol) const {
    if (raw.size() != dims.size()) return false;
    const auto u = to_unit(raw);
    for (double v : u) {
        if (!(v >= -unit_tol && v <= 1.0 + unit_tol)) return false;
    }
    return true;
}

void TrainingSet::add(std::vector<double> input, double cost) {
    inputs.push_back(std::move(input));
    costs.push_back(cost);
}

double log_marginal_likelihood(const TrainingSet& train, const ParameterSpace& space,
                               const KernelHyperparams& hyper) {
    const Eigen::MatrixXd x = scale_inputs(train, space);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        train.costs.data(), static_cast<Eigen::Index>(train.costs.size()));
    const Eigen::VectorXd y_centered = y.array() - y.mean();
    const Factorization f = factorize(kernel_matrix(squared_distances(x), hyper), y_centered,
                                      hyper.noise_variance, hyper.signal_variance);
    return f.ok ? f.log_marginal : -std::numeric_limits<double>::infinity();
}

GprModel fit(const TrainingSet& train, const ParameterSpace& space, const FitOptions& opts) {
    space.validate();
    validate_training(train, space);
    if (train.size() < 2) throw std::invalid_argument("fit: need at least 2 training points");

    const Eigen::MatrixXd x = scale_inputs(train, space);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        train.costs.data(), static_cast<Eigen::Index>(train.costs.size()));
    const Eigen::VectorXd y_centered = y.array() - y.mean();
    const auto d2 = squared_distances(x);

    const HyperCoder coder{opts.bounds, space.size()};
    const auto objective = [&](const std::vector<double>& u) {
        const KernelHyperparams h = coder.decode(u);
        const Factorization f = factorize(kernel_matrix(d2, h), y_centered, h.noise_variance,
                                          h.signal_variance);
        return f.ok ? -f.log_marginal : 1e30;
    };

    std::vector<std::vector<double>> starts;
    if (opts.warm_start && opts.warm_start->length_scales.size() == space.size()) {
        starts.push_back(coder.encode(*opts.warm_start));
    }
    optim::HaltonSampler sampler(coder.size(), mix_seed(opts.seed, 0x68797065ull));
    while (static_cast<int>(starts.size()) < std::max(1, opts.multi_starts)) {
        starts.push_back(sampler.next());
    }

    std::vector<optim::NelderMeadResult> results(starts.size());
    optim::NelderMeadOptions nm;
    nm.max_evals = opts.search_max_evals;
    util::parallel_for(starts.size(), opts.workers,
                       [&](std::size_t i) { results[i] = optim::nelder_mead(objective, starts[i], nm); });

    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].f < results[best].f) best = i;
    }
    if (results[best].f >= 1e30) {
        throw std::runtime_error("fit: likelihood search found no factorizable hyperparameters");
    }
    return condition_model(train, space, coder.decode(results[best].x));
}

GprModel fit_with_hyperparams(const TrainingSet& train, const ParameterSpace& space,
                              const KernelHyperparams& hyper) {
    space.validate();
    validate_training(train, space);
    if (train.size() == 0) {
        throw std::invalid_argument("fit_with_hyperparams: empty training set");
    }
    if (hyper.length_scales.size() != space.size()) {
        throw std::invalid_argument("fit_with_hyperparams: length-scale dimension mismatch");
    }
    return condition_model(train, space, hyper);
}

Prediction predict(const GprModel& m, const std::vector<double>& point) {
    if (m.train.size() == 0 || m.chol_lower.rows() == 0) {
        throw std::invalid_argument("predict: model is not fitted");
    }
    if (!m.space.contains(point)) {
        throw std::invalid_argument("predict: query point outside parameter bounds");
    }
    const auto u = m.space.to_unit(point);
    return predict_unit(m, u.data(), true);
}

std::vector<std::vector<double>> propose(const GprModel& m, const std::vector<double>& n_sc_values,
                                         const ProposeOptions& opts) {
    if (m.train.size() == 0 || m.chol_lower.rows() == 0) {
        throw std::invalid_argument("propose: model is not fitted");
    }
    if (n_sc_values.empty()) throw std::invalid_argument("propose: n_sc_values must be nonempty");

    const std::size_t dim = m.space.size();
    optim::HaltonSampler sampler(dim, mix_seed(opts.seed, 0x61637175ull));
    optim::NelderMeadOptions nm;
    nm.max_evals = opts.search_max_evals;

    std::vector<std::vector<double>> chosen_units;
    std::vector<std::vector<double>> proposals;

    auto well_separated = [&](const std::vector<double>& u) {
        for (Eigen::Index i = 0; i < m.unit_inputs.rows(); ++i) {
            if (unit_distance(u, m.unit_inputs, i) < opts.min_separation) return false;
        }
        for (const auto& c : chosen_units) {
            if (unit_distance(u, c) < opts.min_separation) return false;
        }
        return true;
    };

    for (double n_sc : n_sc_values) {
        const bool need_std = n_sc != 0.0;
        const auto objective = [&](const std::vector<double>& u) {
            const Prediction p = predict_unit(m, u.data(), need_std);
            return p.mean - n_sc * p.stddev;
        };

        std::vector<optim::NelderMeadResult> runs;
        runs.reserve(static_cast<std::size_t>(opts.restarts));
        for (int r = 0; r < opts.restarts; ++r) {
            runs.push_back(optim::nelder_mead(objective, sampler.next(), nm));
        }
        std::vector<std::size_t> order(runs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return runs[a].f < runs[b].f; });

        // best minimizer wins; runner-ups (then fresh low-discrepancy points)
        // replace proposals that collide with known inputs
        const std::vector<double>* pick = nullptr;
        for (std::size_t i : order) {
            if (well_separated(runs[i].x)) {
                pick = &runs[i].x;
                break;
            }
        }
        std::vector<double> fresh;
        if (!pick) {
            for (int tries = 0; tries < 10000 && !pick; ++tries) {
                fresh = sampler.next();
                if (well_separated(fresh)) pick = &fresh;
            }
        }
        if (!pick) pick = &runs[order[0]].x;

        chosen_units.push_back(*pick);
        proposals.push_back(m.space.from_unit(*pick));
    }
    return proposals;
}

OptimizeResult optimize(const Evaluator& evaluate, const ParameterSpace& space,
                        const OptimizeOptions& opts) {
    space.validate();
    if (opts.n_sc.empty()) throw std::invalid_argument("optimize: n_sc list must be nonempty");
    const std::size_t dim = space.size();
    const int n_init = (opts.initial_design > 0) ? opts.initial_design
                                                 : 2 * static_cast<int>(dim) + 2;
    if (n_init < 2) throw std::invalid_argument("optimize: initial design must have >= 2 points");
    if (opts.budget < n_init) {
        throw std::invalid_argument("optimize: budget " + std::to_string(opts.budget) +
                                    " is smaller than the initial design " + std::to_string(n_init));
    }

    OptimizeResult result;
    TrainingSet train;
    std::vector<int> pending_callbacks = opts.callback_at;
    std::sort(pending_callbacks.begin(), pending_callbacks.end());

    auto evaluate_batch = [&](const std::vector<std::vector<double>>& points,
                              const std::vector<std::string>& origins) {
        const std::size_t base = result.history.size();
        result.history.resize(base + points.size());
        util::parallel_for(points.size(), opts.workers, [&](std::size_t i) {
            EvalRecord rec;
            rec.index = static_cast<int>(base + i);
            rec.params = points[i];
            rec.origin = origins[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const double c = evaluate(points[i]);
                if (!std::isfinite(c)) {
                    rec.ok = false;
                    rec.error = "evaluator returned non-finite cost";
                } else {
                    rec.ok = true;
                    rec.cost = c;
                }
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
            } catch (...) {
                rec.ok = false;
                rec.error = "unknown evaluator failure";
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            result.history[base + i] = std::move(rec);
        });
        for (std::size_t i = base; i < result.history.size(); ++i) {
            if (result.history[i].ok) {
                train.add(result.history[i].params, result.history[i].cost);
            }
        }
        while (!pending_callbacks.empty() &&
               static_cast<int>(result.history.size()) >= pending_callbacks.front()) {
            if (opts.callback) {
                opts.callback(ProgressSnapshot{static_cast<int>(result.history.size()), space, train});
            }
            pending_callbacks.erase(pending_callbacks.begin());
        }
    };

    // space-filling initial design
    {
        optim::HaltonSampler design(dim, mix_seed(opts.seed, 0x696e6974ull));
        std::vector<std::vector<double>> points;
        std::vector<std::string> origins;
        for (int i = 0; i < n_init; ++i) {
            points.push_back(space.from_unit(design.next()));
            origins.emplace_back("initial");
        }
        evaluate_batch(points, origins);
    }

    KernelHyperparams hyper;
    bool have_hyper = false;
    std::size_t last_full_fit = 0;
    std::uint64_t round = 0;
    GprModel model;

    auto full_fit = [&]() {
        FitOptions fo = opts.fit_options;
        fo.workers = opts.workers;
        fo.seed = mix_seed(opts.seed, 0xf17 + round);
        fo.warm_start = have_hyper ? &hyper : nullptr;
        model = fit(train, space, fo);
        hyper = model.hyper;
        have_hyper = true;
        last_full_fit = train.size();
        result.hyper_trace.push_back({train.size(), hyper, model.log_marginal});
    };

    while (static_cast<int>(result.history.size()) < opts.budget) {
        ++round;
        if (train.size() < 2) {
            // not enough successful evaluations to condition a model; keep
            // sampling the design sequence
            optim::HaltonSampler extra(dim, mix_seed(opts.seed, 0x65787472ull + round));
            evaluate_batch({space.from_unit(extra.next())}, {"initial"});
            continue;
        }
        if (!have_hyper || static_cast<double>(train.size()) >=
                               opts.refit_growth * static_cast<double>(last_full_fit)) {
            full_fit();
        } else {
            model = fit_with_hyperparams(train, space, hyper);
        }

        const std::size_t remaining =
            static_cast<std::size_t>(opts.budget) - result.history.size();
        std::vector<double> round_nsc(opts.n_sc.begin(),
                                      opts.n_sc.begin() +
                                          static_cast<std::ptrdiff_t>(std::min(remaining, opts.n_sc.size())));
        ProposeOptions po = opts.propose_options;
        po.seed = mix_seed(opts.seed, 0x70726f70ull + round);
        const auto proposals = propose(model, round_nsc, po);

        std::vector<std::string> origins;
        origins.reserve(proposals.size());
        for (double n_sc : round_nsc) origins.push_back("nsc=" + util::format_double(n_sc));
        evaluate_batch(proposals, origins);
    }

    if (train.size() >= 2) {
        full_fit();
        result.model = model;
    }

    for (const auto& rec : result.history) {
        if (rec.ok && rec.cost < result.best_cost) {
            result.best_cost = rec.cost;
            result.best_point = rec.params;
        }
    }
    if (result.best_point.empty()) {
        throw std::runtime_error("optimize: every evaluation failed; no best point available");
    }
    return result;
}

void write_history(std::ostream& out, const ParameterSpace& space,
                   const std::vector<EvalRecord>& history) {
    out << "# specfit history v1\n";
    for (const auto& d : space.dims) {
        out << "# dim: " << d.name << ' ' << util::format_double(d.lower) << ' '
            << util::format_double(d.upper) << ' ' << (d.unit.empty() ? "-" : d.unit) << '\n';
    }
    out << "# columns: index origin";
    for (const auto& d : space.dims) out << ' ' << d.name;
    out << " cost status\n";
    for (const auto& rec : history) {
        out << rec.index << ' ' << rec.origin;
        for (double p : rec.params) out << ' ' << util::format_double(p);
        out << ' ' << util::format_double(rec.cost) << ' ' << (rec.ok ? "ok" : "failed") << '\n';
    }
}

void write_timings(std::ostream& out, const std::vector<EvalRecord>& history) {
    out << "# specfit timings v1\n# columns: index wall_ms\n";
    for (const auto& rec : history) {
        out << rec.index << ' ' << util::format_double(rec.wall_ms) << '\n';
    }
}

}  // namespace specfit::gpr
