// gpr.hpp — Gaussian process regression over a bounded parameter space with
// an anisotropic squared-exponential kernel, plus the acquisition-driven
// sampling loop that proposes new parameter sets from
//   f(P, n_sc) = predicted_cost(P) - n_sc * predicted_uncertainty(P).

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace specfit::gpr {

struct ParameterDim {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    std::string unit;
};

struct ParameterSpace {
    std::vector<ParameterDim> dims;

    std::size_t size() const { return dims.size(); }
    void validate() const;
    int index_of(const std::string& name) const;  // -1 when absent
    std::vector<double> to_unit(const std::vector<double>& raw) const;
    std::vector<double> from_unit(const std::vector<double>& unit) const;
    bool contains(const std::vector<double>& raw, double unit_tol = 1e-9) const;
};

struct TrainingSet {
    std::vector<std::vector<double>> inputs;  // raw coordinates
    std::vector<double> costs;

    std::size_t size() const { return costs.size(); }
    void add(std::vector<double> input, double cost);
};

// Kernel hyperparameters; length scales live in unit-hypercube coordinates.
struct KernelHyperparams {
    double signal_variance = 1.0;
    std::vector<double> length_scales;
    double noise_variance = 1e-10;
};

inline constexpr double kNoiseFloor = 1e-10;

struct HyperBounds {
    double length_scale_lo = 1e-2;
    double length_scale_hi = 1e1;
    double signal_lo = 1e-4;
    double signal_hi = 4.0;
    double noise_lo = kNoiseFloor;
    double noise_hi = 1e-2;
};

struct FitOptions {
    int multi_starts = 8;   // includes the warm start when one is available
    int search_max_evals = 40;
    HyperBounds bounds{};
    std::uint64_t seed = 1;
    const KernelHyperparams* warm_start = nullptr;
    int workers = 1;
};

struct GprModel {
    ParameterSpace space;
    TrainingSet train;
    KernelHyperparams hyper;
    double prior_mean = 0.0;        // constant mean, set to the mean observed cost
    double log_marginal = -std::numeric_limits<double>::infinity();
    double jitter = 0.0;            // extra diagonal added to make the factorization succeed

    Eigen::MatrixXd unit_inputs;    // n x D, scaled coordinates
    Eigen::MatrixXd chol_lower;     // L with L L^T = K + (noise + jitter) I
    Eigen::VectorXd alpha_weights;  // solve of centered costs

    std::size_t size() const { return train.size(); }
};

struct Prediction {
    double mean = 0.0;
    double stddev = 0.0;  // standard deviation of the latent posterior
};

// Maximizes the log marginal likelihood over a log-scale hyperparameter box
// by multi-start Nelder-Mead.
GprModel fit(const TrainingSet& train, const ParameterSpace& space, const FitOptions& opts = {});

// Conditions on the data with fixed hyperparameters (no likelihood search).
GprModel fit_with_hyperparams(const TrainingSet& train, const ParameterSpace& space,
                              const KernelHyperparams& hyper);

double log_marginal_likelihood(const TrainingSet& train, const ParameterSpace& space,
                               const KernelHyperparams& hyper);

Prediction predict(const GprModel& m, const std::vector<double>& point);

struct ProposeOptions {
    int restarts = 32;  // multi-start local searches per n_sc value
    int search_max_evals = 60;
    double min_separation = 1e-6;  // unit-cube distance to existing inputs
    std::uint64_t seed = 1;
};

// One acquisition minimizer per n_sc value, deduplicated against the training
// inputs and against each other.
std::vector<std::vector<double>> propose(const GprModel& m, const std::vector<double>& n_sc_values,
                                         const ProposeOptions& opts = {});

struct EvalRecord {
    int index = 0;
    std::vector<double> params;
    double cost = std::numeric_limits<double>::quiet_NaN();
    std::string origin;  // "initial" or "nsc=<value>"
    bool ok = false;
    std::string error;
    double wall_ms = 0.0;  // reported separately from the deterministic history
};

struct HyperTraceEntry {
    std::size_t n_train = 0;
    KernelHyperparams hyper;
    double log_marginal = 0.0;
};

struct ProgressSnapshot {
    int evaluations_done = 0;
    const ParameterSpace& space;
    const TrainingSet& train;  // successful evaluations so far
};

using Evaluator = std::function<double(const std::vector<double>&)>;
using ProgressCallback = std::function<void(const ProgressSnapshot&)>;

struct OptimizeOptions {
    int budget = 1000;
    std::vector<double> n_sc = {0.0, 1.0, 2.0, 3.0};
    std::uint64_t seed = 1;
    int initial_design = 0;  // 0 -> 2*D + 2 points
    int workers = 1;
    double refit_growth = 1.6;  // full hyperparameter refit when n grows by this factor
    FitOptions fit_options{};
    ProposeOptions propose_options{};
    std::vector<int> callback_at;  // evaluation counts that trigger the callback
    ProgressCallback callback;
};

struct OptimizeResult {
    std::vector<double> best_point;
    double best_cost = std::numeric_limits<double>::infinity();
    GprModel model;  // final fit over all successful evaluations
    std::vector<EvalRecord> history;
    std::vector<HyperTraceEntry> hyper_trace;
};

// Space-filling initial batch followed by fit/propose/evaluate rounds until
// the budget is exhausted. Deterministic for a fixed seed; evaluator failures
// are recorded and skipped.
OptimizeResult optimize(const Evaluator& evaluate, const ParameterSpace& space,
                        const OptimizeOptions& opts);

// Deterministic delimited-text export (no wall times; those go to the
// timings writer so that identical runs produce identical history bytes).
void write_history(std::ostream& out, const ParameterSpace& space,
                   const std::vector<EvalRecord>& history);
void write_timings(std::ostream& out, const std::vector<EvalRecord>& history);

}  // namespace specfit::gpr
