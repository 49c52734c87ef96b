// run.hpp — config-driven orchestration of the two-stage workflow:
// monomer fit -> dimer fit -> landscapes, plus simulate/validate utilities.

#pragma once

#include "specfit/cost.hpp"
#include "specfit/gpr.hpp"
#include "specfit/landscape.hpp"
#include "specfit/model.hpp"
#include "specfit/spectra.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace specfit::run {

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Stage { monomer, dimer };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

// Canonical dimension order for each stage; bounds, history columns, and
// landscape axes all follow it.
const std::vector<gpr::ParameterDim>& stage_dims(Stage s);

model::MonomerParams monomer_from_point(const std::vector<double>& p);
model::DimerParams dimer_from_point(const std::vector<double>& p);
std::vector<double> point_from_monomer(const model::MonomerParams& p);

struct GridSettings {
    double phase_cap = 0.1;
    double window_decay = spectra::kMinWindowDecay;
};

struct RunConfig {
    Stage stage = Stage::monomer;
    std::filesystem::path spectrum_path;
    std::filesystem::path output_dir;
    std::uint64_t seed = 1;
    int budget = 1000;
    std::vector<double> n_sc;  // empty -> stage default
    gpr::ParameterSpace space;
    std::optional<model::MonomerParams> monomer_params;          // dimer stage
    std::optional<std::filesystem::path> monomer_manifest_path;  // dimer stage
    model::BasisSpec basis{};
    GridSettings grids{};
    // explicit common frequency grid; when absent it spans the data support
    std::optional<double> nu_lo;
    std::optional<double> nu_hi;
    int nu_points = 2001;
    int workers = 1;
    int initial_design = 0;
    double consistency_threshold = cost::kConsistencyThreshold;
    double inner_threshold = cost::kInnerThreshold;

    void validate() const;
};

// Stage defaults for the acquisition scaling values.
std::vector<double> default_n_sc(Stage s);

RunConfig load_config(const std::filesystem::path& file);
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

// The (parameter set -> cost) evaluator: simulate at the point, compare with
// the reference spectrum on the common grid. Pure and safe to call
// concurrently.
struct SpectrumObjective {
    Stage stage = Stage::monomer;
    spectra::Spectrum reference;  // normalized on `nu`
    std::vector<double> nu;
    model::BasisSpec basis{};
    GridSettings grids{};
    std::optional<model::MonomerParams> monomer;  // fixed parameters, dimer stage

    double operator()(const std::vector<double>& point) const;
    spectra::Spectrum simulate(const std::vector<double>& point) const;
    // stable tag identifying the model configuration behind cached exact costs
    std::string config_tag() const;
};

struct FitOutcome {
    std::filesystem::path manifest_path;
    nlohmann::json manifest;
    gpr::OptimizeResult result;
};

// Runs the stage-appropriate optimization and writes history, timings, the
// best-fit spectrum, and a manifest into the output directory.
FitOutcome run_fit(const RunConfig& config, std::ostream& log);

// Rebuilds the fitted model and the objective from a fit manifest.
struct RestoredRun {
    RunConfig config;
    nlohmann::json manifest;
    gpr::GprModel model;
    SpectrumObjective objective;
    std::vector<double> best_point;
    double best_cost = 0.0;
};
RestoredRun restore_run(const std::filesystem::path& manifest_path);

struct LandscapeOptions {
    std::filesystem::path manifest_path;
    std::vector<std::pair<std::string, std::string>> cuts;  // empty -> all pairs
    int cut_points = 25;
    bool exact = false;            // also evaluate the simulator on the cut grids
    bool full_grid = false;        // full-dimensional surrogate (+exact) grid
    int full_grid_points = 11;
    std::size_t node_cap = 200000;
    int workers = 1;
    std::optional<std::filesystem::path> output_dir;  // default: manifest directory
};

nlohmann::json run_landscape(const LandscapeOptions& opts, std::ostream& log);

struct SimulateOptions {
    Stage stage = Stage::monomer;
    std::vector<double> params;                   // stage order
    std::optional<model::MonomerParams> monomer;  // dimer stage
    model::BasisSpec basis{};
    GridSettings grids{};
    std::optional<double> nu_lo;
    std::optional<double> nu_hi;
    int nu_points = 2001;
    std::filesystem::path out_path;
    std::optional<std::filesystem::path> reference_path;    // also report the cost
    std::optional<std::filesystem::path> correlation_path;  // debug dump
};

// Writes the normalized spectrum; returns the cost against the reference when
// one was supplied.
std::optional<double> run_simulate(const SimulateOptions& opts, std::ostream& log);

struct ValidationReport {
    struct Entry {
        std::string check;
        bool ok = true;
        bool warning = false;
        std::string detail;
    };
    std::vector<Entry> entries;
    bool ok = true;  // no hard failures

    void add(const std::string& check, bool ok, const std::string& detail, bool warning = false);
};

// Dry-run checks: config schema, file readability, basis convergence at the
// demanding corner of the bounds, and a runtime estimate.
ValidationReport run_validate(const std::filesystem::path& config_path, std::ostream& log);

}  // namespace specfit::run
