// specfit — fit vibronic monomer/dimer parameters to absorption spectra with
// a Gaussian-process surrogate, and map the resulting cost landscapes.

#include "specfit/run.hpp"
#include "specfit/util.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::vector<double> params_from_flags(const std::vector<std::string>& assignments,
                                      specfit::run::Stage stage, const char* flag) {
    std::map<std::string, double> values;
    for (const std::string& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) {
            throw specfit::run::ConfigError(std::string(flag) + ": expected name=value, got '" + a +
                                            "'");
        }
        values[a.substr(0, eq)] = std::stod(a.substr(eq + 1));
    }
    std::vector<double> point;
    for (const auto& dim : specfit::run::stage_dims(stage)) {
        const auto it = values.find(dim.name);
        if (it == values.end()) {
            throw specfit::run::ConfigError(std::string(flag) + ": missing '" + dim.name + "'");
        }
        point.push_back(it->second);
        values.erase(it);
    }
    if (!values.empty()) {
        throw specfit::run::ConfigError(std::string(flag) + ": unknown parameter '" +
                                        values.begin()->first + "'");
    }
    return point;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral parameter extraction with GPR cost-landscape mapping"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int workers_override = 0;
    std::string output_dir_override;

    auto* fit = app.add_subcommand("fit", "run a monomer or dimer fit from a config file");
    fit->add_option("--config", config_path, "JSON run config")->required();
    fit->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    fit->add_option("--workers", workers_override, "override the worker count");
    fit->add_option("--output-dir", output_dir_override, "override the output directory");

    std::string manifest_path;
    std::vector<std::string> cut_specs;
    int cut_points = 25;
    bool exact = false;
    bool full_grid = false;
    int full_grid_points = 11;
    std::size_t node_cap = 200000;
    int ls_workers = 1;
    std::string ls_output;

    auto* landscape = app.add_subcommand("landscape", "evaluate cost landscapes for a finished fit");
    landscape->add_option("--manifest", manifest_path, "manifest.json from a fit run")->required();
    landscape->add_option("--cut", cut_specs, "parameter pair 'a:b' (repeatable; default all pairs)");
    landscape->add_option("--points", cut_points, "grid points per cut axis (default 25)");
    landscape->add_flag("--exact", exact, "also evaluate the simulator on the grids (cached)");
    landscape->add_flag("--full-grid", full_grid, "full-dimensional grid over all parameters");
    landscape->add_option("--grid-points", full_grid_points,
                          "points per axis for --full-grid (default 11)");
    landscape->add_option("--cap", node_cap, "maximum number of exact-grid nodes");
    landscape->add_option("--workers", ls_workers, "worker threads for exact grids");
    landscape->add_option("--output-dir", ls_output, "output directory (default: manifest dir)");

    std::string sim_stage = "monomer";
    std::vector<std::string> sim_params;
    std::vector<std::string> sim_monomer;
    std::string sim_monomer_manifest;
    int sim_n_max = specfit::model::BasisSpec{}.n_max;
    double sim_nu_lo = 0.0, sim_nu_hi = 0.0;
    int sim_nu_points = 2001;
    std::string sim_out, sim_reference, sim_correlation;

    auto* simulate = app.add_subcommand("simulate", "compute one spectrum from given parameters");
    simulate->add_option("--stage", sim_stage, "monomer or dimer")->required();
    simulate->add_option("--set", sim_params, "stage parameter, name=value (repeatable)")->required();
    simulate->add_option("--monomer", sim_monomer, "fixed monomer parameter for the dimer stage");
    simulate->add_option("--monomer-manifest", sim_monomer_manifest,
                         "monomer fit manifest supplying the fixed parameters");
    simulate->add_option("--n-max", sim_n_max, "vibrational basis truncation");
    simulate->add_option("--nu-lo", sim_nu_lo, "frequency grid start, cm-1");
    simulate->add_option("--nu-hi", sim_nu_hi, "frequency grid end, cm-1");
    simulate->add_option("--nu-points", sim_nu_points, "frequency grid points (default 2001)");
    simulate->add_option("--out", sim_out, "output spectrum file")->required();
    simulate->add_option("--reference", sim_reference, "reference spectrum; prints the cost");
    simulate->add_option("--correlation-out", sim_correlation, "dump the dipole correlation");

    auto* validate = app.add_subcommand("validate", "dry-run checks for a run config");
    validate->add_option("--config", config_path, "JSON run config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) {
            specfit::run::RunConfig config = specfit::run::load_config(config_path);
            if (seed_given) config.seed = seed_override;
            if (workers_override > 0) config.workers = workers_override;
            if (!output_dir_override.empty()) config.output_dir = output_dir_override;
            specfit::run::run_fit(config, std::cout);
            return kExitOk;
        }
        if (landscape->parsed()) {
            specfit::run::LandscapeOptions opts;
            opts.manifest_path = manifest_path;
            for (const std::string& c : cut_specs) {
                const auto sep = c.find(':');
                if (sep == std::string::npos) {
                    throw specfit::run::ConfigError("--cut expects 'a:b', got '" + c + "'");
                }
                opts.cuts.emplace_back(c.substr(0, sep), c.substr(sep + 1));
            }
            opts.cut_points = cut_points;
            opts.exact = exact;
            opts.full_grid = full_grid;
            opts.full_grid_points = full_grid_points;
            opts.node_cap = node_cap;
            opts.workers = ls_workers;
            if (!ls_output.empty()) opts.output_dir = ls_output;
            specfit::run::run_landscape(opts, std::cout);
            return kExitOk;
        }
        if (simulate->parsed()) {
            specfit::run::SimulateOptions opts;
            opts.stage = specfit::run::stage_from_string(sim_stage);
            opts.params = params_from_flags(sim_params, opts.stage, "--set");
            if (opts.stage == specfit::run::Stage::dimer) {
                if (!sim_monomer.empty()) {
                    opts.monomer = specfit::run::monomer_from_point(
                        params_from_flags(sim_monomer, specfit::run::Stage::monomer, "--monomer"));
                } else if (!sim_monomer_manifest.empty()) {
                    const auto restored = specfit::run::restore_run(sim_monomer_manifest);
                    if (restored.config.stage != specfit::run::Stage::monomer) {
                        throw specfit::run::ConfigError(
                            "--monomer-manifest must point to a monomer fit");
                    }
                    opts.monomer = specfit::run::monomer_from_point(restored.best_point);
                }
            }
            opts.basis.n_max = sim_n_max;
            if (sim_nu_lo != 0.0 || sim_nu_hi != 0.0) {
                opts.nu_lo = sim_nu_lo;
                opts.nu_hi = sim_nu_hi;
            }
            opts.nu_points = sim_nu_points;
            opts.out_path = sim_out;
            if (!sim_reference.empty()) opts.reference_path = sim_reference;
            if (!sim_correlation.empty()) opts.correlation_path = sim_correlation;
            specfit::run::run_simulate(opts, std::cout);
            return kExitOk;
        }
        if (validate->parsed()) {
            const auto report = specfit::run::run_validate(config_path, std::cout);
            return report.ok ? kExitOk : kExitValidation;
        }
    } catch (const specfit::run::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
