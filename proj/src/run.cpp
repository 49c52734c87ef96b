#include "specfit/run.hpp"

#include "specfit/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace specfit::run {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Stage s) { return s == Stage::monomer ? "monomer" : "dimer"; }

Stage stage_from_string(const std::string& s) {
    if (s == "monomer") return Stage::monomer;
    if (s == "dimer") return Stage::dimer;
    throw ConfigError("unknown stage '" + s + "' (expected monomer or dimer)");
}

const std::vector<gpr::ParameterDim>& stage_dims(Stage s) {
    static const std::vector<gpr::ParameterDim> monomer = {
        {"epsilon_e", 0.0, 1.0, "cm-1"}, {"omega_vib", 0.0, 1.0, "cm-1"},
        {"huang_rhys", 0.0, 1.0, "-"},   {"gamma", 0.0, 1.0, "cm-1"},
        {"sigma_m", 0.0, 1.0, "cm-1"},
    };
    static const std::vector<gpr::ParameterDim> dimer = {
        {"coupling_v", 0.0, 1.0, "cm-1"},
        {"delta", 0.0, 1.0, "cm-1"},
        {"alpha", 0.0, 1.0, "deg"},
        {"sigma_d", 0.0, 1.0, "cm-1"},
    };
    return s == Stage::monomer ? monomer : dimer;
}

model::MonomerParams monomer_from_point(const std::vector<double>& p) {
    if (p.size() != 5) throw std::invalid_argument("monomer point needs 5 coordinates");
    return model::MonomerParams{p[0], p[1], p[2], p[3], p[4]};
}

model::DimerParams dimer_from_point(const std::vector<double>& p) {
    if (p.size() != 4) throw std::invalid_argument("dimer point needs 4 coordinates");
    return model::DimerParams{p[0], p[1], p[2], p[3]};
}

std::vector<double> point_from_monomer(const model::MonomerParams& p) {
    return {p.epsilon_e, p.omega_vib, p.huang_rhys, p.gamma, p.sigma_m};
}

std::vector<double> default_n_sc(Stage s) {
    if (s == Stage::monomer) return {0.0, 1.0, 2.0, 3.0};
    return {0.0, 20.0, 40.0, 60.0};
}

void RunConfig::validate() const {
    space.validate();
    const auto& names = stage_dims(stage);
    if (space.size() != names.size()) {
        throw ConfigError("bounds: expected " + std::to_string(names.size()) +
                          " dimensions for stage " + to_string(stage));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (space.dims[i].name != names[i].name) {
            throw ConfigError("bounds: dimension " + std::to_string(i) + " must be '" +
                              names[i].name + "'");
        }
    }
    if (spectrum_path.empty()) throw ConfigError("spectrum: path is required");
    if (output_dir.empty()) throw ConfigError("output_dir is required");
    if (budget < 2) throw ConfigError("budget must be >= 2");
    const int n_init = initial_design > 0 ? initial_design : 2 * static_cast<int>(space.size()) + 2;
    if (budget < n_init) {
        throw ConfigError("budget " + std::to_string(budget) + " is smaller than the initial design " +
                          std::to_string(n_init));
    }
    if (nu_points < 2) throw ConfigError("nu_grid.points must be >= 2");
    if ((nu_lo.has_value()) != (nu_hi.has_value())) {
        throw ConfigError("nu_grid: lo and hi must be given together");
    }
    if (nu_lo && !(*nu_lo < *nu_hi)) throw ConfigError("nu_grid: need lo < hi");
    basis.validate();
    if (!(grids.phase_cap > 0.0)) throw ConfigError("time_grid.phase_cap must be > 0");
    if (!(grids.window_decay >= spectra::kMinWindowDecay)) {
        throw ConfigError("time_grid.window_decay must be >= " +
                          util::format_double(spectra::kMinWindowDecay));
    }
    if (stage == Stage::dimer && !monomer_params && !monomer_manifest_path) {
        throw ConfigError("dimer stage requires monomer_params or monomer_manifest");
    }
    if (!(consistency_threshold > 0.0 && consistency_threshold <= 2.0) ||
        !(inner_threshold > 0.0 && inner_threshold <= consistency_threshold)) {
        throw ConfigError("thresholds: need 0 < inner <= consistency <= 2");
    }
}

namespace {

const json& require_key(const json& j, const std::string& key, const std::string& context) {
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(context + ": missing key '" + key + "'");
    return *it;
}

model::MonomerParams monomer_params_from_json(const json& j, const std::string& context) {
    model::MonomerParams p;
    p.epsilon_e = require_key(j, "epsilon_e", context).get<double>();
    p.omega_vib = require_key(j, "omega_vib", context).get<double>();
    p.huang_rhys = require_key(j, "huang_rhys", context).get<double>();
    p.gamma = require_key(j, "gamma", context).get<double>();
    p.sigma_m = require_key(j, "sigma_m", context).get<double>();
    p.validate();
    return p;
}

json monomer_params_to_json(const model::MonomerParams& p) {
    return json{{"epsilon_e", p.epsilon_e},
                {"omega_vib", p.omega_vib},
                {"huang_rhys", p.huang_rhys},
                {"gamma", p.gamma},
                {"sigma_m", p.sigma_m}};
}

fs::path resolve_path(const std::string& p, const fs::path& base) {
    fs::path path(p);
    if (path.is_absolute()) return path;
    return base / path;
}

}  // namespace

RunConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + file.string() + ": " + e.what());
    }
    return config_from_json(j, file.has_parent_path() ? file.parent_path() : fs::path("."));
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
    RunConfig c;
    c.stage = stage_from_string(require_key(j, "stage", "config").get<std::string>());
    c.spectrum_path = resolve_path(require_key(j, "spectrum", "config").get<std::string>(), base_dir);
    c.output_dir = resolve_path(require_key(j, "output_dir", "config").get<std::string>(), base_dir);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("budget")) c.budget = j.at("budget").get<int>();
    if (j.contains("n_sc")) c.n_sc = j.at("n_sc").get<std::vector<double>>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("initial_design")) c.initial_design = j.at("initial_design").get<int>();
    if (j.contains("basis")) c.basis.n_max = require_key(j.at("basis"), "n_max", "basis").get<int>();
    if (j.contains("time_grid")) {
        const json& g = j.at("time_grid");
        if (g.contains("phase_cap")) c.grids.phase_cap = g.at("phase_cap").get<double>();
        if (g.contains("window_decay")) c.grids.window_decay = g.at("window_decay").get<double>();
    }
    if (j.contains("nu_grid")) {
        const json& g = j.at("nu_grid");
        if (g.contains("lo")) c.nu_lo = g.at("lo").get<double>();
        if (g.contains("hi")) c.nu_hi = g.at("hi").get<double>();
        if (g.contains("points")) c.nu_points = g.at("points").get<int>();
    }
    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        if (t.contains("consistency")) c.consistency_threshold = t.at("consistency").get<double>();
        if (t.contains("inner")) c.inner_threshold = t.at("inner").get<double>();
    }

    const json& bounds = require_key(j, "bounds", "config");
    for (const auto& dim : stage_dims(c.stage)) {
        const json& b = require_key(bounds, dim.name, "bounds");
        if (!b.is_array() || b.size() != 2) {
            throw ConfigError("bounds." + dim.name + ": expected [lower, upper]");
        }
        c.space.dims.push_back({dim.name, b[0].get<double>(), b[1].get<double>(), dim.unit});
    }
    for (const auto& [key, value] : bounds.items()) {
        (void)value;
        if (c.space.index_of(key) < 0) {
            throw ConfigError("bounds: unknown dimension '" + key + "' for stage " +
                              to_string(c.stage));
        }
    }

    if (j.contains("monomer_params")) {
        c.monomer_params = monomer_params_from_json(j.at("monomer_params"), "monomer_params");
    }
    if (j.contains("monomer_manifest")) {
        c.monomer_manifest_path =
            resolve_path(j.at("monomer_manifest").get<std::string>(), base_dir);
    }
    c.validate();
    return c;
}

double SpectrumObjective::operator()(const std::vector<double>& point) const {
    return cost::spectral_cost(reference, simulate(point));
}

spectra::Spectrum SpectrumObjective::simulate(const std::vector<double>& point) const {
    if (stage == Stage::monomer) {
        const model::MonomerParams p = monomer_from_point(point);
        const spectra::TimeGrid g = spectra::suggest_time_grid(
            p, nullptr, basis, nu.front(), nu.back(), grids.phase_cap, grids.window_decay);
        return spectra::simulate_monomer(p, basis, g, nu);
    }
    if (!monomer) throw std::invalid_argument("dimer objective without monomer parameters");
    const model::DimerParams pd = dimer_from_point(point);
    const spectra::TimeGrid g = spectra::suggest_time_grid(
        *monomer, &pd, basis, nu.front(), nu.back(), grids.phase_cap, grids.window_decay);
    return spectra::simulate_dimer(*monomer, pd, basis, g, nu);
}

std::string SpectrumObjective::config_tag() const {
    std::string tag = "stage=" + to_string(stage) + ";n_max=" + std::to_string(basis.n_max) +
                      ";cap=" + util::format_double(grids.phase_cap) +
                      ";decay=" + util::format_double(grids.window_decay) + ";nu=" +
                      util::format_double(nu.front()) + ":" + util::format_double(nu.back()) + ":" +
                      std::to_string(nu.size());
    if (monomer) {
        tag += ";mono=" + util::format_double(monomer->epsilon_e) + "," +
               util::format_double(monomer->omega_vib) + "," +
               util::format_double(monomer->huang_rhys) + "," +
               util::format_double(monomer->gamma) + "," + util::format_double(monomer->sigma_m);
    }
    std::string ref;
    for (double a : reference.amp) ref += util::format_double(a);
    std::ostringstream hash;
    hash << std::hex << util::fnv1a(ref);
    tag += ";ref=" + hash.str();
    return tag;
}

namespace {

model::MonomerParams resolve_monomer_source(const RunConfig& config) {
    if (config.monomer_params) return *config.monomer_params;
    std::ifstream in(*config.monomer_manifest_path);
    if (!in) {
        throw ConfigError("cannot open monomer manifest: " + config.monomer_manifest_path->string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::parse_error& e) {
        throw ConfigError("monomer manifest parse error: " + std::string(e.what()));
    }
    const json& params = require_key(require_key(manifest, "best", "monomer manifest"), "params",
                                     "monomer manifest best");
    return monomer_params_from_json(params, "monomer manifest best params");
}

SpectrumObjective build_objective(const RunConfig& config, const model::MonomerParams* monomer) {
    const cost::ExperimentalSpectrum data = cost::ingest_spectrum(config.spectrum_path);
    const double lo = config.nu_lo.value_or(data.nu.front());
    const double hi = config.nu_hi.value_or(data.nu.back());
    SpectrumObjective obj;
    obj.stage = config.stage;
    obj.nu = util::linspace(lo, hi, config.nu_points);
    obj.reference = cost::to_common_grid(data, obj.nu);
    obj.basis = config.basis;
    obj.grids = config.grids;
    if (monomer) obj.monomer = *monomer;
    return obj;
}

json hyper_to_json(const gpr::KernelHyperparams& h) {
    return json{{"signal_variance", h.signal_variance},
                {"noise_variance", h.noise_variance},
                {"length_scales", h.length_scales}};
}

gpr::KernelHyperparams hyper_from_json(const json& j) {
    gpr::KernelHyperparams h;
    h.signal_variance = require_key(j, "signal_variance", "hyperparams").get<double>();
    h.noise_variance = require_key(j, "noise_variance", "hyperparams").get<double>();
    h.length_scales = require_key(j, "length_scales", "hyperparams").get<std::vector<double>>();
    return h;
}

}  // namespace

FitOutcome run_fit(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    std::optional<model::MonomerParams> monomer;
    if (config.stage == Stage::dimer) monomer = resolve_monomer_source(config);
    const SpectrumObjective objective = build_objective(config, monomer ? &*monomer : nullptr);

    gpr::OptimizeOptions oopts;
    oopts.budget = config.budget;
    oopts.n_sc = config.n_sc.empty() ? default_n_sc(config.stage) : config.n_sc;
    oopts.seed = config.seed;
    oopts.workers = config.workers;
    oopts.initial_design = config.initial_design;
    for (int n = 100; n < config.budget; n += 100) oopts.callback_at.push_back(n);
    oopts.callback = [&](const gpr::ProgressSnapshot& snap) {
        double best = std::numeric_limits<double>::infinity();
        for (double c : snap.train.costs) best = std::min(best, c);
        log << "[fit] evaluations " << snap.evaluations_done << ", best cost so far "
            << util::format_double(best) << "\n";
    };

    gpr::Evaluator evaluator = [&objective](const std::vector<double>& p) { return objective(p); };
    gpr::OptimizeResult result = gpr::optimize(evaluator, config.space, oopts);

    fs::create_directories(config.output_dir);
    const fs::path history_path = config.output_dir / "history.tsv";
    const fs::path timings_path = config.output_dir / "timings.tsv";
    const fs::path best_spectrum_path = config.output_dir / "best_spectrum.dat";
    const fs::path manifest_path = config.output_dir / "manifest.json";

    {
        std::ofstream out(history_path);
        gpr::write_history(out, config.space, result.history);
    }
    {
        std::ofstream out(timings_path);
        gpr::write_timings(out, result.history);
    }
    {
        std::ofstream out(best_spectrum_path);
        out << "# best-fit spectrum\n";
        spectra::write_spectrum(out, objective.simulate(result.best_point));
    }

    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    json best_params;
    for (std::size_t i = 0; i < config.space.size(); ++i) {
        best_params[config.space.dims[i].name] = result.best_point[i];
    }
    json space_json = json::array();
    for (const auto& d : config.space.dims) {
        space_json.push_back(
            json{{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}, {"unit", d.unit}});
    }
    json trace = json::array();
    for (const auto& t : result.hyper_trace) {
        json entry = hyper_to_json(t.hyper);
        entry["n_train"] = t.n_train;
        entry["log_marginal"] = t.log_marginal;
        trace.push_back(entry);
    }
    json failures = json::array();
    for (const auto& rec : result.history) {
        if (!rec.ok) failures.push_back(json{{"index", rec.index}, {"error", rec.error}});
    }

    json manifest{
        {"version", kVersion},
        {"stage", to_string(config.stage)},
        {"seed", config.seed},
        {"spectrum", fs::weakly_canonical(config.spectrum_path).string()},
        {"space", space_json},
        {"basis", {{"n_max", config.basis.n_max}}},
        {"time_grid",
         {{"phase_cap", config.grids.phase_cap}, {"window_decay", config.grids.window_decay}}},
        {"nu_grid",
         {{"lo", objective.nu.front()}, {"hi", objective.nu.back()}, {"points", objective.nu.size()}}},
        {"config",
         {{"budget", config.budget},
          {"n_sc", oopts.n_sc},
          {"initial_design", config.initial_design},
          {"workers", config.workers},
          {"thresholds",
           {{"consistency", config.consistency_threshold}, {"inner", config.inner_threshold}}}}},
        {"best", {{"cost", result.best_cost}, {"params", best_params}}},
        {"hyperparams", hyper_to_json(result.model.hyper)},
        {"hyper_trace", trace},
        {"files",
         {{"history", "history.tsv"}, {"timings", "timings.tsv"}, {"best_spectrum", "best_spectrum.dat"}}},
        {"failures", failures},
        {"timing", {{"wall_s", wall_s}, {"evaluations", result.history.size()}}},
    };
    if (monomer) manifest["monomer_params"] = monomer_params_to_json(*monomer);

    {
        std::ofstream out(manifest_path);
        out << manifest.dump(2) << '\n';
    }

    log << "[fit] stage " << to_string(config.stage) << " finished: best cost "
        << util::format_double(result.best_cost) << " after " << result.history.size()
        << " evaluations (" << util::format_double(wall_s) << " s)\n";
    log << "[fit] manifest: " << manifest_path.string() << "\n";

    return FitOutcome{manifest_path, std::move(manifest), std::move(result)};
}

namespace {

std::vector<gpr::EvalRecord> read_history(const fs::path& file, std::size_t dims) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open history file: " + file.string());
    std::vector<gpr::EvalRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        gpr::EvalRecord rec;
        row >> rec.index >> rec.origin;
        rec.params.resize(dims);
        for (double& p : rec.params) row >> p;
        std::string status;
        row >> rec.cost >> status;
        if (!row) throw ConfigError("malformed history row: " + line);
        rec.ok = status == "ok";
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

RestoredRun restore_run(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("cannot open manifest: " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::parse_error& e) {
        throw ConfigError("manifest parse error: " + std::string(e.what()));
    }
    const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : ".";

    RestoredRun r;
    r.manifest = manifest;
    r.config.stage = stage_from_string(require_key(manifest, "stage", "manifest").get<std::string>());
    r.config.seed = require_key(manifest, "seed", "manifest").get<std::uint64_t>();
    r.config.spectrum_path = require_key(manifest, "spectrum", "manifest").get<std::string>();
    r.config.output_dir = base;
    for (const json& d : require_key(manifest, "space", "manifest")) {
        r.config.space.dims.push_back({require_key(d, "name", "space").get<std::string>(),
                                       require_key(d, "lower", "space").get<double>(),
                                       require_key(d, "upper", "space").get<double>(),
                                       d.value("unit", "-")});
    }
    r.config.basis.n_max =
        require_key(require_key(manifest, "basis", "manifest"), "n_max", "basis").get<int>();
    const json& tg = require_key(manifest, "time_grid", "manifest");
    r.config.grids.phase_cap = require_key(tg, "phase_cap", "time_grid").get<double>();
    r.config.grids.window_decay = require_key(tg, "window_decay", "time_grid").get<double>();
    const json& ng = require_key(manifest, "nu_grid", "manifest");
    r.config.nu_lo = require_key(ng, "lo", "nu_grid").get<double>();
    r.config.nu_hi = require_key(ng, "hi", "nu_grid").get<double>();
    r.config.nu_points = require_key(ng, "points", "nu_grid").get<int>();
    if (manifest.contains("monomer_params")) {
        r.config.monomer_params = monomer_params_from_json(manifest.at("monomer_params"), "manifest");
    }

    const json& best = require_key(manifest, "best", "manifest");
    r.best_cost = require_key(best, "cost", "best").get<double>();
    const json& best_params = require_key(best, "params", "best");
    for (const auto& d : r.config.space.dims) {
        r.best_point.push_back(require_key(best_params, d.name, "best params").get<double>());
    }

    r.objective =
        build_objective(r.config, r.config.monomer_params ? &*r.config.monomer_params : nullptr);

    const fs::path history_path =
        base / require_key(require_key(manifest, "files", "manifest"), "history", "files")
                   .get<std::string>();
    gpr::TrainingSet train;
    for (const auto& rec : read_history(history_path, r.config.space.size())) {
        if (rec.ok) train.add(rec.params, rec.cost);
    }
    if (train.size() < 2) throw ConfigError("history has fewer than 2 successful evaluations");
    r.model = gpr::fit_with_hyperparams(
        train, r.config.space, hyper_from_json(require_key(manifest, "hyperparams", "manifest")));
    return r;
}

json run_landscape(const LandscapeOptions& opts, std::ostream& log) {
    RestoredRun run = restore_run(opts.manifest_path);
    const fs::path out_dir = opts.output_dir.value_or(
        opts.manifest_path.has_parent_path() ? opts.manifest_path.parent_path() : fs::path("."));
    fs::create_directories(out_dir);

    const auto& space = run.config.space;
    std::vector<std::pair<std::string, std::string>> cuts = opts.cuts;
    if (cuts.empty() && !opts.full_grid) {
        for (std::size_t i = 0; i < space.size(); ++i) {
            for (std::size_t j = i + 1; j < space.size(); ++j) {
                cuts.emplace_back(space.dims[i].name, space.dims[j].name);
            }
        }
    }

    gpr::Evaluator evaluator = [&run](const std::vector<double>& p) { return run.objective(p); };
    landscape::EvalCache cache(out_dir / "exact_cache.tsv", run.objective.config_tag());

    json report;
    report["manifest"] = fs::weakly_canonical(opts.manifest_path).string();
    report["cuts"] = json::array();

    auto grid_for = [&](const std::vector<std::pair<std::string, int>>& scanned) {
        landscape::GridSpec g;
        for (const auto& [name, count] : scanned) {
            const int idx = space.index_of(name);
            if (idx < 0) throw ConfigError("landscape: unknown parameter '" + name + "'");
            const auto& dim = space.dims[static_cast<std::size_t>(idx)];
            g.axes.push_back({name, dim.lower, dim.upper, count});
        }
        for (std::size_t d = 0; d < space.size(); ++d) {
            bool scanned_dim = false;
            for (const auto& [name, count] : scanned) {
                (void)count;
                if (name == space.dims[d].name) scanned_dim = true;
            }
            if (!scanned_dim) g.fixed.emplace_back(space.dims[d].name, run.best_point[d]);
        }
        return g;
    };

    auto process_grid = [&](const landscape::GridSpec& g, const std::string& label,
                            const fs::path& file) {
        landscape::Landscape surr = landscape::surrogate_grid(run.model, g);
        json entry;
        entry["label"] = label;
        entry["file"] = file.filename().string();
        entry["uncertainty_metric"] = landscape::uncertainty_metric(surr);
        for (double thr : {cost::kInnerThreshold, cost::kConsistencyThreshold}) {
            const auto region = landscape::consistency_region(surr, thr);
            json rj;
            rj["threshold"] = thr;
            rj["empty"] = region.empty;
            rj["node_count"] = region.node_count;
            if (!region.empty) {
                json extents;
                for (std::size_t a = 0; a < g.axes.size(); ++a) {
                    extents[g.axes[a].name] =
                        json::array({region.extents[a].first, region.extents[a].second});
                }
                rj["extents"] = extents;
            }
            entry["regions"].push_back(rj);
        }
        if (opts.exact) {
            landscape::ExactGridOptions eopts;
            eopts.node_cap = opts.node_cap;
            eopts.workers = opts.workers;
            eopts.cache = &cache;
            const landscape::Landscape exact =
                landscape::exact_grid(evaluator, space, g, eopts);
            entry["error_metric"] = landscape::error_metric(exact, surr);
            surr.exact = exact.exact;
            surr.has_exact = exact.has_exact;
        }
        std::ofstream out(file);
        landscape::write_landscape(out, surr);
        log << "[landscape] " << label << " -> " << file.string() << "\n";
        return entry;
    };

    for (const auto& [a, b] : cuts) {
        const fs::path file = out_dir / ("landscape_" + a + "_" + b + ".tsv");
        report["cuts"].push_back(
            process_grid(grid_for({{a, opts.cut_points}, {b, opts.cut_points}}), a + " x " + b, file));
    }

    if (opts.full_grid) {
        std::vector<std::pair<std::string, int>> scanned;
        for (const auto& d : space.dims) scanned.emplace_back(d.name, opts.full_grid_points);
        const fs::path file = out_dir / "landscape_full.tsv";
        report["full_grid"] = process_grid(grid_for(scanned), "full grid", file);
    }

    const fs::path report_path = out_dir / "landscapes.json";
    {
        std::ofstream out(report_path);
        out << report.dump(2) << '\n';
    }
    log << "[landscape] report: " << report_path.string() << "\n";
    return report;
}

std::optional<double> run_simulate(const SimulateOptions& opts, std::ostream& log) {
    std::vector<double> nu;
    spectra::Spectrum spectrum;
    spectra::CorrelationSeries correlation;

    if (opts.stage == Stage::monomer) {
        const model::MonomerParams p = monomer_from_point(opts.params);
        nu = (opts.nu_lo && opts.nu_hi)
                 ? util::linspace(*opts.nu_lo, *opts.nu_hi, opts.nu_points)
                 : spectra::default_nu_grid(p, nullptr, opts.nu_points);
        const spectra::TimeGrid g = spectra::suggest_time_grid(
            p, nullptr, opts.basis, nu.front(), nu.back(), opts.grids.phase_cap,
            opts.grids.window_decay);
        correlation = spectra::monomer_correlation(p, opts.basis, g);
        spectrum = spectra::correlation_to_spectrum(correlation, p.sigma_m, nu);
    } else {
        if (!opts.monomer) throw ConfigError("simulate: dimer stage requires monomer parameters");
        const model::DimerParams pd = dimer_from_point(opts.params);
        nu = (opts.nu_lo && opts.nu_hi)
                 ? util::linspace(*opts.nu_lo, *opts.nu_hi, opts.nu_points)
                 : spectra::default_nu_grid(*opts.monomer, &pd, opts.nu_points);
        const spectra::TimeGrid g = spectra::suggest_time_grid(
            *opts.monomer, &pd, opts.basis, nu.front(), nu.back(), opts.grids.phase_cap,
            opts.grids.window_decay);
        auto [mp, mm] = spectra::dimer_correlation_components(*opts.monomer, pd, opts.basis, g);
        correlation = spectra::combine_dimer_correlation(mp, mm, pd.alpha_deg);
        spectrum = spectra::correlation_to_spectrum(correlation, pd.sigma_d, nu);
    }

    if (!opts.out_path.empty()) {
        if (opts.out_path.has_parent_path()) fs::create_directories(opts.out_path.parent_path());
        std::ofstream out(opts.out_path);
        out << "# synthetic spectrum generated by specfit simulate\n# stage: "
            << to_string(opts.stage) << "\n";
        spectra::write_spectrum(out, spectrum);
        log << "[simulate] wrote " << opts.out_path.string() << "\n";
    }
    if (opts.correlation_path) {
        std::ofstream out(*opts.correlation_path);
        spectra::write_correlation(out, correlation);
        log << "[simulate] wrote " << opts.correlation_path->string() << "\n";
    }
    if (spectrum.diag.coverage_warning) {
        log << "[simulate] warning: frequency grid covers only "
            << util::format_double(100.0 * spectrum.diag.coverage) << "% of the spectral area\n";
    }

    if (opts.reference_path) {
        const cost::ExperimentalSpectrum ref = cost::ingest_spectrum(*opts.reference_path);
        const double c = cost::spectral_cost(cost::to_common_grid(ref, nu), spectrum);
        log << "[simulate] cost vs " << opts.reference_path->string() << ": "
            << util::format_double(c) << "\n";
        return c;
    }
    return std::nullopt;
}

void ValidationReport::add(const std::string& check, bool check_ok, const std::string& detail,
                           bool warn) {
    entries.push_back({check, check_ok, warn, detail});
    if (!check_ok && !warn) ok = false;
}

ValidationReport run_validate(const fs::path& config_path, std::ostream& log) {
    ValidationReport report;
    RunConfig config;
    try {
        config = load_config(config_path);
        report.add("config", true, "parsed and validated");
    } catch (const std::exception& e) {
        report.add("config", false, e.what());
        return report;
    }

    std::optional<model::MonomerParams> monomer;
    if (config.stage == Stage::dimer) {
        try {
            monomer = resolve_monomer_source(config);
            report.add("monomer source", true, "resolved");
        } catch (const std::exception& e) {
            report.add("monomer source", false, e.what());
        }
    }

    std::optional<SpectrumObjective> objective;
    try {
        const cost::ExperimentalSpectrum data = cost::ingest_spectrum(config.spectrum_path);
        report.add("spectrum", true,
                   std::to_string(data.nu.size()) + " points over [" +
                       util::format_double(data.nu.front()) + ", " +
                       util::format_double(data.nu.back()) + "] cm-1");
        if (config.stage == Stage::monomer || monomer) {
            objective = build_objective(config, monomer ? &*monomer : nullptr);
        }
    } catch (const std::exception& e) {
        report.add("spectrum", false, e.what());
    }

    if (objective) {
        // demanding corner of the bounds: strongest vibronic coupling,
        // fastest vibration, narrowest broadening
        std::vector<double> corner;
        for (const auto& d : config.space.dims) {
            if (d.name == "huang_rhys" || d.name == "omega_vib" || d.name == "coupling_v" ||
                d.name == "delta") {
                corner.push_back(d.upper);
            } else if (d.name == "sigma_m" || d.name == "sigma_d") {
                corner.push_back(d.lower);
            } else {
                corner.push_back(0.5 * (d.lower + d.upper));
            }
        }
        try {
            // shared time grid so the distance isolates the truncation effect
            const model::BasisSpec coarse_b{config.basis.n_max};
            const model::BasisSpec fine_b{config.basis.n_max + 2};
            const auto& nu = objective->nu;
            double dist = 0.0;
            if (config.stage == Stage::monomer) {
                const model::MonomerParams p = monomer_from_point(corner);
                const spectra::TimeGrid g = spectra::suggest_time_grid(
                    p, nullptr, fine_b, nu.front(), nu.back(), config.grids.phase_cap,
                    config.grids.window_decay);
                dist = cost::spectral_cost(spectra::simulate_monomer(p, coarse_b, g, nu),
                                           spectra::simulate_monomer(p, fine_b, g, nu));
            } else {
                const model::DimerParams pd = dimer_from_point(corner);
                const spectra::TimeGrid g = spectra::suggest_time_grid(
                    *monomer, &pd, fine_b, nu.front(), nu.back(), config.grids.phase_cap,
                    config.grids.window_decay);
                dist = cost::spectral_cost(spectra::simulate_dimer(*monomer, pd, coarse_b, g, nu),
                                           spectra::simulate_dimer(*monomer, pd, fine_b, g, nu));
            }
            const bool converged = dist < 1e-4;
            report.add("basis convergence", converged,
                       "cost distance n_max=" + std::to_string(config.basis.n_max) + " vs " +
                           std::to_string(config.basis.n_max + 2) + " at the max-coupling corner: " +
                           util::format_double(dist) + (converged ? "" : " (increase n_max)"),
                       /*warn=*/!converged);
        } catch (const std::exception& e) {
            report.add("basis convergence", false, e.what(), /*warn=*/true);
        }

        try {
            std::vector<double> center;
            for (const auto& d : config.space.dims) center.push_back(0.5 * (d.lower + d.upper));
            const auto t0 = std::chrono::steady_clock::now();
            (*objective)(center);
            (*objective)(corner);
            const double per_eval =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 2.0;
            report.add("runtime estimate", true,
                       util::format_double(per_eval) + " s per evaluation, about " +
                           util::format_double(per_eval * config.budget) + " s for the budget of " +
                           std::to_string(config.budget));
        } catch (const std::exception& e) {
            report.add("runtime estimate", false, e.what(), /*warn=*/true);
        }
    }

    for (const auto& e : report.entries) {
        log << "[validate] " << (e.ok ? "ok  " : (e.warning ? "warn" : "FAIL")) << "  " << e.check
            << ": " << e.detail << "\n";
    }
    log << "[validate] " << (report.ok ? "ok" : "failed") << "\n";
    return report;
}

}  // namespace specfit::run
