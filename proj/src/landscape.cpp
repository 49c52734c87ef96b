#include "specfit/landscape.hpp"

#include "specfit/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace specfit::landscape {

std::size_t GridSpec::total_nodes() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
    return n;
}

void GridSpec::validate(const gpr::ParameterSpace& space) const {
    // axes may be empty: all dimensions fixed means a single-node grid
    std::vector<bool> covered(space.size(), false);
    for (const auto& a : axes) {
        const int idx = space.index_of(a.name);
        if (idx < 0) throw std::invalid_argument("GridSpec: unknown axis '" + a.name + "'");
        if (covered[static_cast<std::size_t>(idx)]) {
            throw std::invalid_argument("GridSpec: dimension '" + a.name + "' listed twice");
        }
        covered[static_cast<std::size_t>(idx)] = true;
        if (a.count < 2) throw std::invalid_argument("GridSpec: axis '" + a.name + "' needs >= 2 points");
        const auto& dim = space.dims[static_cast<std::size_t>(idx)];
        if (!(a.lo >= dim.lower - 1e-9 * (dim.upper - dim.lower)) ||
            !(a.hi <= dim.upper + 1e-9 * (dim.upper - dim.lower)) || !(a.lo < a.hi)) {
            throw std::invalid_argument("GridSpec: axis '" + a.name + "' range outside bounds");
        }
    }
    for (const auto& [name, value] : fixed) {
        const int idx = space.index_of(name);
        if (idx < 0) throw std::invalid_argument("GridSpec: unknown fixed dimension '" + name + "'");
        if (covered[static_cast<std::size_t>(idx)]) {
            throw std::invalid_argument("GridSpec: dimension '" + name + "' both scanned and fixed");
        }
        covered[static_cast<std::size_t>(idx)] = true;
        const auto& dim = space.dims[static_cast<std::size_t>(idx)];
        if (value < dim.lower - 1e-9 * (dim.upper - dim.lower) ||
            value > dim.upper + 1e-9 * (dim.upper - dim.lower)) {
            throw std::invalid_argument("GridSpec: fixed value for '" + name + "' outside bounds");
        }
    }
    for (std::size_t i = 0; i < covered.size(); ++i) {
        if (!covered[i]) {
            throw std::invalid_argument("GridSpec: dimension '" + space.dims[i].name +
                                        "' neither scanned nor fixed");
        }
    }
}

double GridSpec::axis_value(std::size_t axis, std::size_t index) const {
    const auto& a = axes[axis];
    return a.lo + (a.hi - a.lo) * static_cast<double>(index) / (a.count - 1);
}

std::vector<std::size_t> GridSpec::unflatten(std::size_t node) const {
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t a = axes.size(); a-- > 0;) {
        idx[a] = node % static_cast<std::size_t>(axes[a].count);
        node /= static_cast<std::size_t>(axes[a].count);
    }
    return idx;
}

std::vector<double> GridSpec::node_point(const gpr::ParameterSpace& space, std::size_t node) const {
    std::vector<double> point(space.size(), 0.0);
    for (const auto& [name, value] : fixed) {
        point[static_cast<std::size_t>(space.index_of(name))] = value;
    }
    const auto idx = unflatten(node);
    for (std::size_t a = 0; a < axes.size(); ++a) {
        point[static_cast<std::size_t>(space.index_of(axes[a].name))] = axis_value(a, idx[a]);
    }
    return point;
}

namespace {

void apply_masks(Landscape& l) {
    const std::size_t n = l.mean.size();
    l.mask_inner.assign(n, 0);
    l.mask_consistency.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (l.mean[i] <= kMaskThresholds[0]) l.mask_inner[i] = 1;
        if (l.mean[i] <= kMaskThresholds[1]) l.mask_consistency[i] = 1;
    }
}

}  // namespace

Landscape surrogate_grid(const gpr::GprModel& m, const GridSpec& g) {
    g.validate(m.space);
    Landscape l;
    l.grid = g;
    const std::size_t n = g.total_nodes();
    l.mean.resize(n);
    l.stddev.resize(n);
    l.exact.assign(n, 0.0);
    l.has_exact.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const gpr::Prediction p = gpr::predict(m, g.node_point(m.space, i));
        l.mean[i] = p.mean;
        l.stddev[i] = p.stddev;
    }
    apply_masks(l);
    return l;
}

EvalCache::EvalCache(std::filesystem::path file, std::string config_tag)
    : file_(std::move(file)), tag_(std::move(config_tag)) {
    std::ifstream in(file_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string key;
        double cost = 0.0;
        if (row >> key >> cost) entries_[key] = cost;
    }
}

std::string EvalCache::key_of(const std::vector<double>& params) const {
    std::string text = tag_;
    for (double p : params) {
        text += '|';
        text += util::format_double(p);
    }
    std::ostringstream key;
    key << std::hex << util::fnv1a(text);
    return key.str();
}

std::optional<double> EvalCache::lookup(const std::vector<double>& params) const {
    const auto it = entries_.find(key_of(params));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EvalCache::store(const std::vector<double>& params, double cost) {
    const std::string key = key_of(params);
    if (entries_.emplace(key, cost).second && !file_.empty()) {
        std::ofstream out(file_, std::ios::app);
        out << key << ' ' << util::format_double(cost) << '\n';
    }
}

Landscape exact_grid(const gpr::Evaluator& evaluate, const gpr::ParameterSpace& space,
                     const GridSpec& g, const ExactGridOptions& opts) {
    g.validate(space);
    const std::size_t n = g.total_nodes();
    if (n > opts.node_cap) {
        throw std::invalid_argument("exact_grid: " + std::to_string(n) +
                                    " nodes exceed the cap of " + std::to_string(opts.node_cap));
    }

    Landscape l;
    l.grid = g;
    l.mean.assign(n, std::numeric_limits<double>::quiet_NaN());
    l.stddev.assign(n, 0.0);
    l.exact.assign(n, std::numeric_limits<double>::quiet_NaN());
    l.has_exact.assign(n, 0);

    std::vector<std::vector<double>> points(n);
    std::vector<std::uint8_t> from_cache(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        points[i] = g.node_point(space, i);
        if (opts.cache) {
            if (const auto hit = opts.cache->lookup(points[i])) {
                l.exact[i] = *hit;
                l.has_exact[i] = 1;
                from_cache[i] = 1;
            }
        }
    }

    util::parallel_for(n, opts.workers, [&](std::size_t i) {
        if (from_cache[i]) return;
        try {
            const double c = evaluate(points[i]);
            if (std::isfinite(c)) {
                l.exact[i] = c;
                l.has_exact[i] = 1;
            }
        } catch (...) {
            // recorded as missing
        }
    });

    if (opts.cache) {
        for (std::size_t i = 0; i < n; ++i) {
            if (l.has_exact[i] && !from_cache[i]) opts.cache->store(points[i], l.exact[i]);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (l.has_exact[i]) l.mean[i] = l.exact[i];
    }
    apply_masks(l);
    return l;
}

namespace {

const double* node_value(const Landscape& l, std::size_t i) {
    if (i < l.has_exact.size() && l.has_exact[i]) return &l.exact[i];
    if (i < l.mean.size() && std::isfinite(l.mean[i])) return &l.mean[i];
    return nullptr;
}

}  // namespace

double error_metric(const Landscape& a, const Landscape& b) {
    if (a.nodes() != b.nodes()) throw std::invalid_argument("error_metric: grid size mismatch");
    for (std::size_t ax = 0; ax < a.grid.axes.size(); ++ax) {
        if (ax >= b.grid.axes.size() || a.grid.axes[ax].name != b.grid.axes[ax].name ||
            a.grid.axes[ax].count != b.grid.axes[ax].count) {
            throw std::invalid_argument("error_metric: grids differ");
        }
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.nodes(); ++i) {
        const double* va = node_value(a, i);
        const double* vb = node_value(b, i);
        if (!va || !vb) continue;
        sum += std::abs(*va - *vb);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("error_metric: no nodes with values");
    return sum / static_cast<double>(count);
}

double uncertainty_metric(const Landscape& l) {
    if (l.nodes() == 0) throw std::invalid_argument("uncertainty_metric: empty landscape");
    double sum = 0.0;
    for (double s : l.stddev) sum += s;
    return sum / static_cast<double>(l.nodes());
}

RegionSummary consistency_region(const Landscape& l, double threshold) {
    if (!(threshold > 0.0 && threshold <= 2.0)) {
        throw std::invalid_argument("consistency_region: threshold must lie in (0, 2]");
    }
    RegionSummary summary;
    summary.threshold = threshold;
    summary.extents.assign(l.grid.axes.size(),
                           {std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < l.nodes(); ++i) {
        const double* v = node_value(l, i);
        if (!v || *v > threshold) continue;
        ++summary.node_count;
        const auto idx = l.grid.unflatten(i);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const double coord = l.grid.axis_value(a, idx[a]);
            summary.extents[a].first = std::min(summary.extents[a].first, coord);
            summary.extents[a].second = std::max(summary.extents[a].second, coord);
        }
    }
    summary.empty = summary.node_count == 0;
    if (summary.empty) summary.extents.clear();
    return summary;
}

void write_landscape(std::ostream& out, const Landscape& l) {
    out << "# specfit landscape v1\n";
    for (const auto& a : l.grid.axes) {
        out << "# axis: " << a.name << ' ' << util::format_double(a.lo) << ' '
            << util::format_double(a.hi) << ' ' << a.count << '\n';
    }
    for (const auto& [name, value] : l.grid.fixed) {
        out << "# fixed: " << name << ' ' << util::format_double(value) << '\n';
    }
    out << "# columns:";
    for (const auto& a : l.grid.axes) out << ' ' << a.name;
    out << " mean uncertainty exact has_exact mask_0.05 mask_0.1\n";
    for (std::size_t i = 0; i < l.nodes(); ++i) {
        const auto idx = l.grid.unflatten(i);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            out << util::format_double(l.grid.axis_value(a, idx[a])) << ' ';
        }
        out << util::format_double(l.mean[i]) << ' ' << util::format_double(l.stddev[i]) << ' '
            << util::format_double(l.exact[i]) << ' ' << static_cast<int>(l.has_exact[i]) << ' '
            << static_cast<int>(l.mask_inner[i]) << ' ' << static_cast<int>(l.mask_consistency[i])
            << '\n';
    }
}

}  // namespace specfit::landscape
