// landscape.hpp — dense evaluation of the surrogate (and, when affordable,
// the exact simulator) over parameter grids: level-set masks, consistency
// regions, and the grid-averaged convergence metrics.

#pragma once

#include "specfit/gpr.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace specfit::landscape {

struct GridAxis {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    int count = 2;
};

// Scanned axes (>= 1) plus fixed values for every non-scanned dimension of
// the owning parameter space. Nodes are enumerated row-major with the last
// axis fastest.
struct GridSpec {
    std::vector<GridAxis> axes;
    std::vector<std::pair<std::string, double>> fixed;

    std::size_t total_nodes() const;
    void validate(const gpr::ParameterSpace& space) const;

    // coordinate along one scanned axis
    double axis_value(std::size_t axis, std::size_t index) const;
    // multi-index of a node
    std::vector<std::size_t> unflatten(std::size_t node) const;
    // full parameter vector (space ordering) for a node
    std::vector<double> node_point(const gpr::ParameterSpace& space, std::size_t node) const;
};

inline constexpr double kMaskThresholds[2] = {0.05, 0.1};

struct Landscape {
    GridSpec grid;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<double> exact;        // aligned with nodes; meaningful where has_exact
    std::vector<std::uint8_t> has_exact;
    std::vector<std::uint8_t> mask_inner;        // mean <= 0.05
    std::vector<std::uint8_t> mask_consistency;  // mean <= 0.1

    std::size_t nodes() const { return mean.size(); }
};

// Surrogate mean/uncertainty at every node.
Landscape surrogate_grid(const gpr::GprModel& m, const GridSpec& g);

// Append-only disk cache for exact evaluations, keyed by a stable content
// hash of (parameter vector, model/config tag).
class EvalCache {
public:
    EvalCache() = default;
    EvalCache(std::filesystem::path file, std::string config_tag);

    std::optional<double> lookup(const std::vector<double>& params) const;
    void store(const std::vector<double>& params, double cost);

    const std::string& config_tag() const { return tag_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::string key_of(const std::vector<double>& params) const;

    std::filesystem::path file_;
    std::string tag_;
    std::unordered_map<std::string, double> entries_;
};

struct ExactGridOptions {
    std::size_t node_cap = 200000;
    int workers = 1;
    EvalCache* cache = nullptr;
};

// Evaluator at every node; failures are recorded per node and marked missing.
// The mean array carries the exact values (zero uncertainty), so region and
// metric helpers work on exact landscapes too.
Landscape exact_grid(const gpr::Evaluator& evaluate, const gpr::ParameterSpace& space,
                     const GridSpec& g, const ExactGridOptions& opts = {});

// Mean absolute difference over nodes where both landscapes carry values
// (exact where present, surrogate mean otherwise). Symmetric.
double error_metric(const Landscape& a, const Landscape& b);

// Mean predicted standard deviation over all nodes.
double uncertainty_metric(const Landscape& l);

struct RegionSummary {
    bool empty = true;
    std::size_t node_count = 0;
    double threshold = 0.0;
    // axis-aligned extents of the sublevel set, one [min,max] per scanned axis
    std::vector<std::pair<double, double>> extents;
};

RegionSummary consistency_region(const Landscape& l, double threshold);

// One row per node (scanned coordinates, mean, uncertainty, exact-if-present,
// mask flags) plus '#' header lines describing the axes.
void write_landscape(std::ostream& out, const Landscape& l);

}  // namespace specfit::landscape
