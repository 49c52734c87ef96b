#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specfit/landscape.hpp"

#include "oracles.hpp"
#include "specfit/optim.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>

using namespace specfit;

namespace {

gpr::ParameterSpace unit_space(std::size_t dims) {
    gpr::ParameterSpace s;
    for (std::size_t d = 0; d < dims; ++d) {
        s.dims.push_back({"p" + std::to_string(d), 0.0, 1.0, "-"});
    }
    return s;
}

gpr::GprModel small_model(std::size_t dims, std::uint64_t seed, int n_points,
                          double noise = 1e-6) {
    gpr::TrainingSet train;
    optim::HaltonSampler sampler(dims, seed);
    oracles::TestRng rng(seed * 31 + 7);
    for (int i = 0; i < n_points; ++i) train.add(sampler.next(), rng.uniform(0.0, 1.5));
    gpr::KernelHyperparams hyper;
    hyper.length_scales.assign(dims, 0.3);
    hyper.signal_variance = 0.8;
    hyper.noise_variance = noise;
    return gpr::fit_with_hyperparams(train, unit_space(dims), hyper);
}

}  // namespace

TEST_CASE("surrogate_grid: two-node grid equals direct predictions") {
    const auto model = small_model(2, 3, 12);
    landscape::GridSpec g;
    g.axes = {{"p0", 0.1, 0.9, 2}};
    g.fixed = {{"p1", 0.4}};
    const auto l = landscape::surrogate_grid(model, g);
    REQUIRE(l.nodes() == 2);
    const auto p0 = gpr::predict(model, {0.1, 0.4});
    const auto p1 = gpr::predict(model, {0.9, 0.4});
    CHECK(l.mean[0] == doctest::Approx(p0.mean).epsilon(1e-14));
    CHECK(l.mean[1] == doctest::Approx(p1.mean).epsilon(1e-14));
    CHECK(l.stddev[0] == doctest::Approx(p0.stddev).epsilon(1e-14));
    CHECK(l.stddev[1] == doctest::Approx(p1.stddev).epsilon(1e-14));
}

TEST_CASE("surrogate_grid: node order is row-major with the last axis fastest") {
    const auto model = small_model(2, 5, 10);
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 3}, {"p1", 0.0, 1.0, 4}};
    const auto l = landscape::surrogate_grid(model, g);
    REQUIRE(l.nodes() == 12);
    for (std::size_t node = 0; node < l.nodes(); ++node) {
        const auto idx = g.unflatten(node);
        CHECK(idx[0] == node / 4);
        CHECK(idx[1] == node % 4);
        const auto point = g.node_point(model.space, node);
        const auto p = gpr::predict(model, point);
        CHECK(l.mean[node] == doctest::Approx(p.mean).epsilon(1e-14));
    }
}

TEST_CASE("surrogate_grid: training-point grid interpolates at the noise floor") {
    gpr::TrainingSet train;
    train.add({0.25, 0.25}, 0.9);
    train.add({0.25, 0.75}, 0.4);
    train.add({0.75, 0.25}, 0.7);
    train.add({0.75, 0.75}, 0.2);
    gpr::KernelHyperparams hyper;
    hyper.length_scales = {0.15, 0.15};
    hyper.signal_variance = 1.0;
    hyper.noise_variance = gpr::kNoiseFloor;
    const auto model = gpr::fit_with_hyperparams(train, unit_space(2), hyper);

    landscape::GridSpec g;
    g.axes = {{"p0", 0.25, 0.75, 2}, {"p1", 0.25, 0.75, 2}};
    const auto l = landscape::surrogate_grid(model, g);
    CHECK(l.mean[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(l.mean[1] == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(l.mean[2] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(l.mean[3] == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("grid validation rejects bad axes") {
    const auto model = small_model(2, 7, 8);
    landscape::GridSpec outside;
    outside.axes = {{"p0", -0.5, 0.5, 5}};
    outside.fixed = {{"p1", 0.5}};
    CHECK_THROWS_AS(landscape::surrogate_grid(model, outside), std::invalid_argument);

    landscape::GridSpec unknown;
    unknown.axes = {{"nope", 0.0, 1.0, 5}};
    unknown.fixed = {{"p0", 0.5}, {"p1", 0.5}};
    CHECK_THROWS_AS(landscape::surrogate_grid(model, unknown), std::invalid_argument);

    landscape::GridSpec uncovered;
    uncovered.axes = {{"p0", 0.0, 1.0, 5}};
    CHECK_THROWS_WITH_AS(landscape::surrogate_grid(model, uncovered),
                         doctest::Contains("neither scanned nor fixed"), std::invalid_argument);

    landscape::GridSpec single;
    single.axes = {{"p0", 0.0, 1.0, 1}};
    single.fixed = {{"p1", 0.5}};
    CHECK_THROWS_AS(landscape::surrogate_grid(model, single), std::invalid_argument);
}

TEST_CASE("cut consistency: 2-D cut of a 4-D grid equals the direct 2-D grid") {
    const auto model = small_model(4, 11, 40);
    landscape::GridSpec full;
    for (int d = 0; d < 4; ++d) full.axes.push_back({"p" + std::to_string(d), 0.0, 1.0, 5});
    const auto big = landscape::surrogate_grid(model, full);

    landscape::GridSpec cut;
    cut.axes = {{"p0", 0.0, 1.0, 5}, {"p1", 0.0, 1.0, 5}};
    cut.fixed = {{"p2", 0.5}, {"p3", 0.75}};  // node indices 2 and 3 of the 5-point axes
    const auto small = landscape::surrogate_grid(model, cut);

    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const std::size_t big_node = ((i * 5 + j) * 5 + 2) * 5 + 3;
            const std::size_t cut_node = i * 5 + j;
            CHECK(big.mean[big_node] == doctest::Approx(small.mean[cut_node]).epsilon(1e-14));
            CHECK(big.stddev[big_node] == doctest::Approx(small.stddev[cut_node]).epsilon(1e-14));
        }
    }
}

TEST_CASE("exact_grid: single fixed node evaluates the simulator once") {
    const auto space = unit_space(2);
    std::atomic<int> calls{0};
    const gpr::Evaluator f = [&](const std::vector<double>& x) {
        ++calls;
        return x[0] + x[1];
    };
    landscape::GridSpec g;
    g.fixed = {{"p0", 0.3}, {"p1", 0.4}};
    const auto l = landscape::exact_grid(f, space, g);
    CHECK(calls.load() == 1);
    REQUIRE(l.nodes() == 1);
    CHECK(l.has_exact[0] == 1);
    CHECK(l.exact[0] == doctest::Approx(0.7));
    CHECK(l.mean[0] == doctest::Approx(0.7));
    CHECK(l.stddev[0] == 0.0);
}

TEST_CASE("exact_grid: warm cache leads to zero evaluator calls") {
    const auto space = unit_space(2);
    const std::filesystem::path cache_file = "test_landscape_cache.tsv";
    std::filesystem::remove(cache_file);

    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 4}, {"p1", 0.0, 1.0, 3}};

    std::atomic<int> calls{0};
    const gpr::Evaluator f = [&](const std::vector<double>& x) {
        ++calls;
        return std::abs(x[0] - 0.5) + std::abs(x[1] - 0.5);
    };

    {
        landscape::EvalCache cache(cache_file, "tag-a");
        landscape::ExactGridOptions opts;
        opts.cache = &cache;
        landscape::exact_grid(f, space, g, opts);
        CHECK(calls.load() == 12);
    }
    {
        landscape::EvalCache cache(cache_file, "tag-a");
        CHECK(cache.size() == 12);
        landscape::ExactGridOptions opts;
        opts.cache = &cache;
        const auto l = landscape::exact_grid(f, space, g, opts);
        CHECK(calls.load() == 12);  // all nodes served from cache
        CHECK(l.has_exact[5] == 1);
    }
    {
        // a different configuration tag must not reuse the cached values
        landscape::EvalCache cache(cache_file, "tag-b");
        landscape::ExactGridOptions opts;
        opts.cache = &cache;
        landscape::exact_grid(f, space, g, opts);
        CHECK(calls.load() == 24);
    }
    std::filesystem::remove(cache_file);
}

TEST_CASE("exact_grid: failures are recorded per node and the cap is enforced") {
    const auto space = unit_space(1);
    const gpr::Evaluator f = [](const std::vector<double>& x) {
        if (x[0] > 0.6) throw std::runtime_error("synthetic failure");
        return x[0];
    };
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 5}};
    const auto l = landscape::exact_grid(f, space, g);
    CHECK(l.has_exact[0] == 1);
    CHECK(l.has_exact[4] == 0);
    CHECK(std::isnan(l.mean[4]));

    landscape::ExactGridOptions capped;
    capped.node_cap = 3;
    CHECK_THROWS_WITH_AS(landscape::exact_grid(f, space, g, capped), doctest::Contains("cap"),
                         std::invalid_argument);
}

TEST_CASE("error_metric: offset, symmetry, and grid checks") {
    const auto space = unit_space(1);
    const gpr::Evaluator f = [](const std::vector<double>& x) { return x[0]; };
    const gpr::Evaluator f_off = [](const std::vector<double>& x) { return x[0] + 0.07; };
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 9}};

    const auto a = landscape::exact_grid(f, space, g);
    const auto b = landscape::exact_grid(f_off, space, g);
    CHECK(landscape::error_metric(a, a) == 0.0);
    CHECK(landscape::error_metric(a, b) == doctest::Approx(0.07).epsilon(1e-12));
    CHECK(landscape::error_metric(b, a) == doctest::Approx(0.07).epsilon(1e-12));

    landscape::GridSpec g2;
    g2.axes = {{"p0", 0.0, 1.0, 7}};
    const auto c = landscape::exact_grid(f, space, g2);
    CHECK_THROWS_AS(landscape::error_metric(a, c), std::invalid_argument);
}

TEST_CASE("error_metric compares exact values against surrogate means") {
    const auto model = small_model(2, 13, 20);
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 6}, {"p1", 0.0, 1.0, 6}};
    const auto surr = landscape::surrogate_grid(model, g);
    const gpr::Evaluator truth = [&](const std::vector<double>& x) {
        return gpr::predict(model, x).mean;  // surrogate's own mean as "exact"
    };
    const auto exact = landscape::exact_grid(truth, model.space, g);
    CHECK(landscape::error_metric(exact, surr) < 1e-12);
}

TEST_CASE("uncertainty_metric: zero for exact landscapes, signal level far from data") {
    const auto space = unit_space(2);
    const gpr::Evaluator f = [](const std::vector<double>& x) { return x[0]; };
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 4}, {"p1", 0.0, 1.0, 4}};
    CHECK(landscape::uncertainty_metric(landscape::exact_grid(f, space, g)) == 0.0);

    gpr::TrainingSet train;
    train.add({0.01, 0.01}, 1.0);
    train.add({0.02, 0.02}, 1.0);
    gpr::KernelHyperparams hyper;
    hyper.length_scales = {0.02, 0.02};
    hyper.signal_variance = 1.3;
    hyper.noise_variance = 1e-8;
    const auto model = gpr::fit_with_hyperparams(train, space, hyper);
    landscape::GridSpec far;
    far.axes = {{"p0", 0.6, 1.0, 5}, {"p1", 0.6, 1.0, 5}};
    CHECK(landscape::uncertainty_metric(landscape::surrogate_grid(model, far)) ==
          doctest::Approx(std::sqrt(1.3)).epsilon(1e-6));
}

TEST_CASE("consistency_region: trivial thresholds and extent soundness") {
    const auto space = unit_space(2);
    const gpr::Evaluator f = [](const std::vector<double>& x) {
        const double a = x[0] - 0.5;
        const double b = x[1] - 0.5;
        return 0.3 + 1.2 * (a * a + b * b);  // bowl: min 0.3 at center, 0.9 at corners
    };
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 11}, {"p1", 0.0, 1.0, 11}};
    const auto l = landscape::exact_grid(f, space, g);

    const auto whole = landscape::consistency_region(l, 2.0);
    CHECK_FALSE(whole.empty);
    CHECK(whole.node_count == l.nodes());
    CHECK(whole.extents[0].first == doctest::Approx(0.0));
    CHECK(whole.extents[0].second == doctest::Approx(1.0));

    const auto none = landscape::consistency_region(l, 0.2);  // below the grid minimum
    CHECK(none.empty);
    CHECK(none.node_count == 0);

    const auto mid = landscape::consistency_region(l, 0.35);
    CHECK_FALSE(mid.empty);
    for (std::size_t node = 0; node < l.nodes(); ++node) {
        if (l.mean[node] <= 0.35) {
            const auto idx = l.grid.unflatten(node);
            for (std::size_t a = 0; a < idx.size(); ++a) {
                const double coord = l.grid.axis_value(a, idx[a]);
                CHECK(coord >= mid.extents[a].first - 1e-12);
                CHECK(coord <= mid.extents[a].second + 1e-12);
            }
        }
    }

    CHECK_THROWS_AS(landscape::consistency_region(l, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(landscape::consistency_region(l, 2.5), std::invalid_argument);
}

TEST_CASE("mask monotonicity: the 0.05 region is contained in the 0.1 region") {
    const auto model = small_model(2, 17, 30);
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 15}, {"p1", 0.0, 1.0, 15}};
    const auto l = landscape::surrogate_grid(model, g);
    for (std::size_t i = 0; i < l.nodes(); ++i) {
        if (l.mask_inner[i]) CHECK(l.mask_consistency[i] == 1);
        CHECK(l.mask_inner[i] == (l.mean[i] <= 0.05 ? 1 : 0));
        CHECK(l.mask_consistency[i] == (l.mean[i] <= 0.1 ? 1 : 0));
    }
}

TEST_CASE("write_landscape emits one row per node with axis headers") {
    const auto model = small_model(2, 19, 10);
    landscape::GridSpec g;
    g.axes = {{"p0", 0.0, 1.0, 3}, {"p1", 0.0, 1.0, 4}};
    const auto l = landscape::surrogate_grid(model, g);
    std::ostringstream out;
    landscape::write_landscape(out, l);
    const std::string text = out.str();
    CHECK(text.find("# axis: p0") != std::string::npos);
    CHECK(text.find("mask_0.1") != std::string::npos);
    int rows = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line[0] != '#') ++rows;
    }
    CHECK(rows == 12);
}
