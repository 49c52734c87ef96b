#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specfit/cost.hpp"

#include "oracles.hpp"
#include "specfit/util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace specfit;

namespace {

cost::ExperimentalSpectrum ingest_text(const std::string& text, const std::string& label = "test") {
    std::istringstream in(text);
    return cost::ingest_spectrum(in, label);
}

spectra::Spectrum gaussian_spectrum(const std::vector<double>& nu, double center, double sigma) {
    spectra::Spectrum s;
    s.nu = nu;
    s.amp.resize(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
        s.amp[i] = std::exp(-0.5 * (nu[i] - center) * (nu[i] - center) / (sigma * sigma));
    }
    const double area = util::trapezoid(s.nu, s.amp);
    for (double& a : s.amp) a /= area;
    s.normalized = true;
    return s;
}

}  // namespace

TEST_CASE("ingest: well-formed rows come back sorted") {
    std::ostringstream text;
    text << "# comment line\n";
    for (int i = 0; i < 500; ++i) {
        text << (12000.0 + 7.0 * i) << "  " << (0.5 + 0.001 * i) << "\n";
    }
    const auto spec = ingest_text(text.str());
    REQUIRE(spec.nu.size() == 500);
    CHECK(spec.nu.front() == doctest::Approx(12000.0));
    CHECK(spec.nu.back() == doctest::Approx(12000.0 + 7.0 * 499));
    for (std::size_t i = 0; i + 1 < spec.nu.size(); ++i) CHECK(spec.nu[i] < spec.nu[i + 1]);
}

TEST_CASE("ingest: descending input is accepted and returned ascending") {
    std::ostringstream text;
    for (int i = 0; i < 20; ++i) text << (20000.0 - 100.0 * i) << ", " << (1.0 + i) << "\n";
    const auto spec = ingest_text(text.str());
    REQUIRE(spec.nu.size() == 20);
    CHECK(spec.nu.front() == doctest::Approx(20000.0 - 1900.0));
    CHECK(spec.amp.front() == doctest::Approx(20.0));  // amplitude follows its nu
    CHECK(spec.amp.back() == doctest::Approx(1.0));
}

TEST_CASE("ingest: malformed rows are reported with their line number") {
    const std::string text = "100 1\n200 2\nnot_a_number 3\n400 4\n";
    try {
        ingest_text(text, "bad.dat");
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find("bad.dat") != std::string::npos);
        CHECK(what.find("line 3") != std::string::npos);
    }

    // three columns are malformed too
    CHECK_THROWS_AS(ingest_text("1 2 3\n4 5 6\n"), std::invalid_argument);
    CHECK_THROWS_AS(ingest_text("100 inf\n200 2\n"), std::invalid_argument);
}

TEST_CASE("ingest: fewer than 10 points is rejected") {
    std::ostringstream text;
    for (int i = 0; i < 9; ++i) text << (100.0 + i) << " 1\n";
    CHECK_THROWS_WITH_AS(ingest_text(text.str(), "small"),
                         doctest::Contains("at least 10 points"), std::invalid_argument);
}

TEST_CASE("ingest: nm units are converted to wavenumbers") {
    std::ostringstream text;
    text << "# units: nm\n";
    for (int i = 0; i < 12; ++i) text << (600.0 + 5.0 * i) << " " << (1.0 + i) << "\n";
    const auto spec = ingest_text(text.str());
    REQUIRE(spec.prep.nm_converted);
    // 655 nm is the largest wavelength -> smallest wavenumber comes first
    CHECK(spec.nu.front() == doctest::Approx(1e7 / 655.0));
    CHECK(spec.nu.back() == doctest::Approx(1e7 / 600.0));
    CHECK(spec.amp.back() == doctest::Approx(1.0));
}

TEST_CASE("ingest: exact duplicate frequencies are merged by averaging") {
    std::ostringstream text;
    for (int i = 0; i < 12; ++i) text << (100.0 + i) << " 1\n";
    text << "105 3\n";  // duplicate of an existing point with amplitude 1
    const auto spec = ingest_text(text.str());
    CHECK(spec.prep.merged_duplicates == 1);
    REQUIRE(spec.nu.size() == 12);
    const auto it = std::find(spec.nu.begin(), spec.nu.end(), 105.0);
    REQUIRE(it != spec.nu.end());
    CHECK(spec.amp[static_cast<std::size_t>(it - spec.nu.begin())] == doctest::Approx(2.0));
}

TEST_CASE("ingest from file records provenance") {
    const std::filesystem::path path = "test_cost_tmp_spectrum.dat";
    {
        std::ofstream out(path);
        out << "# units: cm-1\n";
        for (int i = 0; i < 25; ++i) out << (5000.0 + 10.0 * i) << " " << (1.0 + 0.1 * i) << "\n";
    }
    const auto spec = cost::ingest_spectrum(path);
    CHECK(spec.source == path.string());
    CHECK(spec.nu.size() == 25);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(cost::ingest_spectrum(path), std::invalid_argument);
}

TEST_CASE("to_common_grid: linear interpolation and normalization") {
    cost::ExperimentalSpectrum e;
    for (int i = 0; i <= 10; ++i) {
        e.nu.push_back(static_cast<double>(i));
        e.amp.push_back(static_cast<double>(i));  // ramp: interpolation is exact
    }
    const auto grid = util::linspace(0.0, 10.0, 21);
    cost::GridMapInfo info;
    const auto s = cost::to_common_grid(e, grid, &info);
    REQUIRE(s.normalized);
    CHECK(util::trapezoid(s.nu, s.amp) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_FALSE(info.outside_support);
    // midpoint of (4,4)-(5,5) is 4.5 before normalization: check via ratios
    CHECK(s.amp[9] / s.amp[10] == doctest::Approx(4.5 / 5.0));
}

TEST_CASE("to_common_grid: two-point data queried at the midpoint") {
    cost::ExperimentalSpectrum e;
    e.nu = {0.0, 1.0};
    e.amp = {0.0, 1.0};
    const std::vector<double> grid = {0.0, 0.5, 1.0};
    const auto s = cost::to_common_grid(e, grid);
    // before normalization the midpoint is 0.5: ratios survive normalization
    CHECK(s.amp[1] / s.amp[2] == doctest::Approx(0.5));
}

TEST_CASE("to_common_grid: outside points are zeroed and flagged, negatives clipped") {
    cost::ExperimentalSpectrum e;
    for (int i = 0; i <= 10; ++i) {
        e.nu.push_back(100.0 + i);
        e.amp.push_back(i == 5 ? -2.0 : 1.0);  // one negative baseline dip
    }
    cost::GridMapInfo info;
    const auto s = cost::to_common_grid(e, util::linspace(95.0, 115.0, 41), &info);
    CHECK(info.outside_support);
    CHECK(info.clipped_negatives > 0);
    CHECK(s.amp.front() == 0.0);
    CHECK(s.amp.back() == 0.0);
    for (double a : s.amp) CHECK(a >= 0.0);

    CHECK_THROWS_WITH_AS(cost::to_common_grid(e, util::linspace(500.0, 600.0, 11)),
                         doctest::Contains("outside the data support"), std::invalid_argument);
}

TEST_CASE("spectral_cost: zero self-distance and symmetry") {
    const auto grid = util::linspace(0.0, 100.0, 501);
    const auto a = gaussian_spectrum(grid, 40.0, 5.0);
    const auto b = gaussian_spectrum(grid, 60.0, 8.0);
    CHECK(cost::spectral_cost(a, a) == 0.0);
    CHECK(cost::spectral_cost(a, b) == doctest::Approx(cost::spectral_cost(b, a)).epsilon(1e-15));
}

TEST_CASE("spectral_cost: disjoint support reaches the maximum of 2 exactly") {
    const auto grid = util::linspace(0.0, 1000.0, 2001);
    spectra::Spectrum a, b;
    a.nu = b.nu = grid;
    a.amp.assign(grid.size(), 0.0);
    b.amp.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 400.0) a.amp[i] = 1.0;
        if (grid[i] > 600.0) b.amp[i] = 1.0;
    }
    for (auto* s : {&a, &b}) {
        const double area = util::trapezoid(s->nu, s->amp);
        for (double& v : s->amp) v /= area;
        s->normalized = true;
    }
    CHECK(cost::spectral_cost(a, b) == 2.0);
}

TEST_CASE("spectral_cost: equal-width Gaussian pair matches the quadrature oracle") {
    const double sigma = 10.0;
    for (double d : {5.0, 10.0, 25.0, 60.0}) {
        const auto grid = util::linspace(-150.0, 150.0 + d, 3001);
        const auto a = gaussian_spectrum(grid, 0.0, sigma);
        const auto b = gaussian_spectrum(grid, d, sigma);

        // direct quadrature of |g1 - g2| for unit-area Gaussians on a fine grid
        const auto fine = util::linspace(-150.0, 150.0 + d, 200001);
        std::vector<double> diff(fine.size());
        const double norm = 1.0 / (sigma * std::sqrt(2.0 * oracles::kPi));
        for (std::size_t i = 0; i < fine.size(); ++i) {
            const double g1 = norm * std::exp(-0.5 * fine[i] * fine[i] / (sigma * sigma));
            const double r = fine[i] - d;
            const double g2 = norm * std::exp(-0.5 * r * r / (sigma * sigma));
            diff[i] = std::abs(g1 - g2);
        }
        const double oracle = util::trapezoid(fine, diff);
        // closed form of the same quantity: 2 erf(d / (2 sigma sqrt(2)))
        CHECK(oracle == doctest::Approx(2.0 * std::erf(d / (2.0 * sigma * std::sqrt(2.0))))
                            .epsilon(1e-6));
        CHECK(cost::spectral_cost(a, b) == doctest::Approx(oracle).epsilon(2e-4));
    }
}

TEST_CASE("spectral_cost: bounded by [0,2] for random nonnegative spectra") {
    oracles::TestRng rng(7);
    const auto grid = util::linspace(0.0, 50.0, 301);
    for (int trial = 0; trial < 20; ++trial) {
        spectra::Spectrum a, b;
        a.nu = b.nu = grid;
        a.amp.resize(grid.size());
        b.amp.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            a.amp[i] = rng.uniform();
            b.amp[i] = rng.uniform();
        }
        for (auto* s : {&a, &b}) {
            const double area = util::trapezoid(s->nu, s->amp);
            for (double& v : s->amp) v /= area;
            s->normalized = true;
        }
        const double c = cost::spectral_cost(a, b);
        CHECK(c >= 0.0);
        CHECK(c <= 2.0);
    }
}

TEST_CASE("spectral_cost: grid-refinement stability below 1e-3") {
    const double sigma = 12.0;
    const double d = 15.0;
    const auto coarse_grid = util::linspace(-120.0, 135.0, 2001);
    const auto fine_grid = util::linspace(-120.0, 135.0, 4001);
    const double coarse = cost::spectral_cost(gaussian_spectrum(coarse_grid, 0.0, sigma),
                                              gaussian_spectrum(coarse_grid, d, sigma));
    const double fine = cost::spectral_cost(gaussian_spectrum(fine_grid, 0.0, sigma),
                                            gaussian_spectrum(fine_grid, d, sigma));
    CHECK(std::abs(coarse - fine) < 1e-3);
}

TEST_CASE("spectral_cost rejects unnormalized input and mismatched grids") {
    const auto grid = util::linspace(0.0, 10.0, 101);
    auto a = gaussian_spectrum(grid, 5.0, 1.0);
    auto b = gaussian_spectrum(grid, 6.0, 1.0);
    spectra::Spectrum raw = a;
    raw.normalized = false;
    CHECK_THROWS_AS(cost::spectral_cost(raw, b), std::invalid_argument);

    auto shifted = gaussian_spectrum(util::linspace(0.0, 11.0, 101), 6.0, 1.0);
    CHECK_THROWS_AS(cost::spectral_cost(a, shifted), std::invalid_argument);
}

TEST_CASE("signed distance of normalized spectra is numerically zero") {
    const auto grid = util::linspace(0.0, 200.0, 1001);
    const auto a = gaussian_spectrum(grid, 80.0, 7.0);
    const auto b = gaussian_spectrum(grid, 120.0, 11.0);
    CHECK(std::abs(cost::spectral_cost_signed(a, b)) < 1e-12);
}
