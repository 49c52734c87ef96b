#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specfit/model.hpp"

#include "oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace specfit;

namespace {

const model::MonomerParams kTableMonomer{16120.0, 1450.0, 0.67, 37.0, 223.0};

double hermiticity_defect(const Eigen::MatrixXcd& h) {
    const double scale = h.cwiseAbs().maxCoeff();
    return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("monomer hamiltonian: S=0 gives a bare vibrational ladder") {
    model::MonomerParams p = kTableMonomer;
    p.huang_rhys = 0.0;
    const auto h = model::build_monomer_hamiltonian(p, model::BasisSpec{6});
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            if (i == j) {
                CHECK(h.entries(i, j).real() == doctest::Approx(16120.0 + i * 1450.0));
            } else {
                CHECK(std::abs(h.entries(i, j)) == 0.0);
            }
        }
    }
}

TEST_CASE("monomer hamiltonian: vibronic coupling element at table values") {
    const auto h = model::build_monomer_hamiltonian(kTableMonomer, model::BasisSpec{1});
    // sqrt(0.67) * 1450
    CHECK(h.entries(0, 1).real() == doctest::Approx(1186.8761519215054).epsilon(1e-12));
    CHECK(h.entries(1, 0) == h.entries(0, 1));
    CHECK(h.dim() == 2);
}

TEST_CASE("monomer hamiltonian: hermitian and correctly labelled") {
    oracles::TestRng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        model::MonomerParams p{rng.uniform(10000, 20000), rng.uniform(500, 2500),
                               rng.uniform(0.0, 1.5), rng.uniform(0.0, 50.0),
                               rng.uniform(50, 500)};
        const auto h = model::build_monomer_hamiltonian(p, model::BasisSpec{8});
        CHECK(hermiticity_defect(h.entries) < 1e-12);
        for (int k = 0; k <= 8; ++k) {
            CHECK(h.labels[static_cast<std::size_t>(k)].site == 0);
            CHECK(h.labels[static_cast<std::size_t>(k)].q1 == k);
            CHECK(h.labels[static_cast<std::size_t>(k)].total_quanta() == k);
        }
    }
}

TEST_CASE("monomer hamiltonian rejects non-finite parameters") {
    model::MonomerParams p = kTableMonomer;
    p.omega_vib = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(model::build_monomer_hamiltonian(p, model::BasisSpec{4}), std::invalid_argument);
    p = kTableMonomer;
    p.epsilon_e = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(model::build_monomer_hamiltonian(p, model::BasisSpec{4}), std::invalid_argument);
    p = kTableMonomer;
    p.huang_rhys = -0.1;
    CHECK_THROWS_AS(model::build_monomer_hamiltonian(p, model::BasisSpec{4}), std::invalid_argument);
}

TEST_CASE("dimer hamiltonian: n_max=0 block and closed-form eigenvalues") {
    const model::DimerParams pd{755.0, -28.0, 28.0, 286.0};
    const auto h = model::build_dimer_hamiltonian(kTableMonomer, pd, model::BasisSpec{0});
    REQUIRE(h.dim() == 2);
    CHECK(h.entries(0, 0).real() == doctest::Approx(16092.0));
    CHECK(h.entries(1, 1).real() == doctest::Approx(16092.0));
    CHECK(h.entries(0, 1).real() == doctest::Approx(755.0));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.entries);
    CHECK(es.eigenvalues()(0) == doctest::Approx(15337.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(16847.0).epsilon(1e-12));
}

TEST_CASE("dimer hamiltonian: hermitian, labelled, site-exchange symmetric") {
    const model::DimerParams pd{-420.0, 130.0, 75.0, 300.0};
    const model::BasisSpec basis{3};
    const auto h = model::build_dimer_hamiltonian(kTableMonomer, pd, basis);
    REQUIRE(h.dim() == 32);
    CHECK(hermiticity_defect(h.entries) < 1e-12);

    // permutation site 1 <-> site 2 combined with mode 1 <-> mode 2
    const int nv = basis.n_max + 1;
    Eigen::MatrixXcd perm = Eigen::MatrixXcd::Zero(h.dim(), h.dim());
    auto idx = [nv](int site, int k1, int k2) { return (site * nv + k1) * nv + k2; };
    for (int site = 0; site < 2; ++site) {
        for (int k1 = 0; k1 < nv; ++k1) {
            for (int k2 = 0; k2 < nv; ++k2) {
                perm(idx(1 - site, k2, k1), idx(site, k1, k2)) = 1.0;
            }
        }
    }
    const Eigen::MatrixXcd transformed = perm * h.entries * perm.adjoint();
    CHECK((transformed - h.entries).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dimer hamiltonian: V=0, delta=0 reduces to monomer blocks") {
    const model::DimerParams pd{0.0, 0.0, 40.0, 250.0};
    for (int n_max = 1; n_max <= 3; ++n_max) {
        const model::BasisSpec basis{n_max};
        const auto hd = model::build_dimer_hamiltonian(kTableMonomer, pd, basis);
        const auto hm = model::build_monomer_hamiltonian(kTableMonomer, basis);
        const int nv = n_max + 1;
        const int dim = 2 * nv * nv;

        // off-diagonal blocks between the two sites vanish
        for (int i = 0; i < nv * nv; ++i) {
            for (int j = 0; j < nv * nv; ++j) {
                CHECK(std::abs(hd.entries(i, nv * nv + j)) == 0.0);
            }
        }

        // eigenvalue multiset equals monomer (+) spectator-ladder energies
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_d(hd.entries);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_m(hm.entries);
        std::vector<double> expected;
        for (int k = 0; k < nv; ++k) {
            for (int i = 0; i < nv; ++i) {
                expected.push_back(es_m.eigenvalues()(i) + k * kTableMonomer.omega_vib);
            }
        }
        expected.insert(expected.end(), expected.begin(), expected.end());  // two sites
        std::sort(expected.begin(), expected.end());
        REQUIRE(static_cast<int>(expected.size()) == dim);
        for (int i = 0; i < dim; ++i) {
            CHECK(es_d.eigenvalues()(i) == doctest::Approx(expected[static_cast<std::size_t>(i)])
                                               .epsilon(1e-10));
        }
    }
}

TEST_CASE("dimer hamiltonian enforces the dimension cap") {
    const model::DimerParams pd{100.0, 0.0, 30.0, 200.0};
    CHECK_THROWS_AS(model::build_dimer_hamiltonian(kTableMonomer, pd, model::BasisSpec{80}),
                    std::invalid_argument);
    CHECK_NOTHROW(model::build_dimer_hamiltonian(kTableMonomer, pd, model::BasisSpec{80}, 20000));
}

TEST_CASE("vibrational damping is diagonal with nonpositive imaginary part") {
    const model::DimerParams pd{200.0, -50.0, 60.0, 280.0};
    auto h = model::build_dimer_hamiltonian(kTableMonomer, pd, model::BasisSpec{2});
    const Eigen::MatrixXcd undamped = h.entries;
    model::add_vibrational_damping(h, 12.5);
    const Eigen::MatrixXcd anti = h.entries - undamped;
    for (Eigen::Index i = 0; i < h.dim(); ++i) {
        for (Eigen::Index j = 0; j < h.dim(); ++j) {
            if (i == j) {
                const int quanta = h.labels[static_cast<std::size_t>(i)].total_quanta();
                CHECK(anti(i, j).imag() == doctest::Approx(-12.5 * quanta));
                CHECK(anti(i, j).imag() <= 0.0);
            } else {
                CHECK(std::abs(anti(i, j)) == 0.0);
            }
        }
    }
    CHECK_THROWS_AS(model::add_vibrational_damping(h, -1.0), std::invalid_argument);
}

TEST_CASE("truncated-mode ground energy approaches -S*omega") {
    CHECK(model::mode_ground_energy(1450.0, 0.67, 0) == 0.0);
    CHECK(model::mode_ground_energy(1450.0, 0.0, 10) == 0.0);
    const double e0 = model::mode_ground_energy(1450.0, 0.67, 20);
    CHECK(e0 == doctest::Approx(-0.67 * 1450.0).epsilon(1e-10));
    // variational: truncation can only raise the ground energy
    CHECK(model::mode_ground_energy(1450.0, 0.67, 4) >= e0);
}
