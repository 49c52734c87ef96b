#include "specfit/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace specfit::model {

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be finite");
    }
}

}  // namespace

void MonomerParams::validate() const {
    require_finite(epsilon_e, "epsilon_e");
    require_finite(omega_vib, "omega_vib");
    require_finite(huang_rhys, "huang_rhys");
    require_finite(gamma, "gamma");
    require_finite(sigma_m, "sigma_m");
    if (!(epsilon_e > 0.0)) throw std::invalid_argument("epsilon_e must be > 0");
    if (!(omega_vib > 0.0)) throw std::invalid_argument("omega_vib must be > 0");
    if (huang_rhys < 0.0) throw std::invalid_argument("huang_rhys must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (!(sigma_m > 0.0)) throw std::invalid_argument("sigma_m must be > 0");
}

void DimerParams::validate() const {
    require_finite(coupling_v, "coupling_v");
    require_finite(delta, "delta");
    require_finite(alpha_deg, "alpha_deg");
    require_finite(sigma_d, "sigma_d");
    if (alpha_deg < 0.0 || alpha_deg > 180.0) {
        throw std::invalid_argument("alpha_deg must lie in [0, 180]");
    }
    if (!(sigma_d > 0.0)) throw std::invalid_argument("sigma_d must be > 0");
}

void BasisSpec::validate() const {
    if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
}

HamiltonianMatrix build_monomer_hamiltonian(const MonomerParams& p, const BasisSpec& b) {
    p.validate();
    b.validate();

    const int dim = b.monomer_dim();
    HamiltonianMatrix h;
    h.entries = Eigen::MatrixXcd::Zero(dim, dim);
    h.labels.resize(static_cast<std::size_t>(dim));

    const double g = std::sqrt(p.huang_rhys) * p.omega_vib;
    for (int k = 0; k < dim; ++k) {
        h.labels[static_cast<std::size_t>(k)] = BasisState{0, k, 0};
        h.entries(k, k) = p.epsilon_e + k * p.omega_vib;
        if (k + 1 < dim) {
            const double v = g * std::sqrt(static_cast<double>(k + 1));
            h.entries(k, k + 1) = v;
            h.entries(k + 1, k) = v;
        }
    }
    return h;
}

HamiltonianMatrix build_dimer_hamiltonian(const MonomerParams& pm, const DimerParams& pd,
                                          const BasisSpec& b, int dimension_cap) {
    pm.validate();
    pd.validate();
    b.validate();

    const int nvib = b.n_max + 1;
    const int dim = b.dimer_dim();
    if (dim > dimension_cap) {
        throw std::invalid_argument("dimer basis dimension " + std::to_string(dim) +
                                    " exceeds cap " + std::to_string(dimension_cap));
    }

    HamiltonianMatrix h;
    h.entries = Eigen::MatrixXcd::Zero(dim, dim);
    h.labels.resize(static_cast<std::size_t>(dim));

    auto index = [nvib](int site, int k1, int k2) {
        return (site * nvib + k1) * nvib + k2;
    };

    const double site_energy = pm.epsilon_e + pd.delta;
    const double g = std::sqrt(pm.huang_rhys) * pm.omega_vib;

    for (int site = 0; site < 2; ++site) {
        for (int k1 = 0; k1 < nvib; ++k1) {
            for (int k2 = 0; k2 < nvib; ++k2) {
                const int row = index(site, k1, k2);
                h.labels[static_cast<std::size_t>(row)] = BasisState{site, k1, k2};
                h.entries(row, row) = site_energy + (k1 + k2) * pm.omega_vib;

                // vibronic ladder on the excited site's own mode
                const int kq = (site == 0) ? k1 : k2;
                if (kq + 1 < nvib) {
                    const int col = (site == 0) ? index(site, k1 + 1, k2) : index(site, k1, k2 + 1);
                    const double v = g * std::sqrt(static_cast<double>(kq + 1));
                    h.entries(row, col) = v;
                    h.entries(col, row) = v;
                }

                // electronic coupling between sites at equal vibrational quanta
                if (site == 0) {
                    const int col = index(1, k1, k2);
                    h.entries(row, col) = pd.coupling_v;
                    h.entries(col, row) = pd.coupling_v;
                }
            }
        }
    }
    return h;
}

void add_vibrational_damping(HamiltonianMatrix& h, double gamma) {
    if (!std::isfinite(gamma) || gamma < 0.0) {
        throw std::invalid_argument("gamma must be finite and >= 0");
    }
    for (Eigen::Index i = 0; i < h.dim(); ++i) {
        h.entries(i, i) -= std::complex<double>(0.0, gamma * h.labels[static_cast<std::size_t>(i)].total_quanta());
    }
}

double mode_ground_energy(double omega_vib, double huang_rhys, int n_max) {
    if (n_max == 0 || huang_rhys == 0.0) return 0.0;
    const int dim = n_max + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    const double g = std::sqrt(huang_rhys) * omega_vib;
    for (int k = 0; k < dim; ++k) {
        h(k, k) = k * omega_vib;
        if (k + 1 < dim) {
            h(k, k + 1) = h(k + 1, k) = g * std::sqrt(static_cast<double>(k + 1));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

}  // namespace specfit::model
