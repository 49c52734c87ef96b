// model.hpp — truncated-basis excited-state Hamiltonians for a vibronic
// monomer and a dimer of two coupled monomers.
//
// Conventions: all energies in cm^-1, hbar = 1 (time carries units of
// 1/cm^-1 so phases are exp(-i E t) with E in cm^-1). The electronic ground
// state energy is the zero of energy.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace specfit::model {

// Monomer quantities: electronic excitation energy, vibrational frequency,
// Huang-Rhys factor, vibrational damping rate, Gaussian broadening width.
struct MonomerParams {
    double epsilon_e = 0.0;   // cm^-1, > 0
    double omega_vib = 0.0;   // cm^-1, > 0
    double huang_rhys = 0.0;  // dimensionless, >= 0
    double gamma = 0.0;       // cm^-1, >= 0
    double sigma_m = 0.0;     // cm^-1, > 0

    void validate() const;
};

// Additional dimer quantities: Coulomb coupling (signed), dimerization
// shift (signed), torsional angle between transition dipoles, broadening.
struct DimerParams {
    double coupling_v = 0.0;  // cm^-1
    double delta = 0.0;       // cm^-1
    double alpha_deg = 0.0;   // degrees, in [0, 180]
    double sigma_d = 0.0;     // cm^-1, > 0

    void validate() const;
};

// Harmonic-ladder truncation: vibrational quantum numbers run 0..n_max per
// mode. Monomer excited manifold has n_max+1 states, the dimer has
// 2*(n_max+1)^2. The default satisfies the convergence rule that spectra at
// n_max and n_max+2 agree within 1e-4 in cost distance for S <= 1.
struct BasisSpec {
    int n_max = 12;

    void validate() const;
    int monomer_dim() const { return n_max + 1; }
    int dimer_dim() const { return 2 * (n_max + 1) * (n_max + 1); }
};

// Row label: excited site index (0 for the monomer, 0/1 for the dimer) and
// vibrational quanta per mode (q2 unused for the monomer).
struct BasisState {
    int site = 0;
    int q1 = 0;
    int q2 = 0;

    int total_quanta() const { return q1 + q2; }
};

struct HamiltonianMatrix {
    Eigen::MatrixXcd entries;
    std::vector<BasisState> labels;

    Eigen::Index dim() const { return entries.rows(); }
};

inline constexpr int kDefaultDimerDimensionCap = 8192;

// Excited-manifold monomer Hamiltonian over |e> (x) |k>, k = 0..n_max:
// diagonal epsilon_e + k*omega_vib, ladder coupling sqrt(S)*omega_vib.
HamiltonianMatrix build_monomer_hamiltonian(const MonomerParams& p, const BasisSpec& b);

// Single-excitation dimer Hamiltonian over {|1>,|2>} (x) |k1> (x) |k2>:
// site energies epsilon_e + delta + (k1+k2)*omega_vib, electronic coupling V
// between sites at equal quanta, and the on-site vibronic ladder acting on
// the excited site's own mode only.
HamiltonianMatrix build_dimer_hamiltonian(const MonomerParams& pm, const DimerParams& pd,
                                          const BasisSpec& b,
                                          int dimension_cap = kDefaultDimerDimensionCap);

// Adds the non-Hermitian vibrational damping -i*gamma*(total quanta) to the
// diagonal, in place.
void add_vibrational_damping(HamiltonianMatrix& h, double gamma);

// Ground-state energy of the truncated displaced mode
// omega*a^dag*a + sqrt(S)*omega*(a^dag + a); tends to -S*omega as n_max grows.
// Used as the energy reference that puts the monomer 0-0 line at epsilon_e.
double mode_ground_energy(double omega_vib, double huang_rhys, int n_max);

}  // namespace specfit::model
