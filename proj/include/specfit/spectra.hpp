// spectra.hpp — dipole correlation functions from damped time propagation and
// their transform into broadened, area-normalized absorption spectra.
//
// The vibrational damping gamma enters as the non-Hermitian term
// -i*gamma*a^dag*a, which realizes the exponential environmental correlation
// S*omega^2*exp(-(gamma + i*omega)*tau) for this zero-temperature
// linear-response observable; quantum-jump contributions never reach the
// one-excitation/ground coherence, so wavefunction propagation suffices.

#pragma once

#include "specfit/model.hpp"

#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace specfit::spectra {

struct TimeGrid {
    double dt = 0.0;  // 1/cm^-1
    int n_steps = 0;  // number of samples, t_j = j*dt

    double t(int j) const { return dt * j; }
    double t_max() const { return dt * (n_steps - 1); }
    void validate() const;
};

enum class CorrelationKind { monomer, dimer_plus, dimer_minus, dimer_combined };

struct CorrelationSeries {
    TimeGrid grid;
    std::vector<std::complex<double>> values;
    CorrelationKind kind = CorrelationKind::monomer;
};

struct SpectrumDiagnostics {
    double coverage = 1.0;          // raw on-grid area / expected total area
    bool coverage_warning = false;  // grid missed part of the spectral support
    int clipped_points = 0;         // negative amplitudes clipped to zero
    double min_raw_amplitude = 0.0;
};

struct Spectrum {
    std::vector<double> nu;   // cm^-1, strictly increasing, uniform
    std::vector<double> amp;  // >= 0 once normalized
    bool normalized = false;
    SpectrumDiagnostics diag{};
};

enum class PropagationMethod {
    auto_select,       // spectral decomposition, step-exponential fallback
    spectral,
    step_exponential,
};

struct PropagationOptions {
    PropagationMethod method = PropagationMethod::auto_select;
};

struct PropagationError : std::runtime_error {
    explicit PropagationError(const std::string& what) : std::runtime_error(what) {}
};

// Minimum decay of the Gaussian window at the end of the time grid:
// sigma * t_max >= 6 (window below e^-18).
inline constexpr double kMinWindowDecay = 6.0;

// Fraction of the expected total spectral area that must fall on the
// frequency grid before a coverage warning is raised.
inline constexpr double kMinSupportCoverage = 0.98;

// Time grid with dt from a phase-error cap (max beat frequency between the
// requested frequency window and the populated part of the spectrum times dt
// stays below `phase_cap` radians) and t_max from the window-decay rule for
// the smallest sigma in use. Pass pd = nullptr for the monomer.
TimeGrid suggest_time_grid(const model::MonomerParams& pm, const model::DimerParams* pd,
                           const model::BasisSpec& b, double nu_lo, double nu_hi,
                           double phase_cap = 0.1, double window_decay = kMinWindowDecay);

// M(t_j) = <e,0| exp(-i H_eff t_j) |e,0>, energies referenced so the 0-0 line
// sits at epsilon_e. M(0) = 1.
CorrelationSeries monomer_correlation(const model::MonomerParams& p, const model::BasisSpec& b,
                                      const TimeGrid& g, const PropagationOptions& opts = {});

// Symmetric/antisymmetric components M_+/M_- from propagating the combined
// site states (|1,0,0> +/- |2,0,0>)/sqrt(2) under the damped dimer
// Hamiltonian. M_+(0) = M_-(0) = 1.
std::pair<CorrelationSeries, CorrelationSeries> dimer_correlation_components(
    const model::MonomerParams& pm, const model::DimerParams& pd, const model::BasisSpec& b,
    const TimeGrid& g, const PropagationOptions& opts = {});

// M_dim = (1 + cos alpha) M_+ + (1 - cos alpha) M_-.
CorrelationSeries combine_dimer_correlation(const CorrelationSeries& plus,
                                            const CorrelationSeries& minus, double alpha_deg);

// A(nu) = Re  int_0^inf dt e^{i nu t} M(t) exp(-sigma^2 t^2 / 2), trapezoid on
// the stored grid, then area-normalized. Tiny negative quadrature ripples are
// clipped and counted; insufficient grid coverage of the spectral support is
// reported through the diagnostics.
Spectrum correlation_to_spectrum(const CorrelationSeries& m, double sigma,
                                 const std::vector<double>& nu_grid,
                                 double min_coverage = kMinSupportCoverage);

Spectrum simulate_monomer(const model::MonomerParams& p, const model::BasisSpec& b,
                          const TimeGrid& g, const std::vector<double>& nu_grid);
Spectrum simulate_monomer(const model::MonomerParams& p, const model::BasisSpec& b,
                          const std::vector<double>& nu_grid);

Spectrum simulate_dimer(const model::MonomerParams& pm, const model::DimerParams& pd,
                        const model::BasisSpec& b, const TimeGrid& g,
                        const std::vector<double>& nu_grid);
Spectrum simulate_dimer(const model::MonomerParams& pm, const model::DimerParams& pd,
                        const model::BasisSpec& b, const std::vector<double>& nu_grid);

// Default frequency window around the vibronic progression; 2001 points over
// [eps - 10 sigma - omega, eps + 6 omega + 10 sigma], widened by |V| + |delta|
// for the dimer.
std::vector<double> default_nu_grid(const model::MonomerParams& pm,
                                    const model::DimerParams* pd = nullptr, int points = 2001);

// Debug dumps: "t Re(M) Im(M)" / "nu amplitude" with '#' header lines.
void write_correlation(std::ostream& out, const CorrelationSeries& m);
void write_spectrum(std::ostream& out, const Spectrum& s);

}  // namespace specfit::spectra
