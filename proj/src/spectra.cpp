#include "specfit/spectra.hpp"

#include "specfit/util.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace specfit::spectra {

namespace {

using Complex = std::complex<double>;

// ---------------------------- propagation core ------------------------------

// Correlation M(t_j) = <psi0| exp(-i H t_j) |psi0> for a (possibly damped,
// complex-symmetric) effective Hamiltonian.
struct CorrelationProblem {
    const Eigen::MatrixXcd& h;
    const Eigen::VectorXcd& psi0;
    const TimeGrid& grid;
};

bool within_contraction_bound(const std::vector<Complex>& m, double norm0, double* worst) {
    double max_abs = 0.0;
    for (const Complex& v : m) max_abs = std::max(max_abs, std::abs(v));
    if (worst) *worst = max_abs;
    return max_abs <= norm0 + 1e-9;
}

// Spectral route: one eigendecomposition, then O(dim) per time point via
// per-eigenvalue phase recurrences.
bool correlation_spectral(const CorrelationProblem& prob, std::vector<Complex>& out) {
    const Eigen::Index n = prob.h.rows();
    Eigen::MatrixXcd work = prob.h;  // zgeev overwrites its input
    Eigen::VectorXcd lambda(n);
    Eigen::MatrixXcd vecs(n, n);
    const int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(n),
        reinterpret_cast<lapack_complex_double*>(work.data()), static_cast<lapack_int>(n),
        reinterpret_cast<lapack_complex_double*>(lambda.data()), nullptr,
        static_cast<lapack_int>(n), reinterpret_cast<lapack_complex_double*>(vecs.data()),
        static_cast<lapack_int>(n));
    if (info != 0) return false;

    const Eigen::VectorXcd w = vecs.partialPivLu().solve(prob.psi0);
    const Eigen::RowVectorXcd u = prob.psi0.adjoint() * vecs;

    const Eigen::Index dim = n;
    Eigen::VectorXcd weight(dim);
    Complex total(0.0, 0.0);
    for (Eigen::Index k = 0; k < dim; ++k) {
        weight(k) = u(k) * w(k);
        total += weight(k);
    }
    // the decomposition must reproduce M(0) = <psi0|psi0>
    const double norm0 = prob.psi0.squaredNorm();
    if (std::abs(total - Complex(norm0, 0.0)) > 1e-10 * std::max(1.0, norm0)) return false;

    Eigen::VectorXcd factor(dim), phase(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        factor(k) = std::exp(Complex(0.0, -1.0) * lambda(k) * prob.grid.dt);
        phase(k) = Complex(1.0, 0.0);
    }

    out.assign(static_cast<std::size_t>(prob.grid.n_steps), Complex(0.0, 0.0));
    for (int j = 0; j < prob.grid.n_steps; ++j) {
        Complex acc(0.0, 0.0);
        for (Eigen::Index k = 0; k < dim; ++k) acc += weight(k) * phase(k);
        out[static_cast<std::size_t>(j)] = acc;
        for (Eigen::Index k = 0; k < dim; ++k) phase(k) *= factor(k);
    }
    return within_contraction_bound(out, norm0, nullptr);
}

// Step route: scaled-and-squared matrix exponential applied per step.
void correlation_step(const CorrelationProblem& prob, std::vector<Complex>& out) {
    const Eigen::MatrixXcd propagator = (Complex(0.0, -1.0) * prob.grid.dt * prob.h).exp();
    Eigen::VectorXcd psi = prob.psi0;
    out.assign(static_cast<std::size_t>(prob.grid.n_steps), Complex(0.0, 0.0));
    for (int j = 0; j < prob.grid.n_steps; ++j) {
        out[static_cast<std::size_t>(j)] = prob.psi0.dot(psi);
        if (j + 1 < prob.grid.n_steps) psi = propagator * psi;
    }
    const double norm0 = prob.psi0.squaredNorm();
    double worst = 0.0;
    if (!within_contraction_bound(out, norm0, &worst)) {
        std::ostringstream msg;
        msg << "propagation norm blowup: max |M| = " << worst << " exceeds M(0) = " << norm0
            << " (dim " << prob.h.rows() << ", dt " << prob.grid.dt << ", steps "
            << prob.grid.n_steps << "); check step size and basis truncation";
        throw PropagationError(msg.str());
    }
}

std::vector<Complex> propagate_correlation(const CorrelationProblem& prob,
                                           const PropagationOptions& opts) {
    std::vector<Complex> out;
    switch (opts.method) {
        case PropagationMethod::spectral:
            if (!correlation_spectral(prob, out)) {
                throw PropagationError("spectral propagation failed the reconstruction check");
            }
            return out;
        case PropagationMethod::step_exponential:
            correlation_step(prob, out);
            return out;
        case PropagationMethod::auto_select:
        default:
            if (correlation_spectral(prob, out)) return out;
            correlation_step(prob, out);
            return out;
    }
}

// --------------------------- dimer sector matrices ---------------------------

// The dimer Hamiltonian commutes with the site/mode exchange, and the initial
// states (|1,0,0> +/- |2,0,0>)/sqrt(2) live entirely in the corresponding
// exchange-adapted sectors |+/-; k1 k2> = (|1,k1,k2> +/- |2,k2,k1>)/sqrt(2) of
// dimension (n_max+1)^2 each, which halves the diagonalization work relative
// to the full space. Equivalence with the full-space double-sum route is
// covered by tests.
Eigen::MatrixXcd dimer_sector_hamiltonian(const model::MonomerParams& pm,
                                          const model::DimerParams& pd, int n_max, int sign,
                                          double energy_offset) {
    const int nvib = n_max + 1;
    const int dim = nvib * nvib;
    auto idx = [nvib](int k1, int k2) { return k1 * nvib + k2; };

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    const double g = std::sqrt(pm.huang_rhys) * pm.omega_vib;
    const double site_energy = pm.epsilon_e + pd.delta - energy_offset;

    for (int k1 = 0; k1 < nvib; ++k1) {
        for (int k2 = 0; k2 < nvib; ++k2) {
            const int row = idx(k1, k2);
            h(row, row) += Complex(site_energy + (k1 + k2) * pm.omega_vib,
                                   -pm.gamma * (k1 + k2));
            if (k1 + 1 < nvib) {
                const double v = g * std::sqrt(static_cast<double>(k1 + 1));
                h(row, idx(k1 + 1, k2)) += v;
                h(idx(k1 + 1, k2), row) += v;
            }
            h(row, idx(k2, k1)) += sign * pd.coupling_v;
        }
    }
    return h;
}

// Smallest k whose Franck-Condon weight e^-S S^k / k! drops below `tail`;
// bounds the vibrational band that carries spectral weight.
int franck_condon_extent(double s, double tail) {
    if (s <= 0.0) return 0;
    double p = std::exp(-s);
    int k = 0;
    while ((p >= tail || k < s) && k < 512) {
        ++k;
        p *= s / k;
    }
    return k;
}

}  // namespace

void TimeGrid::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be > 0");
    if (n_steps < 2) throw std::invalid_argument("TimeGrid: need n_steps >= 2");
}

TimeGrid suggest_time_grid(const model::MonomerParams& pm, const model::DimerParams* pd,
                           const model::BasisSpec& b, double nu_lo, double nu_hi,
                           double phase_cap, double window_decay) {
    pm.validate();
    b.validate();
    if (pd) pd->validate();
    if (!(nu_lo < nu_hi)) throw std::invalid_argument("suggest_time_grid: need nu_lo < nu_hi");
    if (!(phase_cap > 0.0)) throw std::invalid_argument("suggest_time_grid: phase_cap must be > 0");

    const double sigma = pd ? pd->sigma_d : pm.sigma_m;
    const double omega = pm.omega_vib;
    const double s = pm.huang_rhys;
    const double v_abs = pd ? std::abs(pd->coupling_v) : 0.0;
    const double center = pm.epsilon_e + (pd ? pd->delta : 0.0);
    const int q_max = pd ? 2 * b.n_max : b.n_max;

    // The step is set by the band that carries spectral weight, not the raw
    // ladder top, so that the grid does not change once the basis covers the
    // Franck-Condon band. Levels with weight < 1e-9 may alias harmlessly.
    const int q_eff = std::min(q_max, franck_condon_extent(s, 1e-6));
    const double margin = s * omega + v_abs + omega;
    const double e_lo = center - margin;
    const double e_hi_eff = center + q_eff * omega + margin;
    const double beat_eff = std::max({nu_hi - e_lo, e_hi_eff - nu_lo, sigma});

    // one-radian cap over the 1e-9-weight band
    const int q_alias = std::min(q_max, franck_condon_extent(s, 1e-9) + 2);
    const double margin_alias = s * omega + v_abs + 2.0 * omega;
    const double e_hi_alias = center + q_alias * omega + margin_alias;
    const double beat_alias = std::max(nu_hi - (center - margin_alias), e_hi_alias - nu_lo);

    double dt = std::min(phase_cap / beat_eff, 1.0 / beat_alias);
    const double t_max = window_decay / sigma;
    const int n_steps = std::max(16, static_cast<int>(std::ceil(t_max / dt)) + 1);
    dt = t_max / (n_steps - 1);

    TimeGrid g{dt, n_steps};
    g.validate();
    return g;
}

CorrelationSeries monomer_correlation(const model::MonomerParams& p, const model::BasisSpec& b,
                                      const TimeGrid& g, const PropagationOptions& opts) {
    p.validate();
    b.validate();
    g.validate();

    model::HamiltonianMatrix h = model::build_monomer_hamiltonian(p, b);
    model::add_vibrational_damping(h, p.gamma);
    const double offset = model::mode_ground_energy(p.omega_vib, p.huang_rhys, b.n_max);
    h.entries.diagonal().array() -= offset;

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(h.dim());
    psi0(0) = 1.0;

    CorrelationSeries series;
    series.grid = g;
    series.kind = CorrelationKind::monomer;
    series.values = propagate_correlation({h.entries, psi0, g}, opts);
    return series;
}

std::pair<CorrelationSeries, CorrelationSeries> dimer_correlation_components(
    const model::MonomerParams& pm, const model::DimerParams& pd, const model::BasisSpec& b,
    const TimeGrid& g, const PropagationOptions& opts) {
    pm.validate();
    pd.validate();
    b.validate();
    g.validate();

    const double offset = model::mode_ground_energy(pm.omega_vib, pm.huang_rhys, b.n_max);
    const int nvib = b.n_max + 1;

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(nvib * nvib);
    psi0(0) = 1.0;  // |k1=0, k2=0> in sector coordinates

    std::pair<CorrelationSeries, CorrelationSeries> result;
    for (int sign : {+1, -1}) {
        const Eigen::MatrixXcd h = dimer_sector_hamiltonian(pm, pd, b.n_max, sign, offset);
        CorrelationSeries series;
        series.grid = g;
        series.kind = (sign > 0) ? CorrelationKind::dimer_plus : CorrelationKind::dimer_minus;
        series.values = propagate_correlation({h, psi0, g}, opts);
        if (sign > 0) {
            result.first = std::move(series);
        } else {
            result.second = std::move(series);
        }
    }
    return result;
}

CorrelationSeries combine_dimer_correlation(const CorrelationSeries& plus,
                                            const CorrelationSeries& minus, double alpha_deg) {
    if (plus.grid.dt != minus.grid.dt || plus.grid.n_steps != minus.grid.n_steps ||
        plus.values.size() != minus.values.size()) {
        throw std::invalid_argument("combine_dimer_correlation: time grids differ");
    }
    const double c = std::cos(alpha_deg * util::kPi / 180.0);
    CorrelationSeries out;
    out.grid = plus.grid;
    out.kind = CorrelationKind::dimer_combined;
    out.values.resize(plus.values.size());
    for (std::size_t j = 0; j < out.values.size(); ++j) {
        out.values[j] = (1.0 + c) * plus.values[j] + (1.0 - c) * minus.values[j];
    }
    return out;
}

Spectrum correlation_to_spectrum(const CorrelationSeries& m, double sigma,
                                 const std::vector<double>& nu_grid, double min_coverage) {
    m.grid.validate();
    if (!(sigma > 0.0)) throw std::invalid_argument("correlation_to_spectrum: sigma must be > 0");
    if (m.values.size() != static_cast<std::size_t>(m.grid.n_steps)) {
        throw std::invalid_argument("correlation_to_spectrum: series length != grid");
    }
    if (nu_grid.size() < 2) throw std::invalid_argument("correlation_to_spectrum: nu grid too small");
    if (sigma * m.grid.t_max() < kMinWindowDecay - 1e-9) {
        throw std::invalid_argument(
            "correlation_to_spectrum: time grid too short, window not decayed (sigma*t_max = " +
            util::format_double(sigma * m.grid.t_max()) + " < " +
            util::format_double(kMinWindowDecay) + ")");
    }

    const int nt = m.grid.n_steps;
    const double dt = m.grid.dt;

    // windowed, trapezoid-weighted integrand samples
    std::vector<double> qr(static_cast<std::size_t>(nt)), qi(static_cast<std::size_t>(nt));
    for (int j = 0; j < nt; ++j) {
        const double t = m.grid.t(j);
        double w = std::exp(-0.5 * sigma * sigma * t * t) * dt;
        if (j == 0 || j == nt - 1) w *= 0.5;
        qr[static_cast<std::size_t>(j)] = m.values[static_cast<std::size_t>(j)].real() * w;
        qi[static_cast<std::size_t>(j)] = m.values[static_cast<std::size_t>(j)].imag() * w;
    }

    Spectrum spec;
    spec.nu = nu_grid;
    spec.amp.resize(nu_grid.size());
    for (std::size_t i = 0; i < nu_grid.size(); ++i) {
        const double cs = std::cos(nu_grid[i] * dt);
        const double sn = std::sin(nu_grid[i] * dt);
        double zr = 1.0, zi = 0.0, acc = 0.0;
        for (int j = 0; j < nt; ++j) {
            acc += zr * qr[static_cast<std::size_t>(j)] - zi * qi[static_cast<std::size_t>(j)];
            const double tr = zr * cs - zi * sn;
            zi = zr * sn + zi * cs;
            zr = tr;
        }
        spec.amp[i] = acc;
    }

    // coverage against the exact full-line area pi * M(0) of the half-line
    // transform, then clip quadrature ripples and normalize by area
    const double expected_total = util::kPi * m.values.front().real();
    const double raw_area = util::trapezoid(spec.nu, spec.amp);
    if (expected_total > 0.0) {
        spec.diag.coverage = raw_area / expected_total;
        spec.diag.coverage_warning = spec.diag.coverage < min_coverage;
    }

    double min_amp = 0.0;
    int clipped = 0;
    for (double& a : spec.amp) {
        min_amp = std::min(min_amp, a);
        if (a < 0.0) {
            a = 0.0;
            ++clipped;
        }
    }
    spec.diag.clipped_points = clipped;
    spec.diag.min_raw_amplitude = min_amp;

    const double area = util::trapezoid(spec.nu, spec.amp);
    if (!(area > 0.0)) {
        throw PropagationError("correlation_to_spectrum: spectrum has nonpositive area on the grid");
    }
    for (double& a : spec.amp) a /= area;
    spec.normalized = true;
    return spec;
}

Spectrum simulate_monomer(const model::MonomerParams& p, const model::BasisSpec& b,
                          const TimeGrid& g, const std::vector<double>& nu_grid) {
    return correlation_to_spectrum(monomer_correlation(p, b, g), p.sigma_m, nu_grid);
}

Spectrum simulate_monomer(const model::MonomerParams& p, const model::BasisSpec& b,
                          const std::vector<double>& nu_grid) {
    const TimeGrid g = suggest_time_grid(p, nullptr, b, nu_grid.front(), nu_grid.back());
    return simulate_monomer(p, b, g, nu_grid);
}

Spectrum simulate_dimer(const model::MonomerParams& pm, const model::DimerParams& pd,
                        const model::BasisSpec& b, const TimeGrid& g,
                        const std::vector<double>& nu_grid) {
    auto [mp, mm] = dimer_correlation_components(pm, pd, b, g);
    const CorrelationSeries combined = combine_dimer_correlation(mp, mm, pd.alpha_deg);
    return correlation_to_spectrum(combined, pd.sigma_d, nu_grid);
}

Spectrum simulate_dimer(const model::MonomerParams& pm, const model::DimerParams& pd,
                        const model::BasisSpec& b, const std::vector<double>& nu_grid) {
    const TimeGrid g = suggest_time_grid(pm, &pd, b, nu_grid.front(), nu_grid.back());
    return simulate_dimer(pm, pd, b, g, nu_grid);
}

std::vector<double> default_nu_grid(const model::MonomerParams& pm, const model::DimerParams* pd,
                                    int points) {
    pm.validate();
    const double sigma = pd ? pd->sigma_d : pm.sigma_m;
    const double widen = pd ? std::abs(pd->coupling_v) + std::abs(pd->delta) : 0.0;
    const double lo = pm.epsilon_e - 10.0 * sigma - pm.omega_vib - widen;
    const double hi = pm.epsilon_e + 6.0 * pm.omega_vib + 10.0 * sigma + widen;
    return util::linspace(lo, hi, points);
}

void write_correlation(std::ostream& out, const CorrelationSeries& m) {
    out << "# specfit correlation v1\n# columns: t re_m im_m\n";
    for (std::size_t j = 0; j < m.values.size(); ++j) {
        out << util::format_double(m.grid.t(static_cast<int>(j))) << ' '
            << util::format_double(m.values[j].real()) << ' '
            << util::format_double(m.values[j].imag()) << '\n';
    }
}

void write_spectrum(std::ostream& out, const Spectrum& s) {
    out << "# specfit spectrum v1\n# units: cm-1\n# normalized: " << (s.normalized ? 1 : 0)
        << "\n# columns: nu amplitude\n";
    for (std::size_t i = 0; i < s.nu.size(); ++i) {
        out << util::format_double(s.nu[i]) << ' ' << util::format_double(s.amp[i]) << '\n';
    }
}

}  // namespace specfit::spectra
