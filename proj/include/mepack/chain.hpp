#pragma once

// Linear oscillator chain with free ends: normal modes, phonon Gibbs
// thermodynamics fixed by the expected internal energy, length statistics
// of the end-to-end operator, and the free center-of-mass packet.

#include "mepack/core.hpp"
#include "mepack/dynamics.hpp"
#include "mepack/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace mepack {

struct ChainModel {
    int Nparticles = 3;  // N + 1
    double mu = 1.0;     // particle mass
    double kappa = 1.0;  // oscillator strength; the spring constant is kappa^2
    double xi = 1.0;     // equilibrium spacing
    double hbar = 1.0;

    int N() const { return Nparticles - 1; }

    void validate() const {
        if (Nparticles < 3) throw ValidationError("chain.Nparticles", "need at least 3 (N >= 2)");
        if (!(mu > 0.0)) throw ValidationError("chain.mu", "must be > 0");
        if (!(kappa > 0.0)) throw ValidationError("chain.kappa", "must be > 0");
        if (!(xi > 0.0)) throw ValidationError("chain.xi", "must be > 0");
        if (!(hbar > 0.0)) throw ValidationError("chain.hbar", "must be > 0");
    }
};

// Exact normal modes of the free-ends chain. The eigenbasis is the DCT-II
// family; mode index m = 0..N, particle index n = 1..N+1.
inline double chain_omega(const ChainModel& c, int m) {
    return 2.0 * c.kappa / std::sqrt(c.mu) *
           std::sin(m * std::numbers::pi / (2.0 * (c.N() + 1)));
}

inline double chain_mode_amplitude(const ChainModel& c, int m, int n) {
    const int np = c.N() + 1;
    if (m == 0) return 1.0 / std::sqrt(static_cast<double>(np));
    return std::sqrt(2.0 / np) * std::cos(m * std::numbers::pi * (n - 0.5) / np);
}

// Frequencies and amplitudes as printed in the source formulas (argument
// pi m / N and spectrum sin(m pi / 2N)); kept for the deviation report.
inline double chain_omega_printed(const ChainModel& c, int m) {
    return 2.0 * c.kappa / std::sqrt(c.mu) * std::sin(m * std::numbers::pi / (2.0 * c.N()));
}

inline double chain_mode_amplitude_printed(const ChainModel& c, int m, int n) {
    const int np = c.N() + 1;
    const double a = (m == 0) ? 1.0 / std::sqrt(static_cast<double>(np))
                              : std::sqrt(2.0 / np);
    const double arg = m * std::numbers::pi / c.N() * (n - 0.5 * (c.N() + 2));
    return (m % 2 == 0) ? a * std::cos(arg) : a * std::sin(arg);
}

constexpr int kChainDenseBound = 2049;  // largest N+1 for which Y is materialized

struct ModeBasis {
    int Nparticles = 0;
    std::vector<double> omega;  // exact frequencies, m = 0..N

    // Dense data and residuals, filled when Nparticles <= kChainDenseBound.
    Eigen::MatrixXd Y;  // column m holds the mode-m amplitudes
    double orthogonality_residual = std::numeric_limits<double>::quiet_NaN();
    double diagonalization_residual = std::numeric_limits<double>::quiet_NaN();
    double spectrum_agreement = std::numeric_limits<double>::quiet_NaN();

    // Deviation of the printed formulas from the exact basis.
    double printed_orthogonality_residual = std::numeric_limits<double>::quiet_NaN();
    double printed_spectrum_deviation = 0.0;

    // Zero-mode decoupling residuals (row sums of the stiffness matrix and
    // the center-of-mass component of the internal kinetic form).
    double zero_mode_force_residual = std::numeric_limits<double>::quiet_NaN();
    double zero_mode_kinetic_residual = std::numeric_limits<double>::quiet_NaN();
};

/// Stiffness quadratic form of the displacement potential
/// (kappa^2/2) sum (u_n - u_{n-1})^2: kappa^2 times the path Laplacian.
inline Eigen::MatrixXd chain_stiffness(const ChainModel& c) {
    const int np = c.N() + 1;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(np, np);
    const double k2 = c.kappa * c.kappa;
    for (int n = 1; n < np; ++n) {
        b(n - 1, n - 1) += k2;
        b(n, n) += k2;
        b(n - 1, n) -= k2;
        b(n, n - 1) -= k2;
    }
    return b;
}

inline ModeBasis mode_basis(const ChainModel& c) {
    c.validate();
    ModeBasis mb;
    const int np = c.N() + 1;
    mb.Nparticles = np;
    mb.omega.resize(np);
    for (int m = 0; m < np; ++m) mb.omega[m] = chain_omega(c, m);

    for (int m = 0; m < np; ++m) {
        double rel = std::abs(chain_omega_printed(c, m) - mb.omega[m]) /
                     (mb.omega[np - 1] > 0 ? mb.omega[np - 1] : 1.0);
        mb.printed_spectrum_deviation = std::max(mb.printed_spectrum_deviation, rel);
    }

    if (np > kChainDenseBound) return mb;

    mb.Y.resize(np, np);
    Eigen::MatrixXd yp(np, np);
    for (int m = 0; m < np; ++m)
        for (int n = 1; n <= np; ++n) {
            mb.Y(n - 1, m) = chain_mode_amplitude(c, m, n);
            yp(n - 1, m) = chain_mode_amplitude_printed(c, m, n);
        }

    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(np, np);
    mb.orthogonality_residual = (mb.Y.transpose() * mb.Y - eye).cwiseAbs().maxCoeff();
    mb.printed_orthogonality_residual = (yp.transpose() * yp - eye).cwiseAbs().maxCoeff();

    Eigen::MatrixXd b = chain_stiffness(c);
    Eigen::MatrixXd d = mb.Y.transpose() * b * mb.Y;
    double scale = d.cwiseAbs().maxCoeff();
    double offdiag = 0.0;
    double spectrum = 0.0;
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j) {
            if (i != j) offdiag = std::max(offdiag, std::abs(d(i, j)));
            else spectrum = std::max(spectrum,
                                     std::abs(d(i, i) - c.mu * mb.omega[i] * mb.omega[i]));
        }
    mb.diagonalization_residual = offdiag / (scale > 0 ? scale : 1.0);

    // Independent numerical diagonalization of the stiffness matrix.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    double agree = 0.0;
    for (int m = 0; m < np; ++m) {
        double w = std::sqrt(std::max(es.eigenvalues()(m), 0.0) / c.mu);
        agree = std::max(agree, std::abs(w - mb.omega[m]));
    }
    mb.spectrum_agreement = agree / (mb.omega[np - 1] > 0 ? mb.omega[np - 1] : 1.0);

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(np);
    mb.zero_mode_force_residual = (b * ones).cwiseAbs().maxCoeff();
    Eigen::MatrixXd kint = eye - ones * ones.transpose() / np;
    mb.zero_mode_kinetic_residual = (kint * ones).cwiseAbs().maxCoeff();
    return mb;
}

struct PhononGibbs {
    double lambda = 0.0;          // inverse temperature 1/(kT)
    std::vector<double> nbar;     // occupations, index m = 1..N (entry 0 unused)
    double E = 0.0;               // expected internal energy
    double zero_point = 0.0;      // sum hbar omega_m / 2 over internal modes
    double energy_variance = 0.0; // (1/Z) d^2 Z / dlambda^2 - E^2
};

namespace detail {

inline double phonon_energy(const ChainModel& c, double lambda) {
    double e = 0.0;
    for (int m = 1; m <= c.N(); ++m) {
        double w = chain_omega(c, m);
        double x = lambda * c.hbar * w;
        e += c.hbar * w * (1.0 / std::expm1(x) + 0.5);
    }
    return e;
}

}  // namespace detail

inline PhononGibbs gibbs_from_lambda(const ChainModel& c, double lambda) {
    c.validate();
    if (!(lambda > 0.0)) throw ValidationError("chain.lambda", "must be > 0");
    PhononGibbs g;
    g.lambda = lambda;
    g.nbar.assign(c.N() + 1, 0.0);
    for (int m = 1; m <= c.N(); ++m) {
        double w = chain_omega(c, m);
        double x = lambda * c.hbar * w;
        g.nbar[m] = 1.0 / std::expm1(x);
        g.zero_point += 0.5 * c.hbar * w;
        g.E += c.hbar * w * (g.nbar[m] + 0.5);
        g.energy_variance += c.hbar * w * c.hbar * w * g.nbar[m] * (g.nbar[m] + 1.0);
    }
    return g;
}

/// Solves E = sum hbar omega (nbar + 1/2) for the inverse temperature by
/// bracketed bisection; monotone, relative tolerance 1e-10 on the energy.
inline PhononGibbs gibbs_from_energy(const ChainModel& c, double energy) {
    c.validate();
    double zp = 0.0;
    for (int m = 1; m <= c.N(); ++m) zp += 0.5 * c.hbar * chain_omega(c, m);
    if (!(energy > zp))
        throw ValidationError("chain.E", "infeasible energy " + std::to_string(energy) +
                                             "; zero-point energy is " + std::to_string(zp));

    const double wmax = chain_omega(c, c.N());
    double lo = 1.0 / (c.hbar * wmax);  // lambda bracket, E(lo) decreasing in lambda
    double hi = lo;
    while (detail::phonon_energy(c, lo) <= energy) lo *= 0.25;
    while (detail::phonon_energy(c, hi) >= energy) hi *= 4.0;

    for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);  // geometric bisection on the positive axis
        double e = detail::phonon_energy(c, mid);
        if (e > energy)
            lo = mid;
        else
            hi = mid;
        if (std::abs(e - energy) <= 1e-10 * energy && (hi - lo) <= 1e-12 * hi) break;
    }
    return gibbs_from_lambda(c, std::sqrt(lo * hi));
}

/// End-to-end length statistics in the phonon Gibbs state. The length
/// operator is N xi plus odd-mode displacements with coefficients
/// -2 Y^m_1; the second-to-last-particle variant (printed superscript N)
/// is reported alongside.
struct LengthStatistics {
    double mean = 0.0;      // N xi, temperature independent
    double variance = 0.0;  // end-to-end
    double rel_spread = 0.0;
    double even_mode_coefficient_max = 0.0;  // machine-zero check
    double asymptotic_rel_spread = 0.0;      // (2 sqrt 3 / pi) / (kappa xi sqrt(lambda (N+1)))

    double alt_mean = 0.0;  // (N-1) xi for the x^(N) - x^(1) variant
    double alt_variance = 0.0;
};

inline LengthStatistics length_statistics(const ChainModel& c, const PhononGibbs& g) {
    c.validate();
    const int n_modes = c.N();
    if (static_cast<int>(g.nbar.size()) != n_modes + 1)
        throw ValidationError("chain.gibbs", "occupation table does not match the model");
    LengthStatistics st;
    st.mean = c.N() * c.xi;
    st.alt_mean = (c.N() - 1) * c.xi;
    for (int m = 1; m <= n_modes; ++m) {
        double w = chain_omega(c, m);
        double u2 = c.hbar / (2.0 * c.mu * w) * (2.0 * g.nbar[m] + 1.0);
        double cm = chain_mode_amplitude(c, m, c.N() + 1) - chain_mode_amplitude(c, m, 1);
        double cm_alt = chain_mode_amplitude(c, m, c.N()) - chain_mode_amplitude(c, m, 1);
        if (m % 2 == 0)
            st.even_mode_coefficient_max = std::max(st.even_mode_coefficient_max, std::abs(cm));
        else
            st.variance += cm * cm * u2;
        st.alt_variance += cm_alt * cm_alt * u2;
    }
    st.rel_spread = std::sqrt(st.variance) / st.mean;
    st.asymptotic_rel_spread = 2.0 * std::sqrt(3.0) / std::numbers::pi /
                               (c.kappa * c.xi * std::sqrt(g.lambda)) /
                               std::sqrt(static_cast<double>(c.N() + 1));
    return st;
}

/// Free evolution of the center-of-mass ME packet with the total mass
/// (N+1) mu; classical and quantum trajectories coincide exactly.
inline TrajectoryRecord cm_packet(const ChainModel& c, const PacketParams& cm_params,
                                  const std::vector<double>& t_grid) {
    c.validate();
    cm_params.validate();
    cm_params.require_single_dof("cm_packet");
    PolynomialPotential free_potential{(c.N() + 1) * c.mu, {}};
    TrajectoryRecord rec = evolve_closed(cm_params, free_potential, t_grid);
    rec.diagnostics += "; center-of-mass mode, total mass " +
                       std::to_string((c.N() + 1) * c.mu);
    return rec;
}

}  // namespace mepack
