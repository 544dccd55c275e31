#pragma once

// Time evolution of classical and quantum ME packets under polynomial
// potentials: exact quadratic closed forms, symbolic Taylor moment engines
// built on the Weyl algebra, a Monte Carlo ensemble oracle, a truncated
// matrix oracle, and the high-entropy classical-limit scan.

#include "mepack/core.hpp"
#include "mepack/errors.hpp"
#include "mepack/oscmatrix.hpp"
#include "mepack/qpacket.hpp"
#include "mepack/weyl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mepack {

constexpr int kPotentialDegreeCap = 12;
constexpr int kDefaultTaylorOrder = 10;

/// V(q) = sum_{k=0}^{N} coeffs[k] q^k / k!, with particle mass mu.
struct PolynomialPotential {
    double mu = 1.0;
    std::vector<double> coeffs;  // V_0 .. V_N

    void validate() const {
        if (!(mu > 0.0)) throw ValidationError("potential.mu", "mass must be > 0");
        if (coeffs.size() > kPotentialDegreeCap + 1)
            throw ValidationError("potential.coeffs",
                                  "degree cap " + std::to_string(kPotentialDegreeCap) + " exceeded");
    }

    int degree() const {
        int n = static_cast<int>(coeffs.size()) - 1;
        while (n > 0 && coeffs[n] == 0.0) --n;
        return std::max(n, 0);
    }

    double value(double q) const {
        double acc = 0.0, qk = 1.0, fact = 1.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            if (k > 0) {
                qk *= q;
                fact *= static_cast<double>(k);
            }
            acc += coeffs[k] * qk / fact;
        }
        return acc;
    }

    /// V'(q) = sum_k V_{k+1} q^k / k!
    double derivative(double q) const {
        double acc = 0.0, qk = 1.0, fact = 1.0;
        for (std::size_t k = 0; k + 1 < coeffs.size(); ++k) {
            if (k > 0) {
                qk *= q;
                fact *= static_cast<double>(k);
            }
            acc += coeffs[k + 1] * qk / fact;
        }
        return acc;
    }

    /// Fill a symbol table with this potential's numeric values.
    void bind(SymValues& vals) const {
        vals[Sym::Mu] = mu;
        for (int k = 0; k <= kPotentialDegreeCap; ++k)
            vals[potential_sym(k)] = (k < static_cast<int>(coeffs.size())) ? coeffs[k] : 0.0;
    }
};

// Symbolic forms of the potential, its derivative and the Hamiltonian for
// a given degree; coefficients stay as the symbols V0..VN and mu.
inline WeylPoly potential_weyl(int degree) {
    WeylPoly v;
    for (int k = 0; k <= degree; ++k) {
        ParamPoly c = ParamPoly::symbol(potential_sym(k)).div(BigRat(factorial(k)));
        v += WeylPoly::q_power(k, c);
    }
    return v;
}

inline WeylPoly potential_derivative_weyl(int degree) {
    WeylPoly v;
    for (int k = 0; k + 1 <= degree; ++k) {
        ParamPoly c = ParamPoly::symbol(potential_sym(k + 1)).div(BigRat(factorial(k)));
        v += WeylPoly::q_power(k, c);
    }
    return v;
}

inline WeylPoly hamiltonian_weyl(int degree) {
    ParamPoly half_inv_mu = ParamPoly::symbol(Sym::Mu, -1).div(BigRat(2));
    return WeylPoly::p_power(2, half_inv_mu) + potential_weyl(degree);
}

// --- Quadratic potentials: exact propagator coefficients -----------------

enum class QuadraticRegime { Free, UniformForce, Harmonic, AntiHarmonic };

inline const char* regime_name(QuadraticRegime r) {
    switch (r) {
        case QuadraticRegime::Free: return "free";
        case QuadraticRegime::UniformForce: return "uniform-force";
        case QuadraticRegime::Harmonic: return "harmonic";
        default: return "anti-harmonic";
    }
}

struct QuadraticCoeffs {
    double f0, f1, f2, g0, g1, g2;
};

/// Closed-form linear flow of a potential of degree <= 2:
/// qbar(t) = f0 + q f1 + p f2, pbar(t) = g0 + q g1 + p g2.
struct QuadraticSolution {
    QuadraticRegime regime;
    double mu;
    double V1;
    double V2;
    double xi = 0.0;    // sqrt(mu |V2|)
    double omega = 0.0; // sqrt(|V2| / mu)

    QuadraticCoeffs eval(double t) const {
        switch (regime) {
            case QuadraticRegime::Free:
                return {0.0, 1.0, t / mu, 0.0, 0.0, 1.0};
            case QuadraticRegime::UniformForce:
                return {-V1 / (2.0 * mu) * t * t, 1.0, t / mu, -V1 * t, 0.0, 1.0};
            case QuadraticRegime::Harmonic: {
                double c = std::cos(omega * t), s = std::sin(omega * t);
                return {-V1 / V2 * (1.0 - c), c, s / xi, -xi * V1 / V2 * s, -xi * s, c};
            }
            default: {  // V2 < 0: hyperbolic continuation of the harmonic flow
                double c = std::cosh(omega * t), s = std::sinh(omega * t);
                return {-V1 / V2 * (1.0 - c), c, s / xi, xi * V1 / V2 * s, xi * s, c};
            }
        }
    }
};

inline QuadraticSolution quadratic_solution(const PolynomialPotential& pot) {
    pot.validate();
    if (pot.degree() > 2)
        throw ValidationError("potential", "closed-form evolution needs degree <= 2");
    double v1 = pot.coeffs.size() > 1 ? pot.coeffs[1] : 0.0;
    double v2 = pot.coeffs.size() > 2 ? pot.coeffs[2] : 0.0;
    QuadraticSolution s;
    s.mu = pot.mu;
    s.V1 = v1;
    s.V2 = v2;
    if (v2 == 0.0) {
        s.regime = (v1 == 0.0) ? QuadraticRegime::Free : QuadraticRegime::UniformForce;
    } else {
        s.regime = (v2 > 0.0) ? QuadraticRegime::Harmonic : QuadraticRegime::AntiHarmonic;
        s.xi = std::sqrt(pot.mu * std::abs(v2));
        s.omega = std::sqrt(std::abs(v2) / pot.mu);
    }
    return s;
}

struct PacketMoments {
    double Qbar, Pbar, dQbar, dPbar;
};

/// Exact evolution for degree <= 2; identical for the classical and the
/// quantum packet.
inline PacketMoments quadratic_evolve(const PacketParams& params,
                                      const PolynomialPotential& pot, double t) {
    params.validate();
    params.require_single_dof("quadratic_evolve");
    QuadraticSolution sol = quadratic_solution(pot);
    QuadraticCoeffs c = sol.eval(t);
    const Dof& d = params.dofs[0];
    PacketMoments m;
    m.Qbar = c.f0 + d.Q * c.f1 + d.P * c.f2;
    m.Pbar = c.g0 + d.Q * c.g1 + d.P * c.g2;
    m.dQbar = std::sqrt(c.f1 * c.f1 * d.dQ * d.dQ + c.f2 * c.f2 * d.dP * d.dP);
    m.dPbar = std::sqrt(c.g1 * c.g1 * d.dQ * d.dQ + c.g2 * c.g2 * d.dP * d.dP);
    return m;
}

// --- Trajectory record ----------------------------------------------------

struct TrajectoryPoint {
    double t = 0.0;
    double Qbar = 0.0, Pbar = 0.0, dQbar = 0.0, dPbar = 0.0;
    double err_Q = 0.0, err_P = 0.0, err_dQ = 0.0, err_dP = 0.0;
};

struct TrajectoryRecord {
    std::string method;
    std::vector<TrajectoryPoint> points;
    std::string diagnostics;

    void validate_against(const PacketParams& params) const {
        const Dof& d = params.dofs[0];
        for (const auto& p : points) {
            if (!(p.dQbar > 0.0) || !(p.dPbar > 0.0))
                throw NumericalError("trajectory record lost positive spreads at t = " +
                                     std::to_string(p.t));
            if (p.t == 0.0) {
                double e = std::abs(p.Qbar - d.Q) + std::abs(p.Pbar - d.P) +
                           std::abs(p.dQbar - d.dQ) + std::abs(p.dPbar - d.dP);
                if (e > 1e-8 * (1.0 + std::abs(d.Q) + std::abs(d.P) + d.dQ + d.dP))
                    throw NumericalError("trajectory record does not reproduce t=0 packet");
            }
        }
    }
};

inline std::vector<double> uniform_grid(double t_max, int n_out) {
    if (!(t_max > 0.0)) throw ValidationError("t_max", "must be > 0");
    if (n_out < 1) throw ValidationError("n_out", "must be >= 1");
    std::vector<double> g(n_out + 1);
    for (int i = 0; i <= n_out; ++i) g[i] = t_max * i / n_out;
    return g;
}

inline TrajectoryRecord evolve_closed(const PacketParams& params, const PolynomialPotential& pot,
                                      const std::vector<double>& t_grid) {
    TrajectoryRecord rec;
    rec.method = "closed";
    for (double t : t_grid) {
        PacketMoments m = quadratic_evolve(params, pot, t);
        rec.points.push_back({t, m.Qbar, m.Pbar, m.dQbar, m.dPbar, 0, 0, 0, 0});
    }
    rec.diagnostics = std::string("closed-form regime: ") +
                      regime_name(quadratic_solution(pot).regime);
    return rec;
}

// --- Taylor derivative engines --------------------------------------------

enum class EngineKind { Classical, Quantum };

namespace detail {

/// Liouville derivation on a commutative polynomial:
/// dX/dt = (dX/dq)(p/mu) - (dX/dp) V'(q).
inline WeylPoly classical_derivative(const WeylPoly& x, const WeylPoly& vprime) {
    WeylPoly out;
    const ParamPoly inv_mu = ParamPoly::symbol(Sym::Mu, -1);
    for (const auto& [w, c] : x.terms()) {
        if (w.q > 0) {
            WeylPoly t = WeylPoly::q_power(w.q - 1, c.scaled(GaussRat(w.q)) * inv_mu) *
                         WeylPoly::p_power(w.p + 1);
            out += t;
        }
        if (w.p > 0) {
            // vprime is a pure-q polynomial: left multiplication keeps canonical order.
            WeylPoly t = vprime.scaled(c.scaled(GaussRat(-w.p)));
            out += t * WeylPoly::q_power(w.q) * WeylPoly::p_power(w.p - 1);
        }
    }
    return out;
}

/// Heisenberg derivation dX/dt = [X, H] / (i hbar); exact in the Weyl
/// algebra, the hbar division must leave no negative grading.
inline WeylPoly quantum_derivative(const WeylPoly& x, const WeylPoly& h) {
    WeylPoly comm = x * h - h * x;
    WeylPoly out;
    for (const auto& [w, c] : comm.terms()) {
        ParamPoly scaled = c.scaled(GaussRat(BigRat(0), BigRat(-1))).shifted(Sym::Hbar, -1);
        if (scaled.min_exponent(Sym::Hbar) < 0)
            throw std::logic_error("commutator not divisible by hbar");
        out += WeylPoly::q_power(w.q, scaled) * WeylPoly::p_power(w.p);
    }
    return out;
}

}  // namespace detail

/// Symbolic expectation-value tables <D^k x> for x in {q, p, q^2, p^2},
/// k = 0..order. Classical tables are polynomials in (Q, P, dQ, dP);
/// quantum tables additionally carry powers of nu^{-1}.
struct ExpectationTables {
    EngineKind kind;
    int order;
    int degree;
    std::vector<ParamPoly> Q, P, Q2, P2;
};

inline ExpectationTables taylor_expectation_tables(int degree, int order, EngineKind kind) {
    if (degree > kPotentialDegreeCap)
        throw ValidationError("potential", "degree cap exceeded");
    if (order < 1) throw ValidationError("taylor_order", "must be >= 1");
    ExpectationTables t;
    t.kind = kind;
    t.order = order;
    t.degree = degree;

    const WeylPoly vprime = potential_derivative_weyl(degree);
    const WeylPoly ham = hamiltonian_weyl(degree);

    std::array<WeylPoly, 4> chain = {WeylPoly::q(), WeylPoly::p(),
                                     WeylPoly::q_power(2), WeylPoly::p_power(2)};
    std::array<std::vector<ParamPoly>*, 4> sink = {&t.Q, &t.P, &t.Q2, &t.P2};

    for (int c = 0; c < 4; ++c) {
        WeylPoly x = chain[c];
        for (int k = 0; k <= order; ++k) {
            if (x.degree() > kExpectationDegreeCap)
                throw ValidationError("taylor_order",
                                      "symbolic degree cap " +
                                          std::to_string(kExpectationDegreeCap) +
                                          " exceeded at derivative order " + std::to_string(k));
            ParamPoly e = (kind == EngineKind::Classical)
                              ? classical_expectation_sym(x.shadow())
                              : quantum_expectation_sym(x);
            if (!e.is_real())
                throw std::logic_error("expectation of a self-adjoint chain came out complex");
            sink[c]->push_back(std::move(e));
            if (k < order) {
                x = (kind == EngineKind::Classical) ? detail::classical_derivative(x, vprime)
                                                    : detail::quantum_derivative(x, ham);
            }
        }
    }
    return t;
}

/// Numeric time derivatives at t = 0 of the packet trajectory
/// (Qbar, Pbar, dQbar, dPbar), derivative order 0..K.
struct TaylorDerivatives {
    std::vector<double> Q, P, dQ, dP;
};

namespace detail {

inline std::vector<double> eval_table(const std::vector<ParamPoly>& polys, const SymValues& v) {
    std::vector<double> out;
    out.reserve(polys.size());
    for (const auto& p : polys) out.push_back(p.eval_real(v, 1e-9));
    return out;
}

/// Derivatives of the centered second moment F = <x^2> - <x>^2 from the
/// derivative arrays of <x^2> and <x>.
inline std::vector<double> centered_series(const std::vector<double>& m2,
                                           const std::vector<double>& m1) {
    const std::size_t n = m2.size();
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) {
        double cross = 0.0;
        for (std::size_t j = 0; j <= k; ++j)
            cross += static_cast<double>(binomial(static_cast<unsigned>(k),
                                                  static_cast<unsigned>(j))) *
                     m1[j] * m1[k - j];
        f[k] = m2[k] - cross;
    }
    return f;
}

/// Derivatives of g = sqrt(F) at t = 0 via the Leibniz recursion on
/// g*g = F; exact whenever F(0) > 0.
inline std::vector<double> sqrt_series(const std::vector<double>& f) {
    std::vector<double> g(f.size());
    g[0] = std::sqrt(f[0]);
    for (std::size_t k = 1; k < f.size(); ++k) {
        double acc = f[k];
        for (std::size_t j = 1; j < k; ++j)
            acc -= static_cast<double>(binomial(static_cast<unsigned>(k),
                                                static_cast<unsigned>(j))) *
                   g[j] * g[k - j];
        g[k] = acc / (2.0 * g[0]);
    }
    return g;
}

inline double horner_series(const std::vector<double>& deriv, double t, int order) {
    // sum_{k<=order} deriv[k] t^k / k!
    double acc = 0.0;
    double tk = 1.0, fact = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k > 0) {
            tk *= t;
            fact *= k;
        }
        acc += deriv[k] * tk / fact;
    }
    return acc;
}

inline double series_last_term(const std::vector<double>& deriv, double t, int order) {
    double tk = 1.0, fact = 1.0;
    for (int k = 1; k <= order; ++k) {
        tk *= t;
        fact *= k;
    }
    return std::abs(deriv[order]) * std::abs(tk) / fact;
}

}  // namespace detail

inline SymValues packet_potential_values(const PacketParams& params,
                                         const PolynomialPotential& pot) {
    SymValues vals = packet_sym_values(params);
    pot.bind(vals);
    return vals;
}

inline TaylorDerivatives taylor_derivatives(const PacketParams& params,
                                            const PolynomialPotential& pot, int order,
                                            EngineKind kind) {
    params.validate();
    params.require_single_dof("taylor_derivatives");
    pot.validate();
    ExpectationTables t = taylor_expectation_tables(pot.degree(), order, kind);
    SymValues vals = packet_potential_values(params, pot);
    TaylorDerivatives d;
    d.Q = detail::eval_table(t.Q, vals);
    d.P = detail::eval_table(t.P, vals);
    d.dQ = detail::sqrt_series(detail::centered_series(detail::eval_table(t.Q2, vals), d.Q));
    d.dP = detail::sqrt_series(detail::centered_series(detail::eval_table(t.P2, vals), d.P));
    return d;
}

inline TaylorDerivatives taylor_derivatives_classical(const PacketParams& params,
                                                      const PolynomialPotential& pot, int order) {
    return taylor_derivatives(params, pot, order, EngineKind::Classical);
}

inline TaylorDerivatives taylor_derivatives_quantum(const PacketParams& params,
                                                    const PolynomialPotential& pot, int order) {
    return taylor_derivatives(params, pot, order, EngineKind::Quantum);
}

// --- Gaussian-state expectation engine for the stepping evolution ----------
//
// The Taylor series started from an ME packet develops a q-p correlation,
// so re-expansion steps close the moment hierarchy on the family of
// (possibly correlated) Gaussian states rather than on the ME packets
// themselves. For potentials of degree <= 2 this closure is exact.

/// First and centered second moments of a Gaussian state.
struct GaussianState {
    double Q = 0.0, P = 0.0;
    double Sqq = 1.0, Spp = 1.0, C = 0.0;  // Var(q), Var(p), Cov(q, p)
};

namespace detail {

/// <delta_q^a delta_p^b> in a Gaussian state, by the pairing recursion.
/// In the canonical word every q stands left of every p, so each mixed
/// pairing contributes C + i hbar/2; hbar = 0 gives the classical Isserlis
/// moments.
inline std::complex<double> central_word_moment(int a, int b, const GaussianState& g,
                                                double hbar) {
    const std::complex<double> mixed(g.C, 0.5 * hbar);
    std::vector<std::vector<std::complex<double>>> w(a + 1,
                                                     std::vector<std::complex<double>>(b + 1));
    for (int j = 0; j <= b; ++j)
        w[0][j] = (j % 2 == 1) ? 0.0
                               : [&] {
                                     std::complex<double> m = 1.0;
                                     for (int i = 2; i <= j; i += 2) m *= (i - 1) * g.Spp;
                                     return m;
                                 }();
    for (int i = 1; i <= a; ++i)
        for (int j = 0; j <= b; ++j) {
            std::complex<double> acc = 0.0;
            if (i >= 2) acc += static_cast<double>(i - 1) * g.Sqq * w[i - 2][j];
            if (j >= 1) acc += static_cast<double>(j) * mixed * w[i - 1][j - 1];
            w[i][j] = acc;
        }
    return w[a][b];
}

/// Expectation of a canonical-form polynomial in a Gaussian state; the
/// coefficient symbols (potential, mass, hbar) come from `vals`.
inline double gauss_expectation(const WeylPoly& x, const GaussianState& g, const SymValues& vals,
                                double hbar) {
    int max_a = 0, max_b = 0;
    for (const auto& [w, c] : x.terms()) {
        max_a = std::max(max_a, w.q);
        max_b = std::max(max_b, w.p);
    }
    // Central word moments are shared by all terms of the polynomial.
    std::vector<std::vector<std::complex<double>>> cen(
        max_a + 1, std::vector<std::complex<double>>(max_b + 1));
    for (int i = 0; i <= max_a; ++i)
        for (int j = 0; j <= max_b; ++j) cen[i][j] = central_word_moment(i, j, g, hbar);

    std::complex<double> acc = 0.0;
    for (const auto& [w, c] : x.terms()) {
        std::complex<double> m = 0.0;
        for (int i = 0; i <= w.q; ++i)
            for (int j = 0; j <= w.p; ++j) {
                double comb = static_cast<double>(binomial(w.q, i)) *
                              static_cast<double>(binomial(w.p, j)) *
                              std::pow(g.Q, w.q - i) * std::pow(g.P, w.p - j);
                m += comb * cen[i][j];
            }
        acc += c.eval(vals) * m;
    }
    if (std::abs(acc.imag()) > 1e-9 * (std::abs(acc.real()) + 1.0))
        throw std::logic_error("Gaussian-state expectation of a self-adjoint chain not real");
    return acc.real();
}

}  // namespace detail

/// Piecewise Taylor evolution with re-expansion on Gaussian states; the
/// per-step remainder is estimated from the last kept series term.
inline TrajectoryRecord evolve_taylor(const PacketParams& params, const PolynomialPotential& pot,
                                      const std::vector<double>& t_grid,
                                      int order = kDefaultTaylorOrder, double tol = 1e-8,
                                      EngineKind kind = EngineKind::Classical) {
    params.validate();
    params.require_single_dof("evolve_taylor");
    pot.validate();
    if (!(tol > 0.0)) throw ValidationError("tol", "must be > 0");
    if (order < 2) throw ValidationError("taylor_order", "must be >= 2");

    // D^k chains for the five observables that close the Gaussian family.
    const WeylPoly vprime = potential_derivative_weyl(pot.degree());
    const WeylPoly ham = hamiltonian_weyl(pot.degree());
    const ParamPoly half = ParamPoly(GaussRat(1, 2));
    std::array<WeylPoly, 5> chain = {
        WeylPoly::q(), WeylPoly::p(), WeylPoly::q_power(2), WeylPoly::p_power(2),
        (WeylPoly::q() * WeylPoly::p() + WeylPoly::p() * WeylPoly::q()).scaled(half)};
    std::array<std::vector<WeylPoly>, 5> dk;
    for (int c = 0; c < 5; ++c) {
        WeylPoly x = chain[c];
        for (int k = 0; k <= order; ++k) {
            if (x.degree() > kExpectationDegreeCap)
                throw ValidationError("taylor_order",
                                      "symbolic degree cap exceeded at derivative order " +
                                          std::to_string(k));
            dk[c].push_back(x);
            if (k < order)
                x = (kind == EngineKind::Classical) ? detail::classical_derivative(x, vprime)
                                                    : detail::quantum_derivative(x, ham);
        }
    }

    SymValues vals;
    pot.bind(vals);
    const double hbar_eff =
        (kind == EngineKind::Classical) ? 0.0 : params.constants.hbar;
    vals[Sym::Hbar] = hbar_eff;

    const Dof& d0 = params.dofs[0];
    GaussianState state{d0.Q, d0.P, d0.dQ * d0.dQ, d0.dP * d0.dP, 0.0};

    TrajectoryRecord rec;
    rec.method = "taylor";
    double errQ = 0, errP = 0, errdQ = 0, errdP = 0;
    int steps_taken = 0;

    auto record_point = [&](double t) {
        rec.points.push_back({t, state.Q, state.P, std::sqrt(state.Sqq), std::sqrt(state.Spp),
                              errQ, errP, errdQ, errdP});
    };

    auto eval_chain = [&](int c) {
        std::vector<double> out(order + 1);
        for (int k = 0; k <= order; ++k)
            out[k] = detail::gauss_expectation(dk[c][k], state, vals, hbar_eff);
        return out;
    };

    double t_cur = 0.0;
    std::size_t gi = 0;
    if (!t_grid.empty() && t_grid[0] == 0.0) {
        record_point(0.0);
        gi = 1;
    }

    for (; gi < t_grid.size(); ++gi) {
        double t_target = t_grid[gi];
        if (t_target < t_cur) throw ValidationError("t_grid", "must be ascending");
        while (t_cur < t_target) {
            double h = t_target - t_cur;
            const double h_min = t_grid.back() / std::ldexp(1.0, 22);
            std::vector<double> mq = eval_chain(0);
            std::vector<double> mp = eval_chain(1);
            std::vector<double> mq2 = eval_chain(2);
            std::vector<double> mp2 = eval_chain(3);
            std::vector<double> mqp = eval_chain(4);
            std::vector<double> fq = detail::centered_series(mq2, mq);
            std::vector<double> fp = detail::centered_series(mp2, mp);

            for (;;) {
                double rQ = detail::series_last_term(mq, h, order);
                double rP = detail::series_last_term(mp, h, order);
                double rFq = detail::series_last_term(fq, h, order);
                double rFp = detail::series_last_term(fp, h, order);
                double sQ = std::abs(state.Q) + std::sqrt(state.Sqq);
                double sP = std::abs(state.P) + std::sqrt(state.Spp);
                bool ok = rQ <= tol * sQ && rP <= tol * sP && rFq <= tol * state.Sqq &&
                          rFp <= tol * state.Spp;
                if (!ok) {
                    if (h <= h_min)
                        throw NumericalError(
                            "series divergence: Taylor remainder criterion unmet at minimum "
                            "step h = " +
                            std::to_string(h) + " (t = " + std::to_string(t_cur) + ")");
                    h *= 0.5;
                    continue;
                }

                double q_new = detail::horner_series(mq, h, order);
                double p_new = detail::horner_series(mp, h, order);
                double q2_new = detail::horner_series(mq2, h, order);
                double p2_new = detail::horner_series(mp2, h, order);
                double qp_new = detail::horner_series(mqp, h, order);
                double sqq = q2_new - q_new * q_new;
                double spp = p2_new - p_new * p_new;
                double cov = qp_new - q_new * p_new;
                if (!(sqq > 0.0) || !(spp > 0.0) || !(sqq * spp - cov * cov > 0.0))
                    throw NumericalError("series step lost positivity of the second moments");
                state = {q_new, p_new, sqq, spp, cov};
                errQ += rQ;
                errP += rP;
                errdQ += rFq / (2.0 * std::sqrt(sqq));
                errdP += rFp / (2.0 * std::sqrt(spp));
                t_cur += h;
                ++steps_taken;
                break;
            }
        }
        record_point(t_cur);
    }
    std::ostringstream diag;
    diag << "taylor engine: " << (kind == EngineKind::Classical ? "classical" : "quantum")
         << ", order " << order << ", tol " << tol << ", steps " << steps_taken;
    rec.diagnostics = diag.str();
    rec.validate_against(params);
    return rec;
}

// --- Monte Carlo oracle -----------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct RK4State {
    double q, p;
};

inline RK4State rk4_step(const RK4State& s, double h, const PolynomialPotential& pot) {
    auto f = [&pot](const RK4State& x) {
        return RK4State{x.p / pot.mu, -pot.derivative(x.q)};
    };
    RK4State k1 = f(s);
    RK4State k2 = f({s.q + 0.5 * h * k1.q, s.p + 0.5 * h * k1.p});
    RK4State k3 = f({s.q + 0.5 * h * k2.q, s.p + 0.5 * h * k2.p});
    RK4State k4 = f({s.q + h * k3.q, s.p + h * k3.p});
    return {s.q + h / 6.0 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q),
            s.p + h / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p)};
}

}  // namespace detail

struct McOptions {
    long samples = 100000;
    std::uint64_t seed = 1;
    int base_steps = 4096;          // fixed-step count over the full run
    double drift_tol = 1e-6;        // relative energy drift allowed per sample
};

/// Classical ensemble oracle: samples the ME Gaussian, integrates each
/// sample with fixed-step 4th-order integration, and reports ensemble
/// means, spreads and standard errors. Deterministic for a fixed seed.
inline TrajectoryRecord mc_oracle(const PacketParams& params, const PolynomialPotential& pot,
                                  const std::vector<double>& t_grid, const McOptions& opt) {
    params.validate();
    params.require_single_dof("mc_oracle");
    pot.validate();
    if (opt.samples < 1000) throw ValidationError("mc_samples", "must be >= 1000");
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw ValidationError("t_grid", "must start at t = 0");

    const double t_max = t_grid.back();
    const Dof& d = params.dofs[0];
    const std::size_t ng = t_grid.size();

    // Per-interval substeps from the fixed base step h = t_max / base_steps.
    std::vector<int> substeps(ng, 0);
    std::vector<double> hstep(ng, 0.0);
    const double h_target = t_max > 0.0 ? t_max / opt.base_steps : 1.0;
    for (std::size_t i = 1; i < ng; ++i) {
        double dt = t_grid[i] - t_grid[i - 1];
        if (dt < 0.0) throw ValidationError("t_grid", "must be ascending");
        int n = std::max(1, static_cast<int>(std::ceil(dt / h_target)));
        substeps[i] = n;
        hstep[i] = dt / n;
    }

    // Raw moment accumulators per grid time: q, q^2, q^3, q^4, p, ...
    std::vector<std::array<double, 8>> acc(ng, {0, 0, 0, 0, 0, 0, 0, 0});
    double max_drift = 0.0;

    for (long s = 0; s < opt.samples; ++s) {
        std::mt19937_64 rng(detail::splitmix64(opt.seed ^ (0x9e3779b97f4a7c15ULL *
                                                           static_cast<std::uint64_t>(s + 1))));
        std::normal_distribution<double> gauss(0.0, 1.0);
        detail::RK4State st{d.Q + d.dQ * gauss(rng), d.P + d.dP * gauss(rng)};
        const double e0 = st.p * st.p / (2.0 * pot.mu) + pot.value(st.q);

        for (std::size_t i = 0; i < ng; ++i) {
            for (int k = 0; k < substeps[i]; ++k) st = detail::rk4_step(st, hstep[i], pot);
            auto& a = acc[i];
            double q = st.q, p = st.p;
            a[0] += q;
            a[1] += q * q;
            a[2] += q * q * q;
            a[3] += q * q * q * q;
            a[4] += p;
            a[5] += p * p;
            a[6] += p * p * p;
            a[7] += p * p * p * p;
        }
        const double e1 = st.p * st.p / (2.0 * pot.mu) + pot.value(st.q);
        double drift = std::abs(e1 - e0) / (std::abs(e0) + 1.0);
        max_drift = std::max(max_drift, drift);
        if (drift > opt.drift_tol)
            throw NumericalError("mc instability: per-sample energy drift " +
                                 std::to_string(drift) + " exceeds " +
                                 std::to_string(opt.drift_tol) + " (sample " + std::to_string(s) +
                                 ")");
    }

    TrajectoryRecord rec;
    rec.method = "mc";
    const double n = static_cast<double>(opt.samples);
    for (std::size_t i = 0; i < ng; ++i) {
        const auto& a = acc[i];
        auto stats = [&n](double s1, double s2, double s3, double s4) {
            double m = s1 / n;
            double m2 = s2 / n - m * m;
            double m3 = s3 / n - 3.0 * m * s2 / n + 2.0 * m * m * m;
            double m4 = s4 / n - 4.0 * m * s3 / n + 6.0 * m * m * s2 / n - 3.0 * m * m * m * m;
            (void)m3;
            double sd = std::sqrt(std::max(m2, 0.0));
            double se_mean = sd / std::sqrt(n);
            double var_of_var = std::max(m4 - m2 * m2, 0.0) / n;
            double se_sd = sd > 0.0 ? std::sqrt(var_of_var) / (2.0 * sd) : 0.0;
            return std::array<double, 4>{m, sd, se_mean, se_sd};
        };
        auto qs = stats(a[0], a[1], a[2], a[3]);
        auto ps = stats(a[4], a[5], a[6], a[7]);
        rec.points.push_back(
            {t_grid[i], qs[0], ps[0], qs[1], ps[1], qs[2], ps[2], qs[3], ps[3]});
    }
    std::ostringstream diag;
    diag << "mc: samples " << opt.samples << ", seed " << opt.seed << ", base steps "
         << opt.base_steps << ", max energy drift " << max_drift;
    rec.diagnostics = diag.str();
    return rec;
}

// --- Truncated matrix oracle -----------------------------------------------

/// Quantum evolution by exact eigendecomposition of the truncated
/// Hamiltonian; the single error source is the basis truncation, which is
/// monitored through the occupation of the top levels.
inline TrajectoryRecord matrix_oracle(const QuantumMEPacket& packet,
                                      const PolynomialPotential& pot,
                                      const std::vector<double>& t_grid, int dim,
                                      double leak_tol = 1e-6) {
    packet.params.require_single_dof("matrix_oracle");
    pot.validate();
    TruncatedState st = build_truncated_state(packet, dim);
    const double hbar = packet.params.constants.hbar;

    CMatrix q = position_matrix(packet.params, dim);
    CMatrix p = momentum_matrix(packet.params, dim);

    // Horner evaluation of V(q) in matrix form.
    CMatrix v = CMatrix::Zero(dim, dim);
    for (int k = static_cast<int>(pot.coeffs.size()) - 1; k >= 0; --k) {
        v = v * q;
        v += (pot.coeffs[k] / static_cast<double>(factorial(k))) * CMatrix::Identity(dim, dim);
    }
    CMatrix h = p * p / (2.0 * pot.mu) + v;

    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const CMatrix& u = es.eigenvectors();
    Eigen::VectorXd e = es.eigenvalues();

    CMatrix t0 = u.adjoint() * st.matrix * u;
    CMatrix qh = u.adjoint() * q * u;
    CMatrix ph = u.adjoint() * p * u;
    CMatrix q2h = u.adjoint() * (q * q) * u;
    CMatrix p2h = u.adjoint() * (p * p) * u;

    const int band = std::max(4, dim / 10);
    CMatrix top_rows = u.bottomRows(band);  // number-basis rows of the top band

    TrajectoryRecord rec;
    rec.method = "matrix";
    double max_leak = 0.0;
    for (double t : t_grid) {
        CMatrix tt(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k)
                tt(j, k) = t0(j, k) * std::exp(std::complex<double>(0.0, -(e(j) - e(k)) * t / hbar));

        auto mom = [&tt](const CMatrix& op) { return (tt * op).trace().real(); };
        double mq = mom(qh), mp = mom(ph), mq2 = mom(q2h), mp2 = mom(p2h);
        double leak = (top_rows * tt * top_rows.adjoint()).diagonal().real().sum();
        max_leak = std::max(max_leak, leak);
        if (leak > leak_tol)
            throw NumericalError("truncation leak " + std::to_string(leak) + " at t = " +
                                 std::to_string(t) + " exceeds " + std::to_string(leak_tol) +
                                 "; increase trunc_dim (current " + std::to_string(dim) + ")");
        double vq = std::max(mq2 - mq * mq, 0.0);
        double vp = std::max(mp2 - mp * mp, 0.0);
        rec.points.push_back(
            {t, mq, mp, std::sqrt(vq), std::sqrt(vp), leak, leak, leak, leak});
    }
    std::ostringstream diag;
    diag << "matrix: dim " << dim << ", truncation defect " << st.truncation_defect
         << ", tail bound " << st.tail_bound << ", max top-band occupation " << max_leak;
    rec.diagnostics = diag.str();
    return rec;
}

// --- Classical-limit scan ----------------------------------------------------

struct ScanPoint {
    double s = 1.0;
    double nu = 0.0;
    double dev_Q = 0.0, dev_P = 0.0, dev_dQ = 0.0, dev_dP = 0.0;
    double err_Q = 0.0, err_P = 0.0, err_dQ = 0.0, err_dP = 0.0;
};

struct ScanResult {
    std::vector<ScanPoint> points;
    double t_probe = 0.0;
    int order = 0;
    // Least-squares slope of ln|dev| against ln s, per second-moment channel
    // and for the channel that leads at the largest scale (NaN if the
    // deviations vanish identically, e.g. for degree <= 2).
    double exponent_dQ = std::numeric_limits<double>::quiet_NaN();
    double exponent_dP = std::numeric_limits<double>::quiet_NaN();
    double exponent_leading = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double n = static_cast<double>(x.size());
    double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Quantum-classical trajectory deviation versus the variance scale s
/// (dQ -> s dQ, dP -> s dP, so nu grows like s^2). The deviation series is
/// the exact symbolic difference of the two engines' derivative tables,
/// which avoids catastrophic cancellation at large s.
inline ScanResult classical_limit_scan(const PacketParams& params, const PolynomialPotential& pot,
                                       double t_probe, const std::vector<double>& scales,
                                       int order = kDefaultTaylorOrder) {
    params.validate();
    params.require_single_dof("classical_limit_scan");
    pot.validate();
    if (!(t_probe > 0.0)) throw ValidationError("t_probe", "must be > 0");
    if (scales.empty()) throw ValidationError("scan", "scale grid is empty");

    ExpectationTables cl = taylor_expectation_tables(pot.degree(), order, EngineKind::Classical);
    ExpectationTables qu = taylor_expectation_tables(pot.degree(), order, EngineKind::Quantum);

    auto diff_table = [](const std::vector<ParamPoly>& a, const std::vector<ParamPoly>& b) {
        std::vector<ParamPoly> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        return d;
    };
    std::vector<ParamPoly> dQt = diff_table(qu.Q, cl.Q);
    std::vector<ParamPoly> dPt = diff_table(qu.P, cl.P);
    std::vector<ParamPoly> dQ2t = diff_table(qu.Q2, cl.Q2);
    std::vector<ParamPoly> dP2t = diff_table(qu.P2, cl.P2);

    ScanResult out;
    out.t_probe = t_probe;
    out.order = order;

    for (double s : scales) {
        if (!(s > 0.0)) throw ValidationError("scan", "scale factors must be > 0");
        PacketParams scaled = params;
        scaled.dofs[0].dQ *= s;
        scaled.dofs[0].dP *= s;
        double nu = scaled.nu();
        if (nu <= 1.0)
            throw ValidationError("scan", "scaled packet violates nu > 1 at s = " +
                                              std::to_string(s));
        SymValues vals = packet_potential_values(scaled, pot);

        auto deriv = [&vals](const std::vector<ParamPoly>& t) {
            return detail::eval_table(t, vals);
        };
        std::vector<double> cQ = deriv(cl.Q), cP = deriv(cl.P);
        std::vector<double> cQ2 = deriv(cl.Q2), cP2 = deriv(cl.P2);
        std::vector<double> deltaQ = deriv(dQt), deltaP = deriv(dPt);
        std::vector<double> deltaQ2 = deriv(dQ2t), deltaP2 = deriv(dP2t);

        auto sum = [&](const std::vector<double>& d) {
            return detail::horner_series(d, t_probe, order);
        };
        auto rem = [&](const std::vector<double>& d) {
            return detail::series_last_term(d, t_probe, order);
        };

        double Qc = sum(cQ), Pc = sum(cP);
        double dq_mean = sum(deltaQ), dp_mean = sum(deltaP);

        // Classical centered second moments and their exact quantum shifts.
        std::vector<double> fc_q = detail::centered_series(cQ2, cQ);
        std::vector<double> fc_p = detail::centered_series(cP2, cP);
        double Fq_c = sum(fc_q), Fp_c = sum(fc_p);
        // F_q - F_c = delta<q^2> - delta<q> (2<q>_c + delta<q>)
        double dFq = sum(deltaQ2) - dq_mean * (2.0 * Qc + dq_mean);
        double dFp = sum(deltaP2) - dp_mean * (2.0 * Pc + dp_mean);

        double sd_qc = std::sqrt(Fq_c), sd_pc = std::sqrt(Fp_c);
        double sd_qq = std::sqrt(std::max(Fq_c + dFq, 0.0));
        double sd_pq = std::sqrt(std::max(Fp_c + dFp, 0.0));
        double dev_sd_q = dFq / (sd_qq + sd_qc);
        double dev_sd_p = dFp / (sd_pq + sd_pc);

        auto relativize = [](double dev, double ref) {
            return std::abs(ref) > 1e-9 ? dev / ref : dev;
        };

        ScanPoint pt;
        pt.s = s;
        pt.nu = nu;
        pt.dev_Q = relativize(dq_mean, Qc);
        pt.dev_P = relativize(dp_mean, Pc);
        pt.dev_dQ = relativize(dev_sd_q, sd_qc);
        pt.dev_dP = relativize(dev_sd_p, sd_pc);
        // Error annotation: remainder of the exact difference series plus the
        // deviation's sensitivity to the classical series remainder.
        pt.err_Q = relativize(rem(deltaQ), Qc) + std::abs(pt.dev_Q) * relativize(rem(cQ), Qc);
        pt.err_P = relativize(rem(deltaP), Pc) + std::abs(pt.dev_P) * relativize(rem(cP), Pc);
        pt.err_dQ = relativize(rem(deltaQ2) / (2.0 * sd_qc), sd_qc) +
                    std::abs(pt.dev_dQ) * rem(fc_q) / (2.0 * Fq_c);
        pt.err_dP = relativize(rem(deltaP2) / (2.0 * sd_pc), sd_pc) +
                    std::abs(pt.dev_dP) * rem(fc_p) / (2.0 * Fp_c);
        out.points.push_back(pt);
    }

    auto collect = [&out](auto getter) {
        std::vector<double> xs, ys;
        for (const auto& p : out.points) {
            double d = std::abs(getter(p));
            if (d > 1e-300) {
                xs.push_back(std::log(p.s));
                ys.push_back(std::log(d));
            }
        }
        return detail::fit_slope(xs, ys);
    };
    out.exponent_dQ = collect([](const ScanPoint& p) { return p.dev_dQ; });
    out.exponent_dP = collect([](const ScanPoint& p) { return p.dev_dP; });

    const ScanPoint& last = out.points.back();
    double m = std::max({std::abs(last.dev_Q), std::abs(last.dev_P), std::abs(last.dev_dQ),
                         std::abs(last.dev_dP)});
    if (m == std::abs(last.dev_dQ))
        out.exponent_leading = out.exponent_dQ;
    else if (m == std::abs(last.dev_dP))
        out.exponent_leading = out.exponent_dP;
    else if (m == std::abs(last.dev_Q))
        out.exponent_leading = collect([](const ScanPoint& p) { return p.dev_Q; });
    else
        out.exponent_leading = collect([](const ScanPoint& p) { return p.dev_P; });
    return out;
}

}  // namespace mepack
