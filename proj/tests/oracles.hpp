#pragma once

// Test-only oracles, independent of the library's computation paths:
// Gauss-Hermite and adaptive-Simpson quadrature, a Newton solver for the
// convex multiplier problem, and a truncated oscillator-matrix
// representation of Weyl polynomials.

#include "mepack/core.hpp"
#include "mepack/weyl.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracles {

using mepack::CMatrix;
using mepack::Dof;
using mepack::PacketParams;
using mepack::Sym;
using mepack::SymValues;
using mepack::WeylPoly;

/// Gauss-Hermite nodes/weights for weight exp(-x^2), via the Golub-Welsch
/// eigenproblem of the Jacobi matrix.
struct GaussHermite {
    std::vector<double> nodes, weights;

    explicit GaussHermite(int n) {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            double b = std::sqrt(k / 2.0);
            j(k - 1, k) = b;
            j(k, k - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
        nodes.resize(n);
        weights.resize(n);
        for (int k = 0; k < n; ++k) {
            nodes[k] = es.eigenvalues()(k);
            double v0 = es.eigenvectors()(0, k);
            weights[k] = std::sqrt(std::numbers::pi) * v0 * v0;
        }
    }

    /// E[f(X)] for X ~ Normal(mean, sigma^2).
    double gaussian_mean(const std::function<double(double)>& f, double mean,
                         double sigma) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k)
            acc += weights[k] * f(mean + std::numbers::sqrt2 * sigma * nodes[k]);
        return acc / std::sqrt(std::numbers::pi);
    }
};

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 24) {
    auto simpson = [&f](double x0, double x2) {
        double x1 = 0.5 * (x0 + x2);
        return (x2 - x0) / 6.0 * (f(x0) + 4.0 * f(x1) + f(x2));
    };
    std::function<double(double, double, double, double, int)> rec =
        [&](double x0, double x2, double whole, double eps, int d) -> double {
        double x1 = 0.5 * (x0 + x2);
        double left = simpson(x0, x1), right = simpson(x1, x2);
        if (d <= 0 || std::abs(left + right - whole) < 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return rec(x0, x1, left, eps / 2.0, d - 1) + rec(x1, x2, right, eps / 2.0, d - 1);
    };
    return rec(a, b, simpson(a, b), tol, depth);
}

/// Minimizes ln Z(l) + l1 Q + l2 P + l3 <q^2> + l4 <p^2> over the
/// multipliers by Newton iteration on the closed-form classical partition
/// function; the minimizer solves the four constraint equations.
struct ClassicalMultiplierSolve {
    double l1, l2, l3, l4;
};

inline ClassicalMultiplierSolve solve_classical_multipliers(const Dof& d, double v) {
    // Unconstrained Newton in (l1, l3), (l2, l4) separately: the objective
    // splits into two convex two-variable pieces.
    auto solve_pair = [v](double mean, double second_moment) {
        double l1 = -0.1, l3 = 0.4;  // generic start in the convex region
        for (int it = 0; it < 80; ++it) {
            // f = ln(sqrt(pi / l3)) + l1^2 / (4 l3) + l1 mean + l3 second_moment  (+ const)
            double g1 = l1 / (2.0 * l3) + mean;
            double g3 = -0.5 / l3 - l1 * l1 / (4.0 * l3 * l3) + second_moment;
            double h11 = 1.0 / (2.0 * l3);
            double h13 = -l1 / (2.0 * l3 * l3);
            double h33 = 0.5 / (l3 * l3) + l1 * l1 / (2.0 * l3 * l3 * l3);
            double det = h11 * h33 - h13 * h13;
            double s1 = (h33 * g1 - h13 * g3) / det;
            double s3 = (h11 * g3 - h13 * g1) / det;
            double step = 1.0;
            while (l3 - step * s3 <= 0.0) step *= 0.5;
            l1 -= step * s1;
            l3 -= step * s3;
            if (std::abs(g1) + std::abs(g3) < 1e-14) break;
        }
        return std::pair{l1, l3};
    };
    (void)v;  // the volume factor shifts ln Z by a constant only
    auto [l1, l3] = solve_pair(d.Q, d.Q * d.Q + d.dQ * d.dQ);
    auto [l2, l4] = solve_pair(d.P, d.P * d.P + d.dP * d.dP);
    return {l1, l2, l3, l4};
}

/// Truncated oscillator-matrix representation of a canonical-form Weyl
/// polynomial: q = sqrt(hbar/2)(a + a'), p = -i sqrt(hbar/2)(a - a'),
/// coefficients evaluated at the given symbol values.
inline CMatrix weyl_matrix(const WeylPoly& x, int cutoff, const SymValues& vals) {
    CMatrix a = mepack::ladder_matrix(cutoff);
    const double c = std::sqrt(vals[Sym::Hbar] / 2.0);
    CMatrix q = c * (a + a.adjoint().eval());
    CMatrix p = std::complex<double>(0.0, -c) * (a - a.adjoint().eval());
    CMatrix out = CMatrix::Zero(cutoff, cutoff);
    for (const auto& [w, coeff] : x.terms()) {
        CMatrix m = CMatrix::Identity(cutoff, cutoff);
        for (int i = 0; i < w.q; ++i) m = m * q;
        for (int i = 0; i < w.p; ++i) m = m * p;
        out += coeff.eval(vals) * m;
    }
    return out;
}

/// A random Weyl polynomial built as a product-sum of letters, with small
/// integer coefficients (kept exact).
inline WeylPoly random_weyl(std::mt19937_64& rng, int max_degree) {
    std::uniform_int_distribution<int> coeff(-3, 3);
    std::uniform_int_distribution<int> len(0, max_degree);
    std::uniform_int_distribution<int> letter(0, 1);
    WeylPoly out;
    int terms = 1 + static_cast<int>(rng() % 3);
    for (int t = 0; t < terms; ++t) {
        WeylPoly w(1);
        int l = len(rng);
        for (int i = 0; i < l; ++i)
            w = w * (letter(rng) ? WeylPoly::q() : WeylPoly::p());
        int c = coeff(rng);
        if (c == 0) c = 1;
        out += w.scaled(mepack::ParamPoly(static_cast<long>(c)));
    }
    return out;
}

}  // namespace oracles
