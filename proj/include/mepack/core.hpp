#pragma once

// Packet parameterization, classical maximum-entropy packets, Gaussian
// moments and the highest-order moment coefficient recursion.

#include "mepack/errors.hpp"
#include "mepack/exact.hpp"
#include "mepack/param_poly.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace mepack {

/// Global constants: the action quantum and the auxiliary phase-space
/// volume that makes the classical distribution dimensionless.
struct Constants {
    double hbar = 1.0;
    double v = 2.0 * std::numbers::pi;  // default v = 2*pi*hbar with hbar = 1

    static Constants natural() { return {}; }

    void validate() const {
        if (!(hbar > 0.0)) throw ValidationError("constants.hbar", "must be > 0");
        if (!(v > 0.0)) throw ValidationError("constants.v", "must be > 0");
    }
};

/// Mean and spread of one degree of freedom.
struct Dof {
    double Q = 0.0;
    double P = 0.0;
    double dQ = 1.0;
    double dP = 1.0;
};

struct PacketParams {
    std::vector<Dof> dofs;
    Constants constants;

    PacketParams() = default;
    PacketParams(Dof d, Constants c = Constants{}) : dofs{d}, constants(c) {}
    PacketParams(std::vector<Dof> d, Constants c = Constants{})
        : dofs(std::move(d)), constants(c) {}

    std::size_t size() const { return dofs.size(); }

    double nu(std::size_t k = 0) const {
        return 2.0 * dofs.at(k).dQ * dofs.at(k).dP / constants.hbar;
    }

    void validate() const {
        constants.validate();
        if (dofs.empty()) throw ValidationError("packet", "at least one degree of freedom required");
        for (std::size_t k = 0; k < dofs.size(); ++k) {
            const std::string tag = "packet.dof[" + std::to_string(k) + "]";
            if (!(dofs[k].dQ > 0.0)) throw ValidationError(tag + ".dQ", "variance must be > 0");
            if (!(dofs[k].dP > 0.0)) throw ValidationError(tag + ".dP", "variance must be > 0");
            if (!std::isfinite(nu(k))) throw ValidationError(tag, "nu = 2*dQ*dP/hbar is not finite");
        }
    }

    void require_single_dof(const char* where) const {
        if (dofs.size() != 1)
            throw ValidationError(where, "operation is defined for a single degree of freedom");
    }
};

/// Lagrange multipliers of the classical entropy maximization, one
/// quadruple per degree of freedom.
struct MultiplierSet {
    double l1 = 0.0, l2 = 0.0, l3 = 0.0, l4 = 0.0;
};

struct ClassicalMultipliers {
    std::vector<MultiplierSet> per_dof;
};

inline ClassicalMultipliers classical_multipliers(const PacketParams& params) {
    params.validate();
    ClassicalMultipliers out;
    out.per_dof.reserve(params.size());
    for (const Dof& d : params.dofs) {
        MultiplierSet m;
        m.l1 = -d.Q / (d.dQ * d.dQ);
        m.l3 = 1.0 / (2.0 * d.dQ * d.dQ);
        m.l2 = -d.P / (d.dP * d.dP);
        m.l4 = 1.0 / (2.0 * d.dP * d.dP);
        out.per_dof.push_back(m);
    }
    return out;
}

struct ClassicalMEPacket {
    PacketParams params;
    ClassicalMultipliers multipliers;

    explicit ClassicalMEPacket(PacketParams p)
        : params(std::move(p)), multipliers(classical_multipliers(params)) {}
};

/// Product-Gaussian phase-space density, normalized against dq dp / v.
inline double classical_density(const ClassicalMEPacket& packet, const std::vector<double>& q,
                                const std::vector<double>& p) {
    const auto& dofs = packet.params.dofs;
    if (q.size() != dofs.size() || p.size() != dofs.size())
        throw ValidationError("density", "dimension of (q, p) does not match the packet");
    const double v = packet.params.constants.v;
    double value = 1.0;
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        const Dof& d = dofs[k];
        double eq = (q[k] - d.Q) / d.dQ;
        double ep = (p[k] - d.P) / d.dP;
        value *= (v / (2.0 * std::numbers::pi)) / (d.dQ * d.dP) *
                 std::exp(-0.5 * eq * eq - 0.5 * ep * ep);
    }
    return value;
}

/// Entropy of the classical packet: sum over dofs of 1 + ln(2*pi*dQ*dP/v).
inline double classical_entropy(const PacketParams& params) {
    params.validate();
    double sigma = 0.0;
    for (const Dof& d : params.dofs)
        sigma += 1.0 + std::log(2.0 * std::numbers::pi * d.dQ * d.dP / params.constants.v);
    return sigma;
}

// Gaussian central moments: M_0 = 1, M_1 = 0, M_j = (j-1) s^2 M_{j-2}.
inline double gaussian_central_moment(int j, double sigma) {
    if (j < 0) throw ValidationError("moment.order", "must be >= 0");
    if (j % 2 == 1) return 0.0;
    double m = 1.0;
    for (int i = 2; i <= j; i += 2) m *= (i - 1) * sigma * sigma;
    return m;
}

/// Raw Gaussian moment <x^k> about mean m with spread s.
inline double gaussian_raw_moment(int k, double m, double s) {
    double acc = 0.0;
    for (int j = 0; j <= k; j += 2)
        acc += static_cast<double>(binomial(k, j)) * std::pow(m, k - j) *
               gaussian_central_moment(j, s);
    return acc;
}

/// <q^k p^l> for a single-dof packet; factorizes as <q^k><p^l>.
inline double classical_moment(const PacketParams& params, int k, int l) {
    params.validate();
    params.require_single_dof("classical_moment");
    if (k < 0 || l < 0) throw ValidationError("moment.order", "must be >= 0");
    const Dof& d = params.dofs[0];
    return gaussian_raw_moment(k, d.Q, d.dQ) * gaussian_raw_moment(l, d.P, d.dP);
}

/// Symbolic <q^k> as a polynomial in Q and dQ (or P, dP).
inline ParamPoly gaussian_raw_moment_sym(int k, Sym mean, Sym spread) {
    ParamPoly acc;
    for (int j = 0; j <= k; j += 2) {
        BigInt coeff = binomial(k, j) * double_factorial_odd(j / 2);
        ParamPoly term = ParamPoly(GaussRat(BigRat(coeff)));
        if (k - j != 0) term = term.shifted(mean, k - j);
        if (j != 0) term = term.shifted(spread, j);
        acc += term;
    }
    return acc;
}

// --- Partition-function route for classical moments --------------------
//
// <q^k> = (-1)^k e^{-x} d^k/dlambda1^k e^{x} with x = lambda1^2/(4 lambda3),
// evaluated by symbolic differentiation of (polynomial in lambda1, 1/lambda3)
// times exp(x). Retained as an independent cross-check of the closed-form
// Gaussian moments.
namespace detail {

// term map: (power of lambda1, power of lambda3^{-1}) -> rational coefficient
using L13Poly = std::map<std::pair<int, int>, BigRat>;

inline L13Poly l13_differentiate(const L13Poly& poly) {
    L13Poly out;
    auto add = [&out](std::pair<int, int> key, const BigRat& c) {
        auto [it, inserted] = out.try_emplace(key, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) out.erase(it);
        }
    };
    for (const auto& [key, c] : poly) {
        auto [a, b] = key;
        if (a > 0) add({a - 1, b}, c * a);             // d/dl1 of l1^a
        add({a + 1, b + 1}, c / 2);                    // chain rule through exp(l1^2/(4 l3))
    }
    return out;
}

}  // namespace detail

/// <q^k p^l> evaluated through partition-function derivatives; cross-check
/// path for classical_moment.
inline double classical_moment_partition(const PacketParams& params, int k, int l) {
    params.validate();
    params.require_single_dof("classical_moment_partition");
    auto one_factor = [](int order, double mean, double spread) {
        detail::L13Poly poly;
        poly[{0, 0}] = 1;
        for (int j = 0; j < order; ++j) poly = detail::l13_differentiate(poly);
        const double l1 = -mean / (spread * spread);
        const double l3 = 1.0 / (2.0 * spread * spread);
        double acc = 0.0;
        for (const auto& [key, c] : poly)
            acc += static_cast<double>(c) * std::pow(l1, key.first) *
                   std::pow(1.0 / l3, key.second);
        return (order % 2 == 0 ? 1.0 : -1.0) * acc;
    };
    const Dof& d = params.dofs[0];
    return one_factor(k, d.Q, d.dQ) * one_factor(l, d.P, d.dP);
}

// --- Highest-order coefficient recursion --------------------------------

/// Coefficient tables a_{m,k}, b_{m,k} of the odd/even derivative
/// expansions behind the highest-order moment term, together with
/// A_m = a_{m,1} and B_m = b_{m,1}.
struct HighestOrderCoefficients {
    int m = 0;
    BigInt A;                          // a_{m,1}; equals (2m-1)!!
    BigInt B;                          // b_{m,1}
    std::vector<std::vector<BigInt>> a_table;  // a_table[j][k-1] = a_{j,k}, k = 1..j+1
    std::vector<std::vector<BigInt>> b_table;  // b_table[j][k-1] = b_{j,k}, k = 1..j
};

inline HighestOrderCoefficients highest_order_coefficients(int m) {
    if (m < 1) throw ValidationError("m", "must be >= 1");
    std::vector<std::vector<BigInt>> a(m + 1), b(m + 1);
    b[1] = {BigInt(1)};             // b_{1,1} = 1
    a[1] = {BigInt(1), BigInt(1)};  // a_{1,1} = a_{1,2} = 1
    for (int j = 2; j <= m; ++j) {
        // b_{j,k} = a_{j-1,k} + 2k a_{j-1,k+1} for k = 1..j-1; b_{j,j} = a_{j-1,j}
        b[j].assign(j, BigInt(0));
        for (int k = 1; k <= j - 1; ++k)
            b[j][k - 1] = a[j - 1][k - 1] + 2 * k * a[j - 1][k];
        b[j][j - 1] = a[j - 1][j - 1];
        // a_{j,1} = b_{j,1}; a_{j,k} = b_{j,k-1} + (2k-1) b_{j,k} for k = 2..j;
        // a_{j,j+1} = b_{j,j}
        a[j].assign(j + 1, BigInt(0));
        a[j][0] = b[j][0];
        for (int k = 2; k <= j; ++k)
            a[j][k - 1] = b[j][k - 2] + (2 * k - 1) * b[j][k - 1];
        a[j][j] = b[j][j - 1];
    }
    HighestOrderCoefficients out;
    out.m = m;
    out.A = a[m][0];
    out.B = b[m][0];
    out.a_table = std::move(a);
    out.b_table = std::move(b);
    return out;
}

}  // namespace mepack
