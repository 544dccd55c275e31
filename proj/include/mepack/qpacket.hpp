#pragma once

// Quantum maximum-entropy packet: Lagrange multipliers, partition
// function, von Neumann entropy, the geometric diagonal weights and a
// truncated matrix realization used as the independent numerical oracle.

#include "mepack/core.hpp"
#include "mepack/errors.hpp"
#include "mepack/oscmatrix.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

namespace mepack {

struct QuantumMultipliers {
    std::vector<MultiplierSet> per_dof;
};

inline double require_nu_above_one(const PacketParams& params, std::size_t k) {
    double nu = params.nu(k);
    if (nu < 1.0)
        throw ValidationError("packet.dof[" + std::to_string(k) + "]",
                              "uncertainty bound violated: nu = 2*dQ*dP/hbar = " +
                                  std::to_string(nu) + " < 1");
    if (nu == 1.0)
        throw ValidationError("packet.dof[" + std::to_string(k) + "]",
                              "nu = 1 is the pure-state boundary; multipliers diverge there");
    return nu;
}

/// Multipliers of the quantum entropy maximization:
/// l1 = -(Q/dQ^2)(nu/2) ln((nu+1)/(nu-1)) and so on.
inline QuantumMultipliers quantum_multipliers(const PacketParams& params) {
    params.validate();
    QuantumMultipliers out;
    for (std::size_t k = 0; k < params.size(); ++k) {
        double nu = require_nu_above_one(params, k);
        const Dof& d = params.dofs[k];
        const double g = 0.5 * nu * std::log((nu + 1.0) / (nu - 1.0));
        MultiplierSet m;
        m.l1 = -d.Q / (d.dQ * d.dQ) * g;
        m.l2 = -d.P / (d.dP * d.dP) * g;
        m.l3 = 1.0 / (2.0 * d.dQ * d.dQ) * g;
        m.l4 = 1.0 / (2.0 * d.dP * d.dP) * g;
        out.per_dof.push_back(m);
    }
    return out;
}

/// Z = exp(l1^2/4l3 + l2^2/4l4) / (2 sinh(hbar sqrt(l3 l4))), one factor
/// per degree of freedom.
inline double quantum_partition(const QuantumMultipliers& multipliers, double hbar) {
    double z = 1.0;
    for (const MultiplierSet& m : multipliers.per_dof) {
        if (!(m.l3 > 0.0) || !(m.l4 > 0.0))
            throw ValidationError("multipliers", "l3 and l4 must be positive");
        z *= std::exp(m.l1 * m.l1 / (4.0 * m.l3) + m.l2 * m.l2 / (4.0 * m.l4)) /
             (2.0 * std::sinh(hbar * std::sqrt(m.l3 * m.l4)));
    }
    return z;
}

/// Sigma(nu) = -ln 2 + ((nu+1)/2) ln(nu+1) - ((nu-1)/2) ln(nu-1); zero at
/// the pure-state boundary.
inline double quantum_entropy(double nu) {
    if (nu < 1.0) throw ValidationError("nu", "must be >= 1");
    double last = (nu == 1.0) ? 0.0 : 0.5 * (nu - 1.0) * std::log(nu - 1.0);
    return -std::log(2.0) + 0.5 * (nu + 1.0) * std::log(nu + 1.0) - last;
}

/// R_m = 2 (nu-1)^m / (nu+1)^{m+1} for m = 0..m_max.
inline std::vector<double> diagonal_weights(double nu, int m_max) {
    if (nu < 1.0) throw ValidationError("nu", "must be >= 1");
    if (m_max < 0) throw ValidationError("m_max", "must be >= 0");
    std::vector<double> r(m_max + 1);
    const double ratio = (nu - 1.0) / (nu + 1.0);
    double w = 2.0 / (nu + 1.0);
    for (int m = 0; m <= m_max; ++m) {
        r[m] = w;
        w *= ratio;
    }
    return r;
}

/// Geometric tail 1 - sum_{m<=M} R_m = ((nu-1)/(nu+1))^{M+1}.
inline double diagonal_weight_tail(double nu, int m_top) {
    return std::pow((nu - 1.0) / (nu + 1.0), m_top + 1);
}

/// Basis size for a target geometric tail, with headroom for the edge
/// distortion of the truncated K' operator (the boundary perturbs
/// eigenpairs well below the cutoff, so the raw tail estimate is scaled by
/// 3/2 plus a fixed floor). `for_dynamics` doubles the result to leave
/// room for evolution populating higher levels.
inline int suggested_dim(double nu, double tail_bound = 1e-10, bool for_dynamics = false) {
    if (nu < 1.0) throw ValidationError("nu", "must be >= 1");
    int m = 1;
    if (nu > 1.0) {
        const double lr = std::log((nu - 1.0) / (nu + 1.0));
        m = static_cast<int>(std::ceil(std::log(tail_bound) / lr)) + 1;
        m = std::max(m, 1);
    }
    int dim = (3 * m) / 2 + 16;
    return for_dynamics ? 2 * dim : dim;
}

struct QuantumMEPacket {
    PacketParams params;
    std::vector<double> nu;
    QuantumMultipliers multipliers;

    explicit QuantumMEPacket(PacketParams p) : params(std::move(p)) {
        params.validate();
        for (std::size_t k = 0; k < params.size(); ++k) {
            double n = params.nu(k);
            if (n < 1.0)
                throw ValidationError("packet.dof[" + std::to_string(k) + "]",
                                      "uncertainty bound violated: nu < 1");
            nu.push_back(n);
        }
        if (min_nu() > 1.0) multipliers = quantum_multipliers(params);
    }

    double min_nu() const {
        double m = nu.front();
        for (double x : nu) m = std::min(m, x);
        return m;
    }
};

/// Finite matrix realization of a single-dof packet in its reference
/// oscillator basis.
struct TruncatedState {
    int dim = 0;
    CMatrix matrix;
    PacketParams params;

    double truncation_defect = 0.0;  // |trace before renormalization - 1|
    double tail_bound = 0.0;         // geometric tail at the cutoff

    double hermiticity_residual() const {
        return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    }

    double moment(const CMatrix& op) const { return (matrix * op).trace().real(); }

    /// Residuals of the four defining moment constraints.
    struct Residuals {
        double q, p, q2, p2;
    };
    Residuals constraint_residuals() const {
        const Dof& d = params.dofs[0];
        CMatrix q = position_matrix(params, dim);
        CMatrix p = momentum_matrix(params, dim);
        return {moment(q) - d.Q, moment(p) - d.P, moment(q * q) - (d.Q * d.Q + d.dQ * d.dQ),
                moment(p * p) - (d.P * d.P + d.dP * d.dP)};
    }

    double von_neumann_entropy() const {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(matrix);
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            double w = es.eigenvalues()(i);
            if (w > 1e-300) s -= w * std::log(w);
        }
        return s;
    }

    std::string diagnostic_report() const {
        Residuals r = constraint_residuals();
        std::ostringstream os;
        os << "truncated state: dim = " << dim << "\n"
           << "  tail bound          " << tail_bound << "\n"
           << "  truncation defect   " << truncation_defect << "\n"
           << "  hermiticity         " << hermiticity_residual() << "\n"
           << "  constraint residual q " << r.q << "  p " << r.p << "  q2 " << r.q2 << "  p2 "
           << r.p2 << "\n";
        return os.str();
    }
};

/// Builds the exponential state through Hermitian functional calculus of
/// K' = (q-Q)^2/(2 dQ^2) + (p-P)^2/(2 dP^2) in the truncated basis.
inline TruncatedState build_truncated_state(const QuantumMEPacket& packet, int dim) {
    packet.params.require_single_dof("build_truncated_state");
    const Dof& d = packet.params.dofs[0];
    const double nu = packet.nu[0];
    if (dim < 2) throw ValidationError("dim", "basis cutoff must be >= 2");

    const double tail = (nu > 1.0) ? diagonal_weight_tail(nu, dim - 1) : 0.0;
    if (tail >= 1e-10) {
        throw NumericalError("truncation: geometric tail " + std::to_string(tail) +
                             " at dim " + std::to_string(dim) + " exceeds 1e-10; suggested dim " +
                             std::to_string(suggested_dim(nu)));
    }

    TruncatedState st;
    st.dim = dim;
    st.params = packet.params;
    st.tail_bound = tail;

    if (nu == 1.0) {
        // Pure-state boundary: the packet is the ground-state projector of K'.
        st.matrix = CMatrix::Zero(dim, dim);
        st.matrix(0, 0) = 1.0;
        st.truncation_defect = 0.0;
        return st;
    }

    CMatrix q = position_matrix(packet.params, dim);
    CMatrix p = momentum_matrix(packet.params, dim);
    CMatrix dq = q - d.Q * CMatrix::Identity(dim, dim);
    CMatrix dp = p - d.P * CMatrix::Identity(dim, dim);
    CMatrix kprime =
        dq * dq / (2.0 * d.dQ * d.dQ) + dp * dp / (2.0 * d.dP * d.dP);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(kprime);
    const double beta = 0.5 * nu * std::log((nu + 1.0) / (nu - 1.0));
    const double norm = 2.0 / std::sqrt(nu * nu - 1.0);
    Eigen::VectorXd f(dim);
    for (int i = 0; i < dim; ++i) f(i) = norm * std::exp(-beta * es.eigenvalues()(i));

    CMatrix t = es.eigenvectors() * f.asDiagonal() * es.eigenvectors().adjoint();
    double tr = t.trace().real();
    st.truncation_defect = std::abs(tr - 1.0);
    st.matrix = t / tr;
    return st;
}

/// Ground-state wave function of the packet at the pure-state boundary,
/// evaluated on a position grid; normalized on the grid by construction of
/// the closed form.
inline std::vector<std::complex<double>> pure_limit_wavefunction(const QuantumMEPacket& packet,
                                                                 const std::vector<double>& q_grid) {
    packet.params.require_single_dof("pure_limit_wavefunction");
    const double nu = packet.nu[0];
    if (std::abs(nu - 1.0) > 1e-12)
        throw ValidationError("packet", "pure-limit wave function requires nu = 1");
    const Dof& d = packet.params.dofs[0];
    const double hbar = packet.params.constants.hbar;
    const double amp = std::pow(nu / (2.0 * std::numbers::pi * d.dQ * d.dQ), 0.25);
    std::vector<std::complex<double>> psi(q_grid.size());
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        double x = q_grid[i] - d.Q;
        psi[i] = amp * std::exp(std::complex<double>(-nu * x * x / (4.0 * d.dQ * d.dQ),
                                                     d.P * q_grid[i] / hbar));
    }
    return psi;
}

}  // namespace mepack
