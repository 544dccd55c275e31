#pragma once

// Truncated matrix representations in the reference-oscillator number
// basis (mass dP/dQ, frequency 1, centered at the packet means). Shared by
// the quantum packet construction, the matrix evolution oracle and the
// algebra faithfulness tests.

#include "mepack/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>

namespace mepack {

using CMatrix = Eigen::MatrixXcd;

/// Annihilation operator on the first `dim` number states.
inline CMatrix ladder_matrix(int dim) {
    CMatrix a = CMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

/// Position operator q = Q + (dQ/sqrt(nu)) (A + A^dagger).
inline CMatrix position_matrix(const PacketParams& params, int dim) {
    params.require_single_dof("position_matrix");
    const Dof& d = params.dofs[0];
    const double c = d.dQ / std::sqrt(params.nu());
    CMatrix a = ladder_matrix(dim);
    return d.Q * CMatrix::Identity(dim, dim) + c * (a + a.adjoint().eval());
}

/// Momentum operator p = P - i (dP/sqrt(nu)) (A - A^dagger).
inline CMatrix momentum_matrix(const PacketParams& params, int dim) {
    params.require_single_dof("momentum_matrix");
    const Dof& d = params.dofs[0];
    const double c = d.dP / std::sqrt(params.nu());
    CMatrix a = ladder_matrix(dim);
    return d.P * CMatrix::Identity(dim, dim) -
           std::complex<double>(0.0, c) * (a - a.adjoint().eval());
}

inline double real_trace(const CMatrix& m) { return m.trace().real(); }

}  // namespace mepack
