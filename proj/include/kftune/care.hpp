#pragma once

#include <Eigen/Dense>

namespace kftune {

/// Stabilizing solution S of A^T S + S A - S B R^{-1} B^T S + Q = 0,
/// computed from the stable invariant subspace of the Hamiltonian matrix.
/// Throws if the subspace is defective or the residual exceeds 1e-8.
Eigen::MatrixXd solve_continuous_riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                         const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

}  // namespace kftune
