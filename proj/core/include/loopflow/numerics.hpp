#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace loopflow {

struct DenseSystem {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
};

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves matrix * x = rhs. Rows are equilibrated by their largest entry, then
/// factored with partial pivoting. Throws SingularSystemError when a pivot
/// falls below 1e-12 (relative to the unit row scale) or a row is all zero,
/// std::invalid_argument on shape mismatch or non-finite input.
Eigen::VectorXd solve_linear(const DenseSystem& sys);

/// 1-norm condition number estimate of the unscaled matrix. Diagnostic only;
/// returns +inf for a singular matrix.
double condition_estimate(const DenseSystem& sys);

/// max |matrix * x - rhs|
double residual_inf_norm(const DenseSystem& sys, const Eigen::VectorXd& x);

}  // namespace loopflow
