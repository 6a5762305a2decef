#include "loopflow/numerics.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

namespace loopflow {

namespace {

constexpr double kPivotTolerance = 1e-12;

void check_shape(const DenseSystem& sys) {
    if (sys.matrix.rows() != sys.matrix.cols()) throw std::invalid_argument("solve_linear: matrix is not square");
    if (sys.rhs.size() != sys.matrix.rows()) throw std::invalid_argument("solve_linear: rhs size mismatch");
    if (!sys.matrix.allFinite() || !sys.rhs.allFinite())
        throw std::invalid_argument("solve_linear: non-finite entries");
}

}  // namespace

Eigen::VectorXd solve_linear(const DenseSystem& sys) {
    check_shape(sys);
    const Eigen::Index n = sys.matrix.rows();
    if (n == 0) return Eigen::VectorXd();

    Eigen::MatrixXd a = sys.matrix;
    Eigen::VectorXd b = sys.rhs;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double scale = a.row(r).cwiseAbs().maxCoeff();
        if (scale == 0.0) throw SingularSystemError("solve_linear: row " + std::to_string(r) + " is all zero");
        a.row(r) /= scale;
        b(r) /= scale;
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const auto& factors = lu.matrixLU();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(std::abs(factors(i, i)) >= kPivotTolerance))
            throw SingularSystemError("solve_linear: pivot " + std::to_string(i) + " below tolerance");
    }
    Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite()) throw SingularSystemError("solve_linear: non-finite solution");
    return x;
}

double condition_estimate(const DenseSystem& sys) {
    if (sys.matrix.rows() != sys.matrix.cols()) throw std::invalid_argument("condition_estimate: matrix is not square");
    if (sys.matrix.rows() == 0) return 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
    const double rcond = lu.rcond();
    if (!(rcond > 0.0) || !std::isfinite(rcond)) return std::numeric_limits<double>::infinity();
    return 1.0 / rcond;
}

double residual_inf_norm(const DenseSystem& sys, const Eigen::VectorXd& x) {
    if (x.size() == 0) return 0.0;
    return (sys.matrix * x - sys.rhs).cwiseAbs().maxCoeff();
}

}  // namespace loopflow
