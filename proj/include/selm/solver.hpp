#pragma once

#include <cmath>
#include <string>

#include "selm/core_types.hpp"

namespace selm {

/// Residual bound for ridge solves: ||((1/C)I + H^T H) beta - H^T t|| <= tol * (1 + ||H^T t||).
inline constexpr double kRidgeResidualTolerance = 1e-8;
/// Normal-equation pivots below this fraction of the largest diagonal entry count as rank deficiency.
inline constexpr double kPivotTolerance = 1e-12;
inline constexpr int kMaxRefinementSteps = 3;

/// Regularized least-squares problem: minimize 1/2 ||H beta - t||^2 + 1/(2C) ||beta||^2.
struct RidgeProblem {
    Eigen::Ref<const Matrix> hidden;   // n x l
    Eigen::Ref<const Vector> targets;  // n
    double C;
};

namespace detail {

inline void check_problem(const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& t) {
    if (H.rows() < 1 || H.cols() < 1) throw InvalidArgument("solver: H must be at least 1x1");
    if (H.rows() != t.size())
        throw DimensionError("solver: H has " + std::to_string(H.rows()) + " rows but t has " +
                             std::to_string(t.size()) + " entries");
    if (!H.allFinite() || !t.allFinite()) throw InvalidArgument("solver: non-finite entry in H or t");
}

}  // namespace detail

/// ||((1/C)I + H^T H) beta - H^T t||_2.
inline double ridge_residual(const RidgeProblem& p, const Vector& beta) {
    const Vector rhs = p.hidden.transpose() * p.targets;
    const Vector lhs = p.hidden.transpose() * (p.hidden * beta) + beta / p.C;
    return (lhs - rhs).norm();
}

/// Solves ((1/C)I + gram) beta = rhs for a precomputed gram = H^T H and rhs = H^T t.
///
/// Cholesky on the loaded normal equations; a column-pivoted QR takes over if
/// the factorization reports failure. A few steps of iterative refinement keep
/// the residual within kRidgeResidualTolerance at large C.
inline Vector ridge_solve_normal(const Eigen::Ref<const Matrix>& gram, const Eigen::Ref<const Vector>& rhs, double C) {
    if (!(C > 0.0) || !std::isfinite(C)) throw InvalidArgument("ridge_solve: C must be positive and finite");
    if (gram.rows() != gram.cols() || gram.rows() != rhs.size())
        throw DimensionError("ridge_solve: normal equations have inconsistent shapes");
    const auto l = gram.cols();
    if (rhs.isZero(0.0)) return Vector::Zero(l);
    Matrix A = gram;
    A.diagonal().array() += 1.0 / C;

    const double bound = kRidgeResidualTolerance * (1.0 + rhs.norm());
    auto refine = [&](const auto& factor) {
        Vector beta = factor.solve(rhs);
        for (int step = 0; step < kMaxRefinementSteps; ++step) {
            const Vector r = rhs - A * beta;
            if (r.norm() <= bound) break;
            beta += factor.solve(r);
        }
        return beta;
    };

    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) return refine(llt);
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    return refine(qr);
}

/// Closed-form output weights beta = ((1/C)I + H^T H)^{-1} H^T t.
inline Vector ridge_solve(const RidgeProblem& p) {
    detail::check_problem(p.hidden, p.targets);
    if (!(p.C > 0.0) || !std::isfinite(p.C)) throw InvalidArgument("ridge_solve: C must be positive and finite");
    const Matrix gram = p.hidden.transpose() * p.hidden;
    const Vector rhs = p.hidden.transpose() * p.targets;
    return ridge_solve_normal(gram, rhs, p.C);
}

inline Vector ridge_solve(const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& t, double C) {
    return ridge_solve(RidgeProblem{H, t, C});
}

/// Unregularized normal-equation solve beta = (H^T H)^{-1} H^T t.
/// Throws SingularMatrixError when H^T H is numerically rank deficient.
inline Vector pinv_solve(const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& t) {
    detail::check_problem(H, t);
    const Matrix A = H.transpose() * H;
    const double max_diag = A.diagonal().maxCoeff();
    Eigen::LDLT<Matrix> ldlt(A);
    const double min_pivot = ldlt.vectorD().cwiseAbs().minCoeff();
    if (ldlt.info() != Eigen::Success || !(max_diag > 0.0) || min_pivot < kPivotTolerance * max_diag)
        throw SingularMatrixError("pinv_solve: H^T H is rank deficient (pivot " + std::to_string(min_pivot) +
                                  "); use ridge_solve with finite C");
    return ldlt.solve(H.transpose() * t);
}

}  // namespace selm
