#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "affect/modality.hpp"

namespace affect
{

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Gram matrices worse than this are treated as singular when no ridge was asked for.
inline constexpr double kConditionLimit = 1e10;
inline constexpr double kFallbackRidge = 1e-8;

/// Sum of squared residuals, sum_i (y_i - x_i . theta)^2.
template <class Scalar>
Scalar least_squares_cost(const MatrixX<Scalar>& design, const VectorX<Scalar>& target, const VectorX<Scalar>& theta)
{
    return (target - design * theta).squaredNorm();
}

/// d cost / d theta = -2 X^T (y - X theta).
template <class Scalar>
VectorX<Scalar> least_squares_gradient(const MatrixX<Scalar>& design, const VectorX<Scalar>& target,
                                       const VectorX<Scalar>& theta)
{
    return Scalar(-2) * design.transpose() * (target - design * theta);
}

/// Ratio of extreme eigenvalues of a symmetric PSD matrix; infinity when singular.
template <class Scalar>
Scalar condition_number(const MatrixX<Scalar>& gram)
{
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(gram, Eigen::EigenvaluesOnly);
    const Scalar lo = es.eigenvalues().minCoeff();
    const Scalar hi = es.eigenvalues().maxCoeff();
    if (!(lo > Scalar(0)))
        return std::numeric_limits<Scalar>::infinity();
    return hi / lo;
}

template <class Scalar>
struct LeastSquaresFit
{
    VectorX<Scalar> theta;
    Scalar cost;      // residual sum of squares on the fitted rows
    Scalar condition; // of the unregularized Gram matrix
    Scalar ridge;     // 0 for plain least squares
};

/// Solves (X^T X + ridge * D) theta = X^T y where D is the identity with a
/// zero at unpenalized_column. With ridge == 0 and a Gram condition above
/// kConditionLimit the solve falls back to kFallbackRidge.
template <class Scalar>
LeastSquaresFit<Scalar> solve_normal_equations(const MatrixX<Scalar>& design, const VectorX<Scalar>& target,
                                               Scalar ridge = Scalar(0),
                                               std::optional<Eigen::Index> unpenalized_column = std::nullopt)
{
    const Eigen::Index rows = design.rows();
    const Eigen::Index params = design.cols();
    if (target.size() != rows)
        throw DomainError("design has " + std::to_string(rows) + " rows but target has " +
                          std::to_string(target.size()));
    if (!(ridge >= Scalar(0)) || !std::isfinite(static_cast<double>(ridge)))
        throw DomainError("ridge must be a non-negative finite value");
    if (!design.allFinite() || !target.allFinite())
        throw DomainError("least squares inputs must be finite");
    if (params == 0)
        throw DomainError("least squares needs at least one parameter");
    if (ridge == Scalar(0) && rows < params)
        throw DomainError("need at least " + std::to_string(params) + " rows for " + std::to_string(params) +
                          " parameters without ridge, got " + std::to_string(rows));

    const MatrixX<Scalar> gram = design.transpose() * design;
    const VectorX<Scalar> moment = design.transpose() * target;
    const Scalar condition = condition_number<Scalar>(gram);
    if (ridge == Scalar(0) && !(condition <= Scalar(kConditionLimit)))
        ridge = Scalar(kFallbackRidge);

    MatrixX<Scalar> system = gram;
    if (ridge > Scalar(0))
    {
        VectorX<Scalar> penalty = VectorX<Scalar>::Constant(params, ridge);
        if (unpenalized_column)
            penalty[*unpenalized_column] = Scalar(0);
        system.diagonal() += penalty;
    }

    const Eigen::LDLT<MatrixX<Scalar>> ldlt(system);
    if (ldlt.info() != Eigen::Success)
        throw DomainError("normal equations could not be factored");
    VectorX<Scalar> theta = ldlt.solve(moment);
    if (!theta.allFinite())
        throw DomainError("normal equations produced a non-finite solution");

    return {theta, least_squares_cost<Scalar>(design, target, theta), condition, ridge};
}

} // namespace affect
