#pragma once

#include <Eigen/Dense>

namespace dkrrt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

constexpr double kDefaultPinvTol = 1e-10;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/**
 * Moore-Penrose pseudoinverse by SVD.
 *
 * Singular values below tol_rel * sigma_max are treated as zero. Throws
 * InvalidInput on non-finite entries or tol_rel outside (0, 1).
 */
MatrixXd pinv(const MatrixXd& m, double tol_rel = kDefaultPinvTol);

/// Number of singular values above tol_rel * sigma_max.
Index numerical_rank(const MatrixXd& m, double tol_rel = kDefaultPinvTol);

/// Minimizes ||target - theta * regressors||_F^2 + ridge * ||theta||_F^2.
/// ridge == 0 gives target * pinv(regressors).
MatrixXd solve_right_least_squares(const MatrixXd& target, const MatrixXd& regressors,
                                   double tol_rel, double ridge);

/// Matrix exponential (Pade scaling-and-squaring).
MatrixXd expm(const MatrixXd& a);

}  // namespace dkrrt
