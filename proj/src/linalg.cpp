#include "dkrrt/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "dkrrt/error.hpp"

namespace dkrrt {

namespace {

void check_tol(double tol_rel) {
  require(tol_rel > 0.0 && tol_rel < 1.0, ErrorKind::InvalidInput,
          "pseudoinverse tolerance must lie in (0, 1)");
}

}  // namespace

MatrixXd pinv(const MatrixXd& m, double tol_rel) {
  require(all_finite(m), ErrorKind::InvalidInput, "pinv input has non-finite entries");
  check_tol(tol_rel);
  if (m.size() == 0) return MatrixXd::Zero(m.cols(), m.rows());

  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cutoff = tol_rel * (s.size() > 0 ? s(0) : 0.0);
  VectorXd s_inv = VectorXd::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) s_inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

Index numerical_rank(const MatrixXd& m, double tol_rel) {
  require(all_finite(m), ErrorKind::InvalidInput, "rank input has non-finite entries");
  check_tol(tol_rel);
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<MatrixXd> svd(m);
  const VectorXd& s = svd.singularValues();
  const double cutoff = tol_rel * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) ++r;
  return r;
}

MatrixXd solve_right_least_squares(const MatrixXd& target, const MatrixXd& regressors,
                                   double tol_rel, double ridge) {
  require(target.cols() == regressors.cols(), ErrorKind::DimensionMismatch,
          "target and regressors must share column count");
  require(ridge >= 0.0, ErrorKind::InvalidInput, "ridge weight must be non-negative");
  if (ridge == 0.0) return target * pinv(regressors, tol_rel);
  // theta (R R^T + ridge I) = T R^T
  MatrixXd gram = regressors * regressors.transpose();
  gram.diagonal().array() += ridge;
  const MatrixXd rhs = regressors * target.transpose();
  return gram.ldlt().solve(rhs).transpose();
}

MatrixXd expm(const MatrixXd& a) {
  require(a.rows() == a.cols(), ErrorKind::DimensionMismatch, "expm needs a square matrix");
  require(all_finite(a), ErrorKind::InvalidInput, "expm input has non-finite entries");
  if (a.size() == 0) return a;
  return a.exp();
}

}  // namespace dkrrt
