#include "crisscross/logistic.hpp"

#include <cmath>

#include "crisscross/errors.hpp"
#include "crisscross/model.hpp"

namespace crisscross {

LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& response, double grad_tol,
                         int max_iter) {
  const Eigen::Index n = design.rows(), p = design.cols();
  if (n != response.size()) throw DataError("design and response lengths differ");
  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  if (n == 0) throw DataError("logistic regression on an empty stratum");
  const double ones = response.sum();
  if (ones == 0.0 || ones == static_cast<double>(n)) {
    fit.separation = true;
    return fit;
  }

  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd eta = design * fit.coef;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = expit(eta(i));
      w(i) = mu(i) * (1 - mu(i));
    }
    Eigen::VectorXd grad = design.transpose() * (response - mu);
    // Gradient of the mean log-likelihood, so the tolerance does not scale with n.
    fit.gradient_norm = grad.norm() / static_cast<double>(n);
    fit.iterations = it;
    if (fit.gradient_norm <= grad_tol) {
      fit.converged = true;
      break;
    }
    Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
      fit.separation = true;
      break;
    }
    Eigen::VectorXd step = ldlt.solve(grad);
    fit.coef += step;
    if (fit.coef.cwiseAbs().maxCoeff() > 1e3 || !fit.coef.allFinite()) {
      fit.separation = true;
      break;
    }
  }
  if (!fit.separation) {
    // Separated data drive the gradient to zero as the coefficients diverge,
    // so "convergence" there shows up as saturated probabilities.
    Eigen::VectorXd eta = design * fit.coef;
    if (eta.cwiseAbs().maxCoeff() > 20) {
      fit.separation = true;
      fit.converged = false;
    }
  }
  return fit;
}

}  // namespace crisscross
