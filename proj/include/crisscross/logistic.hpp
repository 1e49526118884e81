#pragma once

#include <Eigen/Dense>

namespace crisscross {

struct LogisticFit {
  Eigen::VectorXd coef;
  int iterations = 0;
  bool converged = false;
  bool separation = false;
  double gradient_norm = 0.0;
};

// Logistic regression by IRLS. design carries its own intercept column.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                         double grad_tol = 1e-10, int max_iter = 100);

}  // namespace crisscross
