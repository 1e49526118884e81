#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisscross/model.hpp"

namespace crisscross {

inline constexpr double kPropensityFloor = 1e-6;

// pi(x) = p(R_y=1 | R_x=1, x) = expit(c0 + c1 x [+ c2 x^2]), or a supplied function.
struct PropensityModel {
  Eigen::VectorXd coef;
  bool quadratic = false;
  bool fitted = false;
  int iterations = 0;
  bool converged = false;
  bool separation = false;
  std::function<double(double)> known;  // takes precedence over coef when set

  double operator()(double x) const;

  static PropensityModel constant(double p);
  static PropensityModel from_function(std::function<double(double)> fn);
  static PropensityModel from_coefficients(const Eigen::VectorXd& coef);
};

// Logistic regression of R_y on x over rows with r_x = 1.
PropensityModel fit_propensity(const ObservedDataset& data, bool quadratic);

enum class MeanKind { NormalLinear, Binary2x2 };

// E(X|Y=y) = h(y; theta) over the free components of theta.
//   NormalLinear: h = alpha + beta y; free (alpha, beta) or (beta) with alpha known.
//   Binary2x2:    X, Y in {1,2}; theta11 known, free logits (g21, g22) with
//                 (theta12, theta21, theta22) = (1 - theta11) softmax(0, g21, g22).
struct MeanModel {
  MeanKind kind = MeanKind::NormalLinear;
  std::map<std::string, double> known;
  double sigma2 = 1.0;  // Var(X|Y) for the NormalLinear optimal weight

  static MeanModel normal_linear(std::optional<double> alpha_known, double sigma2);
  static MeanModel binary_2x2(double theta11);

  int dim() const;
  std::vector<std::string> free_names() const;
  double h(double y, const Eigen::VectorXd& theta) const;
  Eigen::VectorXd a(double y, const Eigen::VectorXd& theta) const;  // dh/dtheta

  std::array<double, 4> cells(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd free_from_cells(const std::array<double, 4>& cells) const;
};

enum class WeightKind { NonOptimal, Optimal, Polynomial };

// f(y) in the estimating equation. Any weight can be premultiplied by a fixed
// matrix; roots do not change when the matrix is invertible.
class WeightFunction {
 public:
  static WeightFunction non_optimal();  // (1, y)
  // Row j gives f_j(y) = sum_k coef(j, k) y^k.
  static WeightFunction polynomial(const Eigen::MatrixXd& coef);
  static WeightFunction optimal(const MeanModel& model, const PropensityModel& pi,
                                const Eigen::VectorXd& pilot);

  Eigen::VectorXd operator()(double y) const;
  WeightFunction scaled(const Eigen::MatrixXd& m) const;
  WeightKind kind() const { return kind_; }

  // E[(X - h)^2 / pi(X) | Y = y] under the pilot fit (optimal weight only).
  double inner_expectation(double y) const;

 private:
  WeightKind kind_ = WeightKind::NonOptimal;
  Eigen::MatrixXd poly_;
  std::optional<Eigen::MatrixXd> transform_;
  MeanModel model_;
  PropensityModel pi_;
  Eigen::VectorXd pilot_;
};

WeightFunction optimal_f(const ObservedDataset& data, const MeanModel& model,
                         const PropensityModel& pi, const Eigen::VectorXd& theta_pilot);

// (1/N) sum_i r_x r_y / pi(x_i) f(y_i) (x_i - h(y_i; theta)).
Eigen::VectorXd gee_residual(const ObservedDataset& data, const MeanModel& model,
                             const PropensityModel& pi, const WeightFunction& f,
                             const Eigen::VectorXd& theta);

struct SandwichResult {
  Eigen::MatrixXd c_hat;  // E[w f a']
  Eigen::MatrixXd d_hat;  // E[w^2 (x - h)^2 f f']
  Eigen::MatrixXd cov;    // sqrt(N) scale
};

// Square systems: C^-1 D C^-T. More equations than unknowns: the identity-
// weighted GMM form (C'C)^-1 C' D C (C'C)^-1.
SandwichResult sandwich_gee(const ObservedDataset& data, const MeanModel& model,
                            const PropensityModel& pi, const WeightFunction& f,
                            const Eigen::VectorXd& theta_hat);

struct GeeResult {
  Eigen::VectorXd theta_hat;
  std::vector<std::string> names;
  Eigen::MatrixXd sandwich_cov;
  Eigen::MatrixXd c_hat;
  Eigen::MatrixXd d_hat;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  bool overidentified = false;
  std::size_t n_total = 0;
  std::size_t n_complete = 0;

  Eigen::VectorXd se() const;
};

// Newton (Gauss-Newton when overidentified) with step halving. NormalLinear
// starts from the weighted least-squares closed form.
GeeResult solve_gee(const ObservedDataset& data, const MeanModel& model, const PropensityModel& pi,
                    const WeightFunction& f, std::optional<Eigen::VectorXd> start = std::nullopt);

// Weighted least-squares root of the linear NormalLinear equations.
Eigen::VectorXd normal_linear_closed_form(const ObservedDataset& data, const MeanModel& model,
                                          const PropensityModel& pi, const WeightFunction& f);

struct Binary2x2Result {
  GeeResult gee;
  std::array<double, 4> cells{};  // (11, 12, 21, 22)
  double log_or = 0.0;
  double log_or_se = 0.0;
  bool cells_valid = false;
};

Binary2x2Result estimate_binary_2x2(const ObservedDataset& data, double theta11_known,
                                    const PropensityModel& pi, WeightKind f);

// Nuisance functions for the permutation-submodel influence-function estimator.
struct AipwNuisance {
  std::function<double(double)> prob_rx_given_y;    // p(R_x=1 | y)
  std::function<double(int, double)> prob_ry;       // p(R_y=1 | r_x, x*); x ignored when r_x=0
  std::function<double(double)> mean_h_given_y;     // E[h | R_x=1, Y=y]
  std::function<double(int, double)> mean_phi;      // E[phi | R_y=1, r_x, x*]
};

struct AipwResult {
  double beta_h_hat = 0.0;
  double se = 0.0;
  double ipw_hat = 0.0;
  double ipw_se = 0.0;
  std::vector<double> influence;
};

AipwResult aipw_permutation(const ObservedDataset& data,
                            const std::function<double(double, double)>& h_fn,
                            const AipwNuisance& nuisance);

}  // namespace crisscross
