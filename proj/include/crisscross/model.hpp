#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace crisscross {

enum class XFamily { Normal, Bernoulli, Poisson, Exponential, MultivariateNormal, Multinomial };
enum class YFamily { Normal, Bernoulli, Exponential };
// Identity is needed by the Bernoulli-Bernoulli identity-link configuration.
enum class Link { Canonical, Inverse, Identity };

std::string to_string(XFamily f);
std::string to_string(YFamily f);
std::string to_string(Link l);
XFamily parse_x_family(const std::string& s);
YFamily parse_y_family(const std::string& s);
Link parse_link(const std::string& s);

struct ExpFamilySpec {
  XFamily family_x = XFamily::Normal;
  YFamily family_y_given_x = YFamily::Normal;
  Link link = Link::Canonical;
  std::map<std::string, double> known_nuisance;  // e.g. "n_trials" for multinomial X
};

// theta = (alpha, beta, phi, eta_x, phi_x) of the exponential-family target law.
struct TargetLawParams {
  double alpha = 0.0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
  double phi = 1.0;
  Eigen::VectorXd eta_x = Eigen::VectorXd::Zero(1);
  double phi_x = 1.0;
  Eigen::VectorXd mu_x;     // multivariate-normal X only
  Eigen::MatrixXd sigma_x;  // multivariate-normal X only

  int dim() const { return static_cast<int>(beta.size()); }
  void validate(const ExpFamilySpec& spec) const;
};

// expit-linear mechanisms:
//   p(R_x=1|y)      = expit(c0 + c1 y + c2 y^2)
//   p(R_y=1|x, r_x) = expit(d0 + d1 r_x + d2 x + d3 x^2)
struct MissingnessMechanism {
  std::array<double, 3> rx_given_y{-0.5, 1.0, 0.0};
  std::array<double, 4> ry_given_x_rx{2.0, -1.0, 0.7, 0.0};

  double prob_rx(double y) const;
  double prob_ry(double x, int r_x) const;

  // expit(-0.5 + y) and expit(2 - r_x + 0.7 x [+ q x^2])
  static MissingnessMechanism standard(double quadratic = 0.0);
  static MissingnessMechanism none();  // everything observed
};

double expit(double t);
double logit(double p);

// Columnar observed data. A missing value is stored as NaN; the indicator
// columns are authoritative and validate() checks the two agree.
struct ObservedDataset {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::uint8_t> r_x;
  std::vector<std::uint8_t> r_y;

  std::size_t size() const { return r_x.size(); }
  std::size_t n_total() const { return size(); }
  std::size_t n_complete() const;
  bool complete(std::size_t i) const { return r_x[i] && r_y[i]; }
  std::optional<double> x_at(std::size_t i) const;
  std::optional<double> y_at(std::size_t i) const;

  void push_back(std::optional<double> xv, std::optional<double> yv);
  void validate() const;  // throws DataError naming the first bad row

  // Complete-case columns in row order.
  std::pair<std::vector<double>, std::vector<double>> complete_cases() const;
};

struct PairKernel {
  double theta = 0.0;
};

// Inverse odds ratio exp(-theta (x_i - x_k)(y_i - y_k)); pairs are (x, y).
double eval_q(const PairKernel& kernel, std::pair<double, double> pair_i,
              std::pair<double, double> pair_k);
double eval_or(const PairKernel& kernel, std::pair<double, double> pair_i,
               std::pair<double, double> pair_k);

struct ConditionalNormal {
  double alpha;
  double beta;
  double sigma2;
};

// X|Y of a bivariate normal with Y ~ N(mu1, sigma1^2), X ~ N(mu2, sigma2^2).
ConditionalNormal derive_conditional(double mu1, double mu2, double sigma1, double sigma2, double rho);

// Delta-method transform of theta to the odds ratio at a fixed contrast.
std::pair<double, double> or_from_theta(double theta_hat, double theta_var, double contrast);

}  // namespace crisscross
