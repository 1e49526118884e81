#include "crisscross/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "crisscross/errors.hpp"

namespace crisscross {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(XFamily f) {
  switch (f) {
    case XFamily::Normal: return "normal";
    case XFamily::Bernoulli: return "bernoulli";
    case XFamily::Poisson: return "poisson";
    case XFamily::Exponential: return "exponential";
    case XFamily::MultivariateNormal: return "multivariate_normal";
    case XFamily::Multinomial: return "multinomial";
  }
  return "?";
}

std::string to_string(YFamily f) {
  switch (f) {
    case YFamily::Normal: return "normal";
    case YFamily::Bernoulli: return "bernoulli";
    case YFamily::Exponential: return "exponential";
  }
  return "?";
}

std::string to_string(Link l) {
  switch (l) {
    case Link::Canonical: return "canonical";
    case Link::Inverse: return "inverse";
    case Link::Identity: return "identity";
  }
  return "?";
}

XFamily parse_x_family(const std::string& s) {
  for (auto f : {XFamily::Normal, XFamily::Bernoulli, XFamily::Poisson, XFamily::Exponential,
                 XFamily::MultivariateNormal, XFamily::Multinomial})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown X family '" + s + "'");
}

YFamily parse_y_family(const std::string& s) {
  for (auto f : {YFamily::Normal, YFamily::Bernoulli, YFamily::Exponential})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown Y|X family '" + s + "'");
}

Link parse_link(const std::string& s) {
  for (auto l : {Link::Canonical, Link::Inverse, Link::Identity})
    if (to_string(l) == s) return l;
  throw ConfigError("unknown link '" + s + "'");
}

void TargetLawParams::validate(const ExpFamilySpec& spec) const {
  if (!(phi > 0.0)) throw DomainError("phi must be positive");
  if (!(phi_x > 0.0)) throw DomainError("phi_x must be positive");
  if (beta.size() < 1) throw DomainError("beta must have at least one component");
  const int d = dim();
  switch (spec.family_x) {
    case XFamily::MultivariateNormal:
      if (mu_x.size() != d || sigma_x.rows() != d || sigma_x.cols() != d)
        throw DomainError("multivariate normal X needs mu_x and sigma_x of dimension d");
      if (!sigma_x.isApprox(sigma_x.transpose()) || sigma_x.llt().info() != Eigen::Success)
        throw DomainError("sigma_x must be symmetric positive definite");
      break;
    case XFamily::Multinomial:
      if (d < 2) throw DomainError("multinomial X needs d >= 2");
      if (eta_x.size() < d - 1) throw DomainError("multinomial X needs d-1 free log-probabilities");
      break;
    default:
      if (d != 1) throw DomainError("univariate X family needs d = 1");
      if (eta_x.size() != 1) throw DomainError("univariate X family needs a scalar eta_x");
  }
}

double expit(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double MissingnessMechanism::prob_rx(double y) const {
  const auto& c = rx_given_y;
  return expit(c[0] + c[1] * y + c[2] * y * y);
}

double MissingnessMechanism::prob_ry(double x, int r_x) const {
  const auto& d = ry_given_x_rx;
  return expit(d[0] + d[1] * r_x + d[2] * x + d[3] * x * x);
}

MissingnessMechanism MissingnessMechanism::standard(double quadratic) {
  MissingnessMechanism m;
  m.rx_given_y = {-0.5, 1.0, 0.0};
  m.ry_given_x_rx = {2.0, -1.0, 0.7, quadratic};
  return m;
}

MissingnessMechanism MissingnessMechanism::none() {
  MissingnessMechanism m;
  m.rx_given_y = {50.0, 0.0, 0.0};
  m.ry_given_x_rx = {50.0, 0.0, 0.0, 0.0};
  return m;
}

std::size_t ObservedDataset::n_complete() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += complete(i);
  return n;
}

std::optional<double> ObservedDataset::x_at(std::size_t i) const {
  if (!r_x[i]) return std::nullopt;
  return x[i];
}

std::optional<double> ObservedDataset::y_at(std::size_t i) const {
  if (!r_y[i]) return std::nullopt;
  return y[i];
}

void ObservedDataset::push_back(std::optional<double> xv, std::optional<double> yv) {
  x.push_back(xv ? *xv : kNaN);
  y.push_back(yv ? *yv : kNaN);
  r_x.push_back(xv.has_value());
  r_y.push_back(yv.has_value());
}

void ObservedDataset::validate() const {
  if (x.size() != size() || y.size() != size() || r_y.size() != size())
    throw DataError("dataset columns have different lengths");
  for (std::size_t i = 0; i < size(); ++i) {
    if (r_x[i] > 1 || r_y[i] > 1) throw DataError("row " + std::to_string(i + 1) + ": indicator not 0/1");
    if (static_cast<bool>(r_x[i]) != std::isfinite(x[i]))
      throw DataError("row " + std::to_string(i + 1) + ": x presence disagrees with r_x");
    if (static_cast<bool>(r_y[i]) != std::isfinite(y[i]))
      throw DataError("row " + std::to_string(i + 1) + ": y presence disagrees with r_y");
  }
}

std::pair<std::vector<double>, std::vector<double>> ObservedDataset::complete_cases() const {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (complete(i)) {
      out.first.push_back(x[i]);
      out.second.push_back(y[i]);
    }
  }
  return out;
}

double eval_q(const PairKernel& kernel, std::pair<double, double> pair_i,
              std::pair<double, double> pair_k) {
  return std::exp(-kernel.theta * (pair_i.first - pair_k.first) * (pair_i.second - pair_k.second));
}

double eval_or(const PairKernel& kernel, std::pair<double, double> pair_i,
               std::pair<double, double> pair_k) {
  return std::exp(kernel.theta * (pair_i.first - pair_k.first) * (pair_i.second - pair_k.second));
}

ConditionalNormal derive_conditional(double mu1, double mu2, double sigma1, double sigma2, double rho) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw DomainError("standard deviations must be positive");
  if (!(std::abs(rho) < 1.0)) throw DomainError("|rho| must be below 1");
  const double beta = rho * sigma2 / sigma1;
  return {mu2 - beta * mu1, beta, (1.0 - rho * rho) * sigma2 * sigma2};
}

std::pair<double, double> or_from_theta(double theta_hat, double theta_var, double contrast) {
  if (!(theta_var >= 0.0)) throw DomainError("theta_var must be nonnegative");
  const double point = std::exp(theta_hat * contrast);
  return {point, point * std::abs(contrast) * std::sqrt(theta_var)};
}

}  // namespace crisscross
