#include "crisscross/families.hpp"

#include <cmath>

#include "crisscross/errors.hpp"

namespace crisscross {

namespace {

double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

[[noreturn]] void outside(const char* what, double t) {
  throw DomainError(std::string(what) + " outside its domain at " + std::to_string(t));
}

}  // namespace

ResponseTable::ResponseTable(YFamily family, Link link) : family_(family), link_(link) {}

double ResponseTable::cumulant(double eta) const {
  switch (family_) {
    case YFamily::Normal: return 0.5 * eta * eta;
    case YFamily::Bernoulli: return log1pexp(eta);
    case YFamily::Exponential:
      if (!(eta < 0)) outside("exponential natural parameter", eta);
      return -std::log(-eta);
  }
  return 0;
}

double ResponseTable::cumulant_d1(double eta) const {
  switch (family_) {
    case YFamily::Normal: return eta;
    case YFamily::Bernoulli: return expit(eta);
    case YFamily::Exponential:
      if (!(eta < 0)) outside("exponential natural parameter", eta);
      return -1.0 / eta;
  }
  return 0;
}

double ResponseTable::cumulant_d2(double eta) const {
  switch (family_) {
    case YFamily::Normal: return 1.0;
    case YFamily::Bernoulli: {
      double p = expit(eta);
      return p * (1 - p);
    }
    case YFamily::Exponential: return 1.0 / (eta * eta);
  }
  return 0;
}

bool ResponseTable::natural_in_domain(double eta) const {
  return family_ != YFamily::Exponential || eta < 0;
}

// Canonical link g = (b')^{-1}.
double ResponseTable::link(double mu) const {
  switch (link_) {
    case Link::Inverse: return 1.0 / mu;
    case Link::Identity: return mu;
    case Link::Canonical:
      switch (family_) {
        case YFamily::Normal: return mu;
        case YFamily::Bernoulli: return logit(mu);
        case YFamily::Exponential: return -1.0 / mu;
      }
  }
  return 0;
}

double ResponseTable::link_d1(double mu) const {
  switch (link_) {
    case Link::Inverse: return -1.0 / (mu * mu);
    case Link::Identity: return 1.0;
    case Link::Canonical:
      switch (family_) {
        case YFamily::Normal: return 1.0;
        case YFamily::Bernoulli: return 1.0 / (mu * (1 - mu));
        case YFamily::Exponential: return 1.0 / (mu * mu);
      }
  }
  return 0;
}

bool ResponseTable::in_domain(double t) const {
  if (!std::isfinite(t)) return false;
  if (link_ == Link::Canonical) return family_ != YFamily::Exponential || t < 0;
  switch (family_) {
    case YFamily::Normal: return link_ == Link::Identity || t != 0;
    case YFamily::Bernoulli: return link_ == Link::Inverse ? t > 1 : (t > 0 && t < 1);
    case YFamily::Exponential: return t > 0;
  }
  return false;
}

double ResponseTable::natural(double t) const {
  if (!in_domain(t)) outside("linear predictor", t);
  if (link_ == Link::Canonical) return t;
  switch (family_) {
    case YFamily::Normal: return link_ == Link::Inverse ? 1.0 / t : t;
    case YFamily::Bernoulli: return link_ == Link::Inverse ? -std::log(t - 1) : logit(t);
    case YFamily::Exponential: return link_ == Link::Inverse ? -t : -1.0 / t;
  }
  return 0;
}

double ResponseTable::natural_d1(double t) const {
  if (!in_domain(t)) outside("linear predictor", t);
  if (link_ == Link::Canonical) return 1.0;
  switch (family_) {
    case YFamily::Normal: return link_ == Link::Inverse ? -1.0 / (t * t) : 1.0;
    case YFamily::Bernoulli: return link_ == Link::Inverse ? -1.0 / (t - 1) : 1.0 / (t * (1 - t));
    case YFamily::Exponential: return link_ == Link::Inverse ? -1.0 : 1.0 / (t * t);
  }
  return 0;
}

double ResponseTable::zeta(double t) const { return cumulant(natural(t)); }

double ResponseTable::zeta_d1(double t) const { return cumulant_d1(natural(t)) * natural_d1(t); }

CovariateTable::CovariateTable(XFamily family) : family_(family) {
  if (family == XFamily::MultivariateNormal || family == XFamily::Multinomial)
    throw ConfigError("CovariateTable covers univariate X families only");
}

double CovariateTable::cumulant(double eta) const {
  switch (family_) {
    case XFamily::Normal: return 0.5 * eta * eta;
    case XFamily::Bernoulli: return log1pexp(eta);
    case XFamily::Poisson: return std::exp(eta);
    case XFamily::Exponential:
      if (!(eta < 0)) outside("exponential natural parameter", eta);
      return -std::log(-eta);
    default: return 0;
  }
}

double CovariateTable::cumulant_d1(double eta) const {
  switch (family_) {
    case XFamily::Normal: return eta;
    case XFamily::Bernoulli: return expit(eta);
    case XFamily::Poisson: return std::exp(eta);
    case XFamily::Exponential: return -1.0 / eta;
    default: return 0;
  }
}

double CovariateTable::log_base(double x, double phi_x) const {
  switch (family_) {
    case XFamily::Normal: return -x * x / (2 * phi_x) - 0.5 * std::log(2 * M_PI * phi_x);
    case XFamily::Poisson: return -std::lgamma(x + 1);
    default: return 0.0;
  }
}

double CovariateTable::log_base_d_phi(double x, double phi_x) const {
  if (family_ == XFamily::Normal) return x * x / (2 * phi_x * phi_x) - 0.5 / phi_x;
  return 0.0;
}

bool CovariateTable::in_support(double x) const {
  switch (family_) {
    case XFamily::Bernoulli: return x == 0.0 || x == 1.0;
    case XFamily::Poisson: return x >= 0 && std::floor(x) == x;
    case XFamily::Exponential: return x >= 0;
    default: return std::isfinite(x);
  }
}

}  // namespace crisscross
