#pragma once

#include "crisscross/model.hpp"

namespace crisscross {

// Y|X exponential family under a link. t is the linear predictor alpha + beta'x,
// natural(t) = [g o mu]^{-1}(t) and zeta(t) = b(natural(t)).
class ResponseTable {
 public:
  ResponseTable(YFamily family, Link link);

  double cumulant(double eta) const;  // b
  double cumulant_d1(double eta) const;
  double cumulant_d2(double eta) const;
  double mean(double eta) const { return cumulant_d1(eta); }
  bool natural_in_domain(double eta) const;

  double link(double mu) const;  // g
  double link_d1(double mu) const;

  double natural(double t) const;
  double natural_d1(double t) const;
  double zeta(double t) const;
  double zeta_d1(double t) const;
  bool in_domain(double t) const;

  // Only the normal family carries a free dispersion parameter.
  bool free_dispersion() const { return family_ == YFamily::Normal; }
  YFamily family() const { return family_; }
  Link link_kind() const { return link_; }

 private:
  YFamily family_;
  Link link_;
};

// Univariate X family: p(x) = exp{(x eta - b_x(eta))/phi_x + c_x(x; phi_x)}.
class CovariateTable {
 public:
  explicit CovariateTable(XFamily family);

  double cumulant(double eta) const;  // b_x
  double cumulant_d1(double eta) const;
  double log_base(double x, double phi_x) const;     // c_x
  double log_base_d_phi(double x, double phi_x) const;  // d c_x / d phi_x
  bool free_dispersion() const { return family_ == XFamily::Normal; }
  bool in_support(double x) const;
  XFamily family() const { return family_; }

 private:
  XFamily family_;
};

}  // namespace crisscross
