#include "crisscross/identify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "crisscross/errors.hpp"
#include "crisscross/families.hpp"
#include "crisscross/quadrature.hpp"

namespace crisscross {

namespace {

bool univariate(XFamily f) { return f != XFamily::MultivariateNormal && f != XFamily::Multinomial; }

std::string indexed(const std::string& base, int i) { return base + "_" + std::to_string(i); }

// Multinomial reduction [I_{d-1}; -1'].
Eigen::MatrixXd reduction(int d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d - 1);
  m.topRows(d - 1).setIdentity();
  m.row(d - 1).setConstant(-1.0);
  return m;
}

double multinomial_log_base(const Eigen::VectorXd& x) {
  const double n = x.sum();
  double c = std::lgamma(n + 1);
  for (Eigen::Index j = 0; j < x.size(); ++j) c -= std::lgamma(x(j) + 1);
  return c;
}

void check_support(const ExpFamilySpec& spec, const TargetLawParams& theta,
                   const std::vector<Eigen::VectorXd>& support) {
  if (support.size() < 2) throw DomainError("need x_0 and at least one more support point");
  const int d = theta.dim();
  for (const auto& x : support)
    if (x.size() != d) throw DomainError("support point dimension does not match beta");
  for (std::size_t i = 0; i < support.size(); ++i)
    for (std::size_t j = i + 1; j < support.size(); ++j)
      if ((support[i] - support[j]).norm() == 0.0) throw DomainError("support points must be distinct");
  if (univariate(spec.family_x)) {
    CovariateTable tab(spec.family_x);
    for (const auto& x : support)
      if (!tab.in_support(x(0))) throw DomainError("support point outside the X family support");
  }
  if (spec.family_x == XFamily::Multinomial) {
    double n = support[0].sum();
    auto it = spec.known_nuisance.find("n_trials");
    if (it != spec.known_nuisance.end()) n = it->second;
    for (const auto& x : support) {
      if (std::abs(x.sum() - n) > 1e-12 || (x.array() < 0).any())
        throw DomainError("multinomial support points must be nonnegative counts summing to n_trials");
    }
  }
}

}  // namespace

std::vector<std::string> parameter_names(const ExpFamilySpec& spec, int d) {
  std::vector<std::string> names{"alpha"};
  if (d == 1) {
    names.push_back("beta");
  } else {
    for (int j = 1; j <= d; ++j) names.push_back(indexed("beta", j));
  }
  if (ResponseTable(spec.family_y_given_x, spec.link).free_dispersion()) names.push_back("phi");
  switch (spec.family_x) {
    case XFamily::Normal:
      names.push_back("eta_x");
      names.push_back("phi_x");
      break;
    case XFamily::MultivariateNormal:
      for (int j = 1; j <= d; ++j) names.push_back(indexed("mu", j));
      break;
    case XFamily::Multinomial:
      for (int j = 1; j < d; ++j) names.push_back(indexed("eta", j));
      break;
    default: names.push_back("eta_x");
  }
  return names;
}

Eigen::VectorXd pack_parameters(const ExpFamilySpec& spec, const TargetLawParams& theta) {
  const int d = theta.dim();
  std::vector<double> v{theta.alpha};
  for (int j = 0; j < d; ++j) v.push_back(theta.beta(j));
  if (ResponseTable(spec.family_y_given_x, spec.link).free_dispersion()) v.push_back(theta.phi);
  switch (spec.family_x) {
    case XFamily::Normal:
      v.push_back(theta.eta_x(0));
      v.push_back(theta.phi_x);
      break;
    case XFamily::MultivariateNormal:
      for (int j = 0; j < d; ++j) v.push_back(theta.mu_x(j));
      break;
    case XFamily::Multinomial:
      for (int j = 0; j < d - 1; ++j) v.push_back(theta.eta_x(j));
      break;
    default: v.push_back(theta.eta_x(0));
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

TargetLawParams unpack_parameters(const ExpFamilySpec& spec, const Eigen::VectorXd& packed,
                                  const TargetLawParams& base) {
  TargetLawParams t = base;
  const int d = base.dim();
  Eigen::Index k = 0;
  t.alpha = packed(k++);
  for (int j = 0; j < d; ++j) t.beta(j) = packed(k++);
  if (ResponseTable(spec.family_y_given_x, spec.link).free_dispersion()) t.phi = packed(k++);
  switch (spec.family_x) {
    case XFamily::Normal:
      t.eta_x(0) = packed(k++);
      t.phi_x = packed(k++);
      break;
    case XFamily::MultivariateNormal:
      for (int j = 0; j < d; ++j) t.mu_x(j) = packed(k++);
      break;
    case XFamily::Multinomial:
      for (int j = 0; j < d - 1; ++j) t.eta_x(j) = packed(k++);
      break;
    default: t.eta_x(0) = packed(k++);
  }
  if (k != packed.size()) throw DomainError("packed parameter vector has the wrong length");
  return t;
}

Eigen::VectorXd identified_functionals(const ExpFamilySpec& spec, const TargetLawParams& theta,
                                       const std::vector<Eigen::VectorXd>& support) {
  theta.validate(spec);
  check_support(spec, theta, support);
  ResponseTable rt(spec.family_y_given_x, spec.link);
  const double phi = rt.free_dispersion() ? theta.phi : 1.0;
  const int k = static_cast<int>(support.size()) - 1;
  const Eigen::VectorXd& x0 = support[0];
  const double t0 = theta.alpha + theta.beta.dot(x0);
  Eigen::VectorXd out(2 * k);
  for (int i = 1; i <= k; ++i) {
    const Eigen::VectorXd& xi = support[i];
    const double ti = theta.alpha + theta.beta.dot(xi);
    out(i - 1) = (rt.natural(ti) - rt.natural(t0)) / phi;
    double z = -(rt.zeta(ti) - rt.zeta(t0)) / phi;
    switch (spec.family_x) {
      case XFamily::MultivariateNormal: {
        Eigen::LLT<Eigen::MatrixXd> llt(theta.sigma_x);
        const Eigen::VectorXd di = xi - theta.mu_x, d0 = x0 - theta.mu_x;
        z += -0.5 * di.dot(llt.solve(di)) + 0.5 * d0.dot(llt.solve(d0));
        break;
      }
      case XFamily::Multinomial: {
        const int d = theta.dim();
        z += (xi - x0).dot(reduction(d) * theta.eta_x.head(d - 1));
        z += multinomial_log_base(xi) - multinomial_log_base(x0);
        break;
      }
      default: {
        CovariateTable ct(spec.family_x);
        const double phx = ct.free_dispersion() ? theta.phi_x : 1.0;
        z += theta.eta_x(0) * (xi(0) - x0(0)) / phx + ct.log_base(xi(0), phx) - ct.log_base(x0(0), phx);
      }
    }
    out(k + i - 1) = z;
  }
  return out;
}

JacobianReport build_jacobian(const ExpFamilySpec& spec, const TargetLawParams& theta,
                              const std::vector<Eigen::VectorXd>& support) {
  theta.validate(spec);
  check_support(spec, theta, support);
  ResponseTable rt(spec.family_y_given_x, spec.link);
  const bool free_phi = rt.free_dispersion();
  const double phi = free_phi ? theta.phi : 1.0;
  const int d = theta.dim();
  const int k = static_cast<int>(support.size()) - 1;

  JacobianReport rep;
  rep.param_names = parameter_names(spec, d);
  rep.support_points = support;
  rep.k = k;
  rep.equation_count = 2 * k;
  const int p = static_cast<int>(rep.param_names.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * k, p);

  const Eigen::VectorXd& x0 = support[0];
  const double t0 = theta.alpha + theta.beta.dot(x0);
  for (const auto& x : support) {
    const double t = theta.alpha + theta.beta.dot(x);
    if (!rt.in_domain(t))
      throw DomainError("support point hits a link singularity (linear predictor " + std::to_string(t) + ")");
  }
  const double n0 = rt.natural(t0), dn0 = rt.natural_d1(t0);
  const double z0 = rt.zeta(t0), dz0 = rt.zeta_d1(t0);

  Eigen::MatrixXd sigma_inv;
  if (spec.family_x == XFamily::MultivariateNormal) sigma_inv = theta.sigma_x.inverse();
  const int col_phi = 1 + d;
  const int col_x = col_phi + (free_phi ? 1 : 0);

  for (int i = 1; i <= k; ++i) {
    const Eigen::VectorXd& xi = support[i];
    const double ti = theta.alpha + theta.beta.dot(xi);
    const double ni = rt.natural(ti), dni = rt.natural_d1(ti);
    const double zi = rt.zeta(ti), dzi = rt.zeta_d1(ti);
    const int rp = i - 1, rz = k + i - 1;

    j(rp, 0) = (dni - dn0) / phi;
    j(rz, 0) = -(dzi - dz0) / phi;
    for (int c = 0; c < d; ++c) {
      j(rp, 1 + c) = (dni * xi(c) - dn0 * x0(c)) / phi;
      j(rz, 1 + c) = -(dzi * xi(c) - dz0 * x0(c)) / phi;
    }
    if (free_phi) {
      j(rp, col_phi) = -(ni - n0) / (phi * phi);
      j(rz, col_phi) = (zi - z0) / (phi * phi);
    }
    const Eigen::VectorXd dx = xi - x0;
    switch (spec.family_x) {
      case XFamily::MultivariateNormal:
        j.block(rz, col_x, 1, d) = (dx.transpose() * sigma_inv);
        break;
      case XFamily::Multinomial:
        j.block(rz, col_x, 1, d - 1) = dx.transpose() * reduction(d);
        break;
      default: {
        CovariateTable ct(spec.family_x);
        if (ct.free_dispersion()) {
          const double phx = theta.phi_x;
          j(rz, col_x) = dx(0) / phx;
          j(rz, col_x + 1) = -theta.eta_x(0) * dx(0) / (phx * phx) + ct.log_base_d_phi(xi(0), phx) -
                             ct.log_base_d_phi(x0(0), phx);
        } else {
          j(rz, col_x) = dx(0);
        }
      }
    }
  }
  rep.j_matrix = j;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  rep.singular_values = svd.singularValues();
  rep.numerical_rank = numerical_rank(j);
  rep.full_rank = rep.numerical_rank == p;
  return rep;
}

JacobianReport build_jacobian(const ExpFamilySpec& spec, const TargetLawParams& theta,
                              const std::vector<double>& support) {
  std::vector<Eigen::VectorXd> pts;
  for (double x : support) pts.push_back(Eigen::VectorXd::Constant(1, x));
  return build_jacobian(spec, theta, pts);
}

Eigen::Vector3d bivariate_functionals(const BivariateNormal& bn) {
  const auto c = bn.conditional();
  return {c.alpha, c.beta, c.sigma2};
}

JacobianReport build_jacobian_bivariate(const BivariateNormal& bn) {
  derive_conditional(bn.mu1, bn.mu2, bn.sigma1, bn.sigma2, bn.rho);  // validates
  const double m1 = bn.mu1, s1 = bn.sigma1, s2 = bn.sigma2, r = bn.rho;
  Eigen::MatrixXd j(3, 5);
  // intercept mu2 - r s2/s1 mu1
  j.row(0) << -r * s2 / s1, 1.0, r * s2 * m1 / (s1 * s1), -r * m1 / s1, -s2 * m1 / s1;
  // slope r s2/s1
  j.row(1) << 0.0, 0.0, -r * s2 / (s1 * s1), r / s1, s2 / s1;
  // variance (1 - r^2) s2^2
  j.row(2) << 0.0, 0.0, 0.0, 2 * (1 - r * r) * s2, -2 * r * s2 * s2;
  JacobianReport rep;
  rep.j_matrix = j;
  rep.param_names = {"mu1", "mu2", "sigma1", "sigma2", "rho"};
  rep.k = 0;
  rep.equation_count = 3;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  rep.singular_values = svd.singularValues();
  rep.numerical_rank = numerical_rank(j);
  rep.full_rank = rep.numerical_rank == 5;
  return rep;
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

std::vector<ParamSet> sufficient_sets(const Eigen::MatrixXd& j, const std::vector<std::string>& names,
                                      int max_set_size, double rel_tol) {
  const int p = static_cast<int>(names.size());
  if (j.cols() != p) throw DomainError("name count does not match Jacobian columns");
  // Work in name order so combinations come out lexicographically.
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return names[a] < names[b]; });

  std::vector<std::vector<int>> found;  // positions in `order`
  std::vector<ParamSet> out;
  const int max_size = std::min(max_set_size, p);
  for (int s = 0; s <= max_size; ++s) {
    std::vector<int> comb(s);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
      bool superset = false;
      for (const auto& f : found) {
        if (std::includes(comb.begin(), comb.end(), f.begin(), f.end())) {
          superset = true;
          break;
        }
      }
      if (!superset) {
        std::vector<bool> drop(p, false);
        for (int c : comb) drop[order[c]] = true;
        Eigen::MatrixXd sub(j.rows(), p - s);
        int col = 0;
        for (int c = 0; c < p; ++c)
          if (!drop[c]) sub.col(col++) = j.col(c);
        if (numerical_rank(sub, rel_tol) == p - s) {
          found.push_back(comb);
          ParamSet set;
          for (int c : comb) set.push_back(names[order[c]]);
          out.push_back(set);
        }
      }
      // next combination
      int i = s - 1;
      while (i >= 0 && comb[i] == p - s + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int t = i + 1; t < s; ++t) comb[t] = comb[t - 1] + 1;
    }
  }
  return out;
}

std::vector<ParamSet> sufficient_knowledge_search(const ExpFamilySpec& spec, const TargetLawParams& theta,
                                                  const std::vector<Eigen::VectorXd>& support,
                                                  int max_set_size) {
  auto rep = build_jacobian(spec, theta, support);
  return sufficient_sets(rep.j_matrix, rep.param_names, max_set_size);
}

std::vector<ParamSet> sufficient_knowledge_search(const BivariateNormal& bn, int max_set_size) {
  auto rep = build_jacobian_bivariate(bn);
  return sufficient_sets(rep.j_matrix, rep.param_names, max_set_size);
}

std::string to_string(Tristate t) {
  switch (t) {
    case Tristate::Yes: return "yes";
    case Tristate::Unknown: return "unknown";
    case Tristate::No: return "no";
  }
  return "?";
}

FullLawVerdict full_law_verdict(const ExpFamilySpec& spec) {
  const auto fx = spec.family_x;
  const auto fy = spec.family_y_given_x;
  const auto l = spec.link;
  const bool canonical_normal = fy == YFamily::Normal && (l == Link::Canonical || l == Link::Identity);
  FullLawVerdict v;
  auto yes = [&](const std::string& note) {
    v.exp_family_conditional = true;
    v.completeness_holds = Tristate::Yes;
    v.notes = note;
    return v;
  };
  auto unknown = [&](const std::string& note) {
    v.exp_family_conditional = false;
    v.completeness_holds = Tristate::Unknown;
    v.notes = note;
    return v;
  };
  if (canonical_normal) {
    switch (fx) {
      case XFamily::Normal: return yes("bivariate normal: X|Y normal, completeness holds");
      case XFamily::Bernoulli: return yes("Bernoulli X, normal Y|X: X|Y is Bernoulli");
      case XFamily::Poisson: return yes("Poisson X, normal Y|X: X|Y in the exponential family");
      case XFamily::Exponential: return yes("exponential X, normal Y|X: X|Y in the exponential family");
      case XFamily::MultivariateNormal: return yes("multivariate normal X: X|Y multivariate normal");
      case XFamily::Multinomial: return yes("multinomial X: X|Y multinomial");
    }
  }
  if (fx == XFamily::Bernoulli && fy == YFamily::Bernoulli)
    return yes("binary X and Y: X|Y is Bernoulli, completeness holds");
  if (fx == XFamily::Normal && fy == YFamily::Normal && l == Link::Inverse)
    return unknown("inverse-link normal: p(X|Y) not in the exponential family");
  if (fx == XFamily::Exponential && fy == YFamily::Exponential && l == Link::Canonical)
    return unknown("exponential-exponential: p(X|Y) not in the exponential family unless a and b are known");
  throw ConfigError("no full-law verdict for configuration (" + to_string(fx) + ", " + to_string(fy) + ", " +
                    to_string(l) + ")");
}

namespace {

std::vector<Eigen::VectorXd> points(std::initializer_list<double> xs) {
  std::vector<Eigen::VectorXd> out;
  for (double x : xs) out.push_back(Eigen::VectorXd::Constant(1, x));
  return out;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::string normalize_case(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), '.'), s.end());
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

}  // namespace

std::vector<std::string> builtin_case_names() {
  return {"C1", "C2", "C3", "C4", "C5", "C6", "C7", "MVN", "MULTINOMIAL"};
}

CaseConfig builtin_case(const std::string& raw) {
  const std::string name = normalize_case(raw);
  CaseConfig c;
  c.name = name;
  auto& t = c.theta;
  auto& s = c.spec;
  if (name == "C1") {
    c.bivariate = true;
    s = {XFamily::Normal, YFamily::Normal, Link::Canonical, {}};
    c.max_set_size = 2;
  } else if (name == "C2") {
    s = {XFamily::Normal, YFamily::Normal, Link::Inverse, {}};
    t.alpha = 1.0, t.beta = vec({0.5}), t.phi = 1.0, t.eta_x = vec({0.5}), t.phi_x = 1.5;
    c.support = points({0.0, 0.5, 1.0, 1.5, 2.0});
  } else if (name == "C3") {
    s = {XFamily::Bernoulli, YFamily::Bernoulli, Link::Identity, {}};
    t.alpha = 0.2, t.beta = vec({0.3}), t.eta_x = vec({0.3});
    c.support = points({0.0, 1.0});
  } else if (name == "C4") {
    s = {XFamily::Bernoulli, YFamily::Normal, Link::Canonical, {}};
    t.alpha = 0.5, t.beta = vec({1.2}), t.phi = 1.3, t.eta_x = vec({0.2});
    c.support = points({0.0, 1.0});
  } else if (name == "C5") {
    s = {XFamily::Poisson, YFamily::Normal, Link::Canonical, {}};
    t.alpha = 0.5, t.beta = vec({0.8}), t.phi = 1.2, t.eta_x = vec({std::log(2.0)});
    c.support = points({0.0, 1.0, 2.0, 3.0});
  } else if (name == "C6") {
    s = {XFamily::Exponential, YFamily::Normal, Link::Canonical, {}};
    t.alpha = 0.5, t.beta = vec({0.8}), t.phi = 1.2, t.eta_x = vec({-1.0});
    c.support = points({0.5, 1.0, 2.0, 3.0});
  } else if (name == "C7") {
    s = {XFamily::Exponential, YFamily::Exponential, Link::Canonical, {}};
    t.alpha = -1.0, t.beta = vec({-0.5}), t.eta_x = vec({-1.0});
    c.support = points({0.0, 1.0, 2.0, 3.0});
  } else if (name == "MVN") {
    s = {XFamily::MultivariateNormal, YFamily::Normal, Link::Canonical, {}};
    t.alpha = 0.3, t.beta = vec({0.7, -0.4}), t.phi = 1.0;
    t.mu_x = vec({0.5, -0.2});
    t.sigma_x = Eigen::MatrixXd(2, 2);
    t.sigma_x << 1.0, 0.3, 0.3, 2.0;
    c.support = {vec({0, 0}), vec({1, 0}), vec({0, 1}), vec({1, 1}), vec({2, -1}), vec({-1, 2})};
  } else if (name == "MULTINOMIAL") {
    s = {XFamily::Multinomial, YFamily::Normal, Link::Canonical, {{"n_trials", 4.0}}};
    t.alpha = 0.2, t.beta = vec({0.5, -0.3, 0.1}), t.phi = 1.0;
    t.eta_x = vec({std::log(0.2), std::log(0.3), std::log(0.5)});
    c.support = {vec({4, 0, 0}), vec({0, 4, 0}), vec({0, 0, 4}), vec({2, 1, 1}), vec({1, 2, 1}),
                 vec({1, 1, 2}), vec({2, 2, 0})};
  } else {
    throw ConfigError("unknown built-in configuration '" + raw + "'");
  }
  return c;
}

JacobianReport analyze_case(const CaseConfig& c) {
  JacobianReport rep = c.bivariate ? build_jacobian_bivariate(c.bn) : build_jacobian(c.spec, c.theta, c.support);
  rep.sufficient_sets = sufficient_sets(rep.j_matrix, rep.param_names, c.max_set_size);
  return rep;
}

std::string to_string(CounterexampleVariant v) {
  switch (v) {
    case CounterexampleVariant::Corrected: return "corrected";
    case CounterexampleVariant::DisplayedDensity: return "displayed_density";
    case CounterexampleVariant::DisplayedCdf: return "displayed_cdf";
  }
  return "?";
}

CounterexampleVariant parse_counterexample_variant(const std::string& s) {
  for (auto v : {CounterexampleVariant::Corrected, CounterexampleVariant::DisplayedDensity,
                 CounterexampleVariant::DisplayedCdf})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown counterexample variant '" + s + "'");
}

namespace {

double npdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI); }
double ncdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }
double normal_density(double x, double mean, double var) { return npdf((x - mean) / std::sqrt(var)) / std::sqrt(var); }

// The two full laws. p(x|y) = N(y, 1) in both.
struct CounterModel {
  int which;
  CounterexampleVariant variant;

  double py(double y) const { return which == 1 ? normal_density(y, 1, 1) : normal_density(y, 1, 1.2); }
  double prx(double y) const {
    const double s = std::sqrt(5.0 / 6.0), e = std::exp(-(y - 1) * (y - 1) / 12);
    return which == 1 ? s / (s + e) : e / (s + e);
  }
  double ry_observed_x(double x) const {
    return variant == CounterexampleVariant::DisplayedCdf ? ncdf(x) : npdf(x);
  }
  double ry_missing_x(double x) const {
    if (which == 1) {
      const double z = (x - 5) / std::sqrt(5.0);
      switch (variant) {
        case CounterexampleVariant::Corrected: return npdf(z) / std::sqrt(5.0);
        case CounterexampleVariant::DisplayedDensity: return npdf(z);
        case CounterexampleVariant::DisplayedCdf: return ncdf(z);
      }
    }
    double c = std::exp(-8.0 / 9.0) * std::sqrt(2.0 / 5.0);
    if (variant == CounterexampleVariant::Corrected) c *= std::sqrt(6.0 / 5.0);
    return variant == CounterexampleVariant::DisplayedCdf ? c * ncdf(x - 7.0 / 3.0) : c * npdf(x - 7.0 / 3.0);
  }
};

}  // namespace

CounterexampleReport verify_counterexample(const CounterexampleOptions& o) {
  if (!(o.step > 0) || !(o.hi > o.lo)) throw ConfigError("invalid counterexample grid");
  if (o.lo > -8 || o.hi < 10 || o.step > 0.05)
    throw ConfigError("counterexample grid must cover [-8, 10] with step <= 0.05");
  const CounterModel m1{1, o.variant}, m2{2, o.variant};
  const double tol = o.quad_tol;
  const double ylo = o.lo - o.integration_margin, yhi = o.hi + o.integration_margin;

  // int N(x; y, 1) g(x) dx
  auto smooth_x = [&](const std::function<double(double)>& g, double y) {
    return adaptive_simpson([&](double x) { return normal_density(x, y, 1) * g(x); }, y - 10, y + 10, tol);
  };

  std::vector<double> grid;
  for (double v = o.lo; v <= o.hi + 1e-12; v += o.step) grid.push_back(v);

  CounterexampleReport r;
  r.variant = o.variant;
  r.grid_points = static_cast<int>(grid.size());
  double d11 = 0, d10 = 0, d01 = 0;
  for (double y : grid) {
    for (double x : grid) {
      auto f = [&](const CounterModel& m) { return m.py(y) * normal_density(x, y, 1) * m.prx(y) * m.ry_observed_x(x); };
      d11 = std::max(d11, std::abs(f(m1) - f(m2)));
    }
  }
  for (double x : grid) {
    auto g = [&](const CounterModel& m) {
      return (1 - m.ry_observed_x(x)) *
             adaptive_simpson([&](double y) { return m.py(y) * normal_density(x, y, 1) * m.prx(y); }, ylo, yhi, tol);
    };
    d10 = std::max(d10, std::abs(g(m1) - g(m2)));
  }
  for (double y : grid) {
    auto k = [&](const CounterModel& m) {
      return m.py(y) * (1 - m.prx(y)) * smooth_x([&](double x) { return m.ry_missing_x(x); }, y);
    };
    d01 = std::max(d01, std::abs(k(m1) - k(m2)));
  }
  for (int w = 0; w < 2; ++w) {
    const CounterModel& m = w == 0 ? m1 : m2;
    const double mass00 = adaptive_simpson(
        [&](double y) {
          return m.py(y) * (1 - m.prx(y)) * (1 - smooth_x([&](double x) { return m.ry_missing_x(x); }, y));
        },
        ylo, yhi, tol);
    const double mass01 = adaptive_simpson(
        [&](double y) { return m.py(y) * (1 - m.prx(y)) * smooth_x([&](double x) { return m.ry_missing_x(x); }, y); },
        ylo, yhi, tol);
    const double mass1 = adaptive_simpson([&](double y) { return m.py(y) * m.prx(y); }, ylo, yhi, tol);
    r.pattern00_mass[w] = mass00;
    r.total_mass[w] = mass00 + mass01 + mass1;
    const double mean = adaptive_simpson([&](double y) { return y * m.py(y); }, ylo, yhi, tol);
    r.variance_y[w] = adaptive_simpson([&](double y) { return (y - mean) * (y - mean) * m.py(y); }, ylo, yhi, tol);
  }
  r.max_abs_discrepancy = {d11, d10, d01, std::abs(r.pattern00_mass[0] - r.pattern00_mass[1])};
  return r;
}

}  // namespace crisscross
