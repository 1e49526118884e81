#include "crisscross/gee.hpp"

#include <cmath>
#include <limits>

#include "crisscross/errors.hpp"
#include "crisscross/logistic.hpp"
#include "crisscross/quadrature.hpp"

namespace crisscross {

double PropensityModel::operator()(double x) const {
  if (known) return known(x);
  if (!fitted) throw NumericalError("propensity model has no finite fit");
  double t = coef(0) + coef(1) * x;
  if (quadratic) t += coef(2) * x * x;
  return expit(t);
}

PropensityModel PropensityModel::constant(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("constant propensity must lie in (0, 1]");
  return from_function([p](double) { return p; });
}

PropensityModel PropensityModel::from_function(std::function<double(double)> fn) {
  PropensityModel m;
  m.known = std::move(fn);
  m.fitted = true;
  m.converged = true;
  return m;
}

PropensityModel PropensityModel::from_coefficients(const Eigen::VectorXd& coef) {
  if (coef.size() != 2 && coef.size() != 3) throw DomainError("propensity needs 2 or 3 coefficients");
  PropensityModel m;
  m.coef = coef;
  m.quadratic = coef.size() == 3;
  m.fitted = true;
  m.converged = true;
  return m;
}

PropensityModel fit_propensity(const ObservedDataset& data, bool quadratic) {
  std::vector<double> xs, rs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.r_x[i]) continue;
    xs.push_back(data.x[i]);
    rs.push_back(data.r_y[i]);
  }
  if (xs.empty()) throw DataError("no rows with x observed: cannot fit the propensity");
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const int p = quadratic ? 3 : 2;
  PropensityModel m;
  m.quadratic = quadratic;
  m.coef = Eigen::VectorXd::Zero(p);

  bool constant_x = true;
  for (double x : xs) constant_x = constant_x && x == xs[0];
  Eigen::MatrixXd design(n, constant_x ? 1 : p);
  Eigen::VectorXd resp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    if (!constant_x) {
      design(i, 1) = xs[i];
      if (quadratic) design(i, 2) = xs[i] * xs[i];
    }
    resp(i) = rs[i];
  }
  LogisticFit fit = fit_logistic(design, resp);
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  m.separation = fit.separation;
  m.fitted = fit.converged && !fit.separation;
  if (m.fitted) m.coef.head(fit.coef.size()) = fit.coef;
  return m;
}

MeanModel MeanModel::normal_linear(std::optional<double> alpha_known, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  MeanModel m;
  m.kind = MeanKind::NormalLinear;
  m.sigma2 = sigma2;
  if (alpha_known) m.known["alpha"] = *alpha_known;
  return m;
}

MeanModel MeanModel::binary_2x2(double theta11) {
  if (!(theta11 > 0.0 && theta11 < 1.0)) throw DomainError("theta11 must lie in (0, 1)");
  MeanModel m;
  m.kind = MeanKind::Binary2x2;
  m.known["theta11"] = theta11;
  return m;
}

int MeanModel::dim() const {
  if (kind == MeanKind::Binary2x2) return 2;
  return known.count("alpha") ? 1 : 2;
}

std::vector<std::string> MeanModel::free_names() const {
  if (kind == MeanKind::Binary2x2) return {"g21", "g22"};
  if (known.count("alpha")) return {"beta"};
  return {"alpha", "beta"};
}

std::array<double, 4> MeanModel::cells(const Eigen::VectorXd& th) const {
  if (kind != MeanKind::Binary2x2) throw ConfigError("cells() needs a Binary2x2 model");
  const double t11 = known.at("theta11"), s = 1.0 - t11;
  const double e1 = std::exp(th(0)), e2 = std::exp(th(1)), den = 1.0 + e1 + e2;
  return {t11, s / den, s * e1 / den, s * e2 / den};
}

Eigen::VectorXd MeanModel::free_from_cells(const std::array<double, 4>& c) const {
  Eigen::VectorXd th(2);
  th << std::log(c[2] / c[1]), std::log(c[3] / c[1]);
  return th;
}

namespace {

int binary_level(double v) {
  if (v == 1.0) return 1;
  if (v == 2.0) return 2;
  throw DataError("binary model needs values coded 1 or 2, got " + std::to_string(v));
}

}  // namespace

double MeanModel::h(double y, const Eigen::VectorXd& th) const {
  if (th.size() != dim()) throw DomainError("theta has the wrong dimension for the mean model");
  if (kind == MeanKind::NormalLinear) {
    auto it = known.find("alpha");
    return it != known.end() ? it->second + th(0) * y : th(0) + th(1) * y;
  }
  const auto c = cells(th);
  return binary_level(y) == 1 ? 1.0 + c[2] / (c[0] + c[2]) : 1.0 + c[3] / (c[1] + c[3]);
}

Eigen::VectorXd MeanModel::a(double y, const Eigen::VectorXd& th) const {
  if (th.size() != dim()) throw DomainError("theta has the wrong dimension for the mean model");
  Eigen::VectorXd out(dim());
  if (kind == MeanKind::NormalLinear) {
    if (known.count("alpha")) {
      out << y;
    } else {
      out << 1.0, y;
    }
    return out;
  }
  const auto c = cells(th);
  const double t11 = c[0], t12 = c[1], t21 = c[2], t22 = c[3], s = 1.0 - t11;
  Eigen::Vector2d d21(t21 * (1 - t21 / s), -t21 * t22 / s);
  Eigen::Vector2d d22(-t21 * t22 / s, t22 * (1 - t22 / s));
  Eigen::Vector2d d12(-t12 * t21 / s, -t12 * t22 / s);
  if (binary_level(y) == 1) {
    const double q = t11 + t21;
    out = t11 / (q * q) * d21;
  } else {
    const double q = t12 + t22;
    out = t12 / (q * q) * d22 - t22 / (q * q) * d12;
  }
  return out;
}

WeightFunction WeightFunction::non_optimal() {
  WeightFunction w;
  w.kind_ = WeightKind::NonOptimal;
  return w;
}

WeightFunction WeightFunction::polynomial(const Eigen::MatrixXd& coef) {
  if (coef.rows() < 1 || coef.cols() < 1) throw ConfigError("empty polynomial weight");
  WeightFunction w;
  w.kind_ = WeightKind::Polynomial;
  w.poly_ = coef;
  return w;
}

WeightFunction WeightFunction::optimal(const MeanModel& model, const PropensityModel& pi,
                                       const Eigen::VectorXd& pilot) {
  if (pilot.size() != model.dim()) throw DomainError("pilot has the wrong dimension");
  if (!pilot.allFinite()) throw DomainError("pilot estimate is not finite");
  WeightFunction w;
  w.kind_ = WeightKind::Optimal;
  w.model_ = model;
  w.pi_ = pi;
  w.pilot_ = pilot;
  return w;
}

WeightFunction WeightFunction::scaled(const Eigen::MatrixXd& m) const {
  WeightFunction w = *this;
  w.transform_ = transform_ ? Eigen::MatrixXd(m * *transform_) : m;
  return w;
}

double WeightFunction::inner_expectation(double y) const {
  if (kind_ != WeightKind::Optimal) throw ConfigError("inner expectation is defined for the optimal weight");
  const double h = model_.h(y, pilot_);
  double b;
  if (model_.kind == MeanKind::NormalLinear) {
    b = normal_expectation([&](double x) { return (x - h) * (x - h) / pi_(x); }, h, std::sqrt(model_.sigma2), 64);
  } else {
    const double p2 = h - 1.0;  // p(X=2 | y)
    b = (1 - p2) * (1 - h) * (1 - h) / pi_(1.0) + p2 * (2 - h) * (2 - h) / pi_(2.0);
  }
  if (!(b > 0.0) || !std::isfinite(b))
    throw NumericalError("optimal weight: nonpositive inner expectation at y = " + std::to_string(y));
  return b;
}

Eigen::VectorXd WeightFunction::operator()(double y) const {
  Eigen::VectorXd f;
  switch (kind_) {
    case WeightKind::NonOptimal:
      f.resize(2);
      f << 1.0, y;
      break;
    case WeightKind::Polynomial: {
      f = Eigen::VectorXd::Zero(poly_.rows());
      double pw = 1.0;
      for (Eigen::Index k = 0; k < poly_.cols(); ++k, pw *= y) f += poly_.col(k) * pw;
      break;
    }
    case WeightKind::Optimal:
      f = model_.a(y, pilot_) / inner_expectation(y);
      break;
  }
  if (transform_) f = *transform_ * f;
  return f;
}

WeightFunction optimal_f(const ObservedDataset& data, const MeanModel& model, const PropensityModel& pi,
                         const Eigen::VectorXd& theta_pilot) {
  data.validate();
  return WeightFunction::optimal(model, pi, theta_pilot);
}

namespace {

// Complete cases with 1/pi weights and f evaluated once.
struct Prepared {
  std::vector<double> x, y, w;
  std::vector<Eigen::VectorXd> f;
  double n_total = 0;
  int m = 0;
};

Prepared prepare(const ObservedDataset& data, const PropensityModel& pi, const WeightFunction& f) {
  data.validate();
  Prepared p;
  p.n_total = static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.complete(i)) continue;
    const double pr = pi(data.x[i]);
    if (!(pr >= kPropensityFloor))
      throw NumericalError("propensity " + std::to_string(pr) + " below floor 1e-6 at row " + std::to_string(i + 1));
    p.x.push_back(data.x[i]);
    p.y.push_back(data.y[i]);
    p.w.push_back(1.0 / pr);
    p.f.push_back(f(data.y[i]));
  }
  if (p.x.empty()) throw DataError("no complete cases: the estimating equation is empty");
  p.m = static_cast<int>(p.f[0].size());
  return p;
}

Eigen::VectorXd residual(const Prepared& p, const MeanModel& model, const Eigen::VectorXd& th) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p.m);
  for (std::size_t i = 0; i < p.x.size(); ++i) u += p.w[i] * (p.x[i] - model.h(p.y[i], th)) * p.f[i];
  return u / p.n_total;
}

// E[w f a'] (m x dim); the derivative of the residual is its negative.
Eigen::MatrixXd c_matrix(const Prepared& p, const MeanModel& model, const Eigen::VectorXd& th) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p.m, model.dim());
  for (std::size_t i = 0; i < p.x.size(); ++i) c += p.w[i] * p.f[i] * model.a(p.y[i], th).transpose();
  return c / p.n_total;
}

SandwichResult sandwich(const Prepared& p, const MeanModel& model, const Eigen::VectorXd& th) {
  SandwichResult s;
  s.c_hat = c_matrix(p, model, th);
  s.d_hat = Eigen::MatrixXd::Zero(p.m, p.m);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double r = p.w[i] * (p.x[i] - model.h(p.y[i], th));
    s.d_hat += r * r * p.f[i] * p.f[i].transpose();
  }
  s.d_hat /= p.n_total;
  if (p.m == model.dim()) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s.c_hat);
    if (!lu.isInvertible()) throw NumericalError("sandwich: C is singular");
    const Eigen::MatrixXd ci = lu.inverse();
    s.cov = ci * s.d_hat * ci.transpose();
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s.c_hat.transpose() * s.c_hat);
    if (!lu.isInvertible()) throw NumericalError("sandwich: C'C is singular");
    const Eigen::MatrixXd bread = lu.inverse();
    s.cov = bread * s.c_hat.transpose() * s.d_hat * s.c_hat * bread;
  }
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  return s;
}

Eigen::VectorXd closed_form(const Prepared& p, const MeanModel& model) {
  if (model.kind != MeanKind::NormalLinear) throw ConfigError("closed form exists for NormalLinear only");
  const int dim = model.dim();
  auto it = model.known.find("alpha");
  const double alpha = it != model.known.end() ? it->second : 0.0;
  Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(p.m, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p.m);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    Eigen::VectorXd a(dim);
    if (dim == 1) {
      a << p.y[i];
    } else {
      a << 1.0, p.y[i];
    }
    mm += p.w[i] * p.f[i] * a.transpose();
    b += p.w[i] * (p.x[i] - alpha) * p.f[i];
  }
  if (p.m == dim) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mm);
    if (!lu.isInvertible()) throw NumericalError("closed form: singular system");
    return lu.solve(b);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(mm.transpose() * mm);
  if (!lu.isInvertible()) throw NumericalError("closed form: singular normal equations");
  return lu.solve(mm.transpose() * b);
}

}  // namespace

Eigen::VectorXd gee_residual(const ObservedDataset& data, const MeanModel& model, const PropensityModel& pi,
                             const WeightFunction& f, const Eigen::VectorXd& theta) {
  return residual(prepare(data, pi, f), model, theta);
}

SandwichResult sandwich_gee(const ObservedDataset& data, const MeanModel& model, const PropensityModel& pi,
                            const WeightFunction& f, const Eigen::VectorXd& theta_hat) {
  if (!theta_hat.allFinite()) throw DomainError("theta_hat must be finite");
  return sandwich(prepare(data, pi, f), model, theta_hat);
}

Eigen::VectorXd normal_linear_closed_form(const ObservedDataset& data, const MeanModel& model,
                                          const PropensityModel& pi, const WeightFunction& f) {
  return closed_form(prepare(data, pi, f), model);
}

Eigen::VectorXd GeeResult::se() const {
  return (sandwich_cov.diagonal() / static_cast<double>(n_total)).cwiseSqrt();
}

GeeResult solve_gee(const ObservedDataset& data, const MeanModel& model, const PropensityModel& pi,
                    const WeightFunction& f, std::optional<Eigen::VectorXd> start) {
  const Prepared p = prepare(data, pi, f);
  const int dim = model.dim();
  if (p.m < dim) throw ConfigError("weight function has fewer equations than free parameters");
  const bool over = p.m > dim;

  Eigen::VectorXd th;
  if (start) {
    th = *start;
  } else if (model.kind == MeanKind::NormalLinear) {
    th = closed_form(p, model);
  } else {
    th = Eigen::VectorXd::Zero(dim);
  }
  if (th.size() != dim) throw DomainError("start has the wrong dimension");

  GeeResult r;
  r.overidentified = over;
  r.names = model.free_names();
  r.n_total = data.size();
  r.n_complete = p.x.size();

  Eigen::VectorXd u = residual(p, model, th);
  auto merit = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  for (int it = 0; it < 100; ++it) {
    r.iterations = it;
    const Eigen::MatrixXd g = -c_matrix(p, model, th);
    const Eigen::VectorXd grad = g.transpose() * u;
    if ((!over && u.cwiseAbs().maxCoeff() <= 1e-12) || (over && grad.cwiseAbs().maxCoeff() <= 1e-14)) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd step;
    if (!over) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
      if (!lu.isInvertible()) throw NumericalError("GEE Jacobian is singular");
      step = -lu.solve(u);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(g.transpose() * g);
      if (!lu.isInvertible()) throw NumericalError("GEE Gauss-Newton matrix is singular");
      step = -lu.solve(grad);
    }
    // A negligible Newton step means the residual is at rounding level.
    if (step.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + th.cwiseAbs().maxCoeff())) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd cand = th + step;
    Eigen::VectorXd uc = residual(p, model, cand);
    int halvings = 0;
    while (!(merit(uc) <= merit(u)) && halvings < 40) {
      step *= 0.5;
      cand = th + step;
      uc = residual(p, model, cand);
      ++halvings;
    }
    if (!(merit(uc) <= merit(u))) break;
    const bool tiny = step.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + th.cwiseAbs().maxCoeff());
    th = cand;
    u = uc;
    if (tiny) {
      r.converged = true;
      r.iterations = it + 1;
      break;
    }
  }
  if (!r.converged) throw NumericalError("GEE did not converge in 100 iterations");
  r.theta_hat = th;
  r.residual_norm = u.norm();
  const SandwichResult s = sandwich(p, model, th);
  r.c_hat = s.c_hat;
  r.d_hat = s.d_hat;
  r.sandwich_cov = s.cov;
  return r;
}

Binary2x2Result estimate_binary_2x2(const ObservedDataset& data, double theta11_known, const PropensityModel& pi,
                                    WeightKind f) {
  const MeanModel model = MeanModel::binary_2x2(theta11_known);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.r_x[i]) binary_level(data.x[i]);
    if (data.r_y[i]) binary_level(data.y[i]);
  }
  // Start from complete-case conditional frequencies when they give valid cells.
  Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
  {
    double n1 = 0, x1 = 0, n2 = 0, x2 = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!data.complete(i)) continue;
      if (data.y[i] == 1.0) {
        n1 += 1;
        x1 += data.x[i] == 2.0;
      } else {
        n2 += 1;
        x2 += data.x[i] == 2.0;
      }
    }
    const double s = 1.0 - theta11_known;
    if (n1 > 0 && n2 > 0 && x1 > 0 && x1 < n1 && x2 > 0 && x2 < n2) {
      const double m1 = x1 / n1, m2 = x2 / n2;
      const double t21 = theta11_known * m1 / (1 - m1);
      if (t21 < s) {
        const double rest = s - t21;
        start = model.free_from_cells({theta11_known, rest * (1 - m2), t21, rest * m2});
      }
    }
  }
  WeightFunction w = WeightFunction::non_optimal();
  GeeResult g = solve_gee(data, model, pi, w, start);
  if (f == WeightKind::Optimal) {
    w = WeightFunction::optimal(model, pi, g.theta_hat);
    g = solve_gee(data, model, pi, w, g.theta_hat);
  } else if (f == WeightKind::Polynomial) {
    throw ConfigError("binary 2x2 supports the non-optimal and optimal weights");
  }
  Binary2x2Result r;
  r.gee = g;
  r.cells = model.cells(g.theta_hat);
  const double s = 1.0 - theta11_known;
  r.log_or = std::log(r.cells[0]) + std::log(r.cells[3]) - std::log(r.cells[1]) - std::log(r.cells[2]);
  Eigen::Vector2d grad(-1.0 + r.cells[2] / s, 1.0 + r.cells[3] / s);
  r.log_or_se = std::sqrt(grad.dot(g.sandwich_cov * grad) / static_cast<double>(g.n_total));
  r.cells_valid = g.converged;
  for (double c : r.cells) r.cells_valid = r.cells_valid && c > 0.0 && c < 1.0;
  return r;
}

AipwResult aipw_permutation(const ObservedDataset& data, const std::function<double(double, double)>& h_fn,
                            const AipwNuisance& nu) {
  data.validate();
  const std::size_t n = data.size();
  if (n == 0) throw DataError("empty dataset");
  if (!nu.prob_rx_given_y || !nu.prob_ry || !nu.mean_h_given_y || !nu.mean_phi)
    throw ConfigError("all four nuisance functions are required");
  auto floor_check = [](double p, std::size_t i, const char* what) {
    if (!(p >= kPropensityFloor))
      throw NumericalError(std::string(what) + " below floor 1e-6 at row " + std::to_string(i + 1));
    return p;
  };
  AipwResult r;
  std::vector<double> eif(n), ipw(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int rx = data.r_x[i];
    const double x = rx ? data.x[i] : std::numeric_limits<double>::quiet_NaN();
    const double m = nu.mean_phi(rx, x);
    if (!data.r_y[i]) {
      eif[i] = m;
      continue;
    }
    const double y = data.y[i];
    const double g = nu.mean_h_given_y(y);
    double phi = g;
    if (rx) {
      const double px = floor_check(nu.prob_rx_given_y(y), i, "p(R_x=1|y)");
      const double h = h_fn(x, y);
      phi = (h - g) / px + g;
      const double py1 = floor_check(nu.prob_ry(1, x), i, "p(R_y=1|R_x=1,x)");
      ipw[i] = h / (px * py1);
    }
    const double py = floor_check(nu.prob_ry(rx, x), i, "p(R_y=1|R_x,x*)");
    eif[i] = (phi - m) / py + m;
  }
  auto mean_sd = [](const std::vector<double>& v, double& mean) {
    double s = 0.0;
    for (double e : v) s += e;
    mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  };
  const double sd = mean_sd(eif, r.beta_h_hat);
  const double sd_ipw = mean_sd(ipw, r.ipw_hat);
  r.se = sd / std::sqrt(static_cast<double>(n));
  r.ipw_se = sd_ipw / std::sqrt(static_cast<double>(n));
  r.influence.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.influence[i] = eif[i] - r.beta_h_hat;
  return r;
}

}  // namespace crisscross
