#include "crisscross/pseudolik.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "crisscross/errors.hpp"
#include "crisscross/rng.hpp"

namespace crisscross {

namespace {

double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

constexpr double kScoreTol = 1e-8;
constexpr int kMaxIter = 100;

struct Eval {
  double value, score, hessian;
};

// Newton ascent from 0 with step halving; the objective is concave in theta.
// Convergence is judged on the score divided by `scale` (pair or group count).
template <class F>
PseudoLikResult newton_ascent(F&& eval, double scale) {
  PseudoLikResult r;
  double theta = 0.0;
  Eval e = eval(theta);
  for (int it = 0; it <= kMaxIter; ++it) {
    r.iterations = it;
    if (std::abs(e.score) / scale <= kScoreTol) {
      r.converged = true;
      break;
    }
    if (it == kMaxIter) break;
    if (!(e.hessian < 0.0)) throw NumericalError("pseudo-likelihood Hessian is not negative");
    double step = -e.score / e.hessian;
    if (std::abs(step) <= 1e-13 * (1.0 + std::abs(theta))) {
      r.converged = true;
      break;
    }
    Eval next = eval(theta + step);
    // Near the optimum the gain drops below the rounding of a large sum.
    const double slack = 1e-12 * (1.0 + std::abs(e.value));
    int halvings = 0;
    while (!(next.value >= e.value - slack) && halvings < 60) {
      step *= 0.5;
      next = eval(theta + step);
      ++halvings;
    }
    if (!(next.value >= e.value - slack)) break;
    theta += step;
    e = next;
  }
  r.theta_hat = theta;
  r.score = e.score / scale;
  r.loglik = e.value;
  return r;
}

void check_separation(const PairDesign& d) {
  bool any_concordant = false, any_discordant = false;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d.v[j] == 0.0) continue;
    const bool agrees = (d.u[j] == 1) == (d.v[j] > 0);
    (agrees ? any_concordant : any_discordant) = true;
  }
  if (any_concordant && !any_discordant)
    throw NumericalError("separation: every pair is concordant, the estimate diverges to +infinity");
  if (any_discordant && !any_concordant)
    throw NumericalError("separation: every pair is discordant, the estimate diverges to -infinity");
}

}  // namespace

double PseudoLikResult::se() const {
  if (n_total == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(sandwich_var / static_cast<double>(n_total));
}

PairDesign build_pairs(const ObservedDataset& data) {
  auto [x, y] = data.complete_cases();
  const std::size_t n = x.size();
  if (n < 2) throw DataError("pseudo-likelihood needs at least 2 complete cases");
  PairDesign d;
  d.n_complete = n;
  d.n_total = data.size();
  const std::size_t total = n * (n - 1) / 2;
  d.u.reserve(total);
  d.v.reserve(total);
  d.pair_index.reserve(total);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      const double dy = y[i] - y[k];
      if (dy == 0.0) {
        ++d.ties_dropped;
        continue;
      }
      d.u.push_back(dy > 0);
      d.v.push_back((x[i] - x[k]) * std::abs(dy));
      d.pair_index.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k));
    }
  }
  return d;
}

double pairwise_loglik(const PairDesign& design, double theta, double* score, double* hessian) {
  double ll = 0.0, sc = 0.0, h = 0.0;
  const std::size_t m = design.size();
  const std::uint8_t* u = design.u.data();
  const double* v = design.v.data();
  for (std::size_t j = 0; j < m; ++j) {
    const double t = theta * v[j];
    // p = expit(t); contribution log p if u else log(1 - p)
    double p;
    if (t >= 0) {
      const double e = std::exp(-t);
      p = 1.0 / (1.0 + e);
      ll -= u[j] ? std::log1p(e) : t + std::log1p(e);
    } else {
      const double e = std::exp(t);
      p = e / (1.0 + e);
      ll -= u[j] ? -t + std::log1p(e) : std::log1p(e);
    }
    sc += (u[j] - p) * v[j];
    h -= p * (1 - p) * v[j] * v[j];
  }
  if (score) *score = sc;
  if (hessian) *hessian = h;
  return ll;
}

PseudoLikResult fit_pairwise(const PairDesign& design) {
  if (design.size() == 0) throw DataError("empty pair design (no complete-case pairs, or all tied in y)");
  if (std::all_of(design.v.begin(), design.v.end(), [](double v) { return v == 0.0; }))
    throw DataError("pair design has v identically zero (no variation in x)");
  check_separation(design);
  auto eval = [&](double th) {
    Eval e{};
    e.value = pairwise_loglik(design, th, &e.score, &e.hessian);
    return e;
  };
  PseudoLikResult r = newton_ascent(eval, static_cast<double>(design.size()));
  r.n_complete = design.n_complete;
  r.n_total = design.n_total;
  r.ties_dropped = design.ties_dropped;
  r.group_size = 2;
  return r;
}

namespace {

std::vector<std::vector<int>> permutations(int g) {
  std::vector<int> p(g);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

template <class Visit>
void for_each_group(std::size_t n, int g, Visit&& visit) {
  std::array<std::size_t, 4> idx{};
  for (int j = 0; j < g; ++j) idx[j] = j;
  if (n < static_cast<std::size_t>(g)) return;
  while (true) {
    visit(idx);
    int i = g - 1;
    while (i >= 0 && idx[i] == n - g + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int t = i + 1; t < g; ++t) idx[t] = idx[t - 1] + 1;
  }
}

}  // namespace

double groupwise_loglik(const ObservedDataset& data, double theta, int group_size, double* score,
                        double* hessian) {
  if (group_size < 2 || group_size > 4) throw ConfigError("group size must be 2, 3 or 4");
  auto [x, y] = data.complete_cases();
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(group_size)) throw DataError("fewer complete cases than the group size");
  const auto perms = permutations(group_size);
  double ll = 0.0, sc = 0.0, h = 0.0;
  std::vector<double> s(perms.size());
  for_each_group(n, group_size, [&](const std::array<std::size_t, 4>& idx) {
    // s_P = sum_j (x_P(j) - x_j) y_j; the identity gives 0.
    double smax = 0.0;
    for (std::size_t p = 0; p < perms.size(); ++p) {
      double acc = 0.0;
      for (int j = 0; j < group_size; ++j) acc += (x[idx[perms[p][j]]] - x[idx[j]]) * y[idx[j]];
      s[p] = acc;
      smax = std::max(smax, theta * acc);
    }
    double w0 = 0.0, w1 = 0.0, w2 = 0.0;
    for (double sp : s) {
      const double w = std::exp(theta * sp - smax);
      w0 += w;
      w1 += w * sp;
      w2 += w * sp * sp;
    }
    ll -= smax + std::log(w0);
    const double m1 = w1 / w0;
    sc -= m1;
    h -= w2 / w0 - m1 * m1;
  });
  if (score) *score = sc;
  if (hessian) *hessian = h;
  return ll;
}

PseudoLikResult fit_groupwise(const ObservedDataset& data, int group_size) {
  if (group_size < 2 || group_size > 4) throw ConfigError("group size must be 2, 3 or 4");
  if (group_size == 2) {
    // Same objective up to the constant from tied pairs; separation checks live there.
    PseudoLikResult r = fit_pairwise(build_pairs(data));
    r.loglik = groupwise_loglik(data, r.theta_hat, 2);
    return r;
  }
  auto [x, y] = data.complete_cases();
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(group_size)) throw DataError("fewer complete cases than the group size");
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
      std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
    throw DataError("no variation in x or y among complete cases");
  double groups = 1.0;
  for (int j = 0; j < group_size; ++j) groups *= static_cast<double>(n - j) / (j + 1);
  auto eval = [&](double th) {
    Eval e{};
    e.value = groupwise_loglik(data, th, group_size, &e.score, &e.hessian);
    return e;
  };
  PseudoLikResult r = newton_ascent(eval, groups);
  if (!r.converged && std::abs(r.theta_hat) > 1e3)
    throw NumericalError("groupwise estimate diverges (separation)");
  r.n_complete = n;
  r.n_total = data.size();
  r.group_size = group_size;
  return r;
}

UStatVariance variance_ustat(const ObservedDataset& data, double theta_hat, const UStatOptions& opts) {
  if (!std::isfinite(theta_hat)) throw DomainError("theta_hat must be finite");
  auto [x, y] = data.complete_cases();
  const std::size_t n = x.size();
  const double N = static_cast<double>(data.size());
  if (n < 3) throw DataError("variance needs at least 3 complete cases");
  // zeta_ik = d log(1 + Q_ik)/d theta = -d s, with d = dx dy and s = Q/(1+Q).
  auto zeta = [&](std::size_t i, std::size_t k, double* dzeta) {
    const double d = (x[i] - x[k]) * (y[i] - y[k]);
    const double t = -theta_hat * d;
    const double s = t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
    if (dzeta) *dzeta = d * d * s * (1 - s);
    return -d * s;
  };

  double a_sum = 0.0;
  double b_sum = 0.0;
  double b_scale = 0.0;
  if (!opts.incomplete) {
    std::vector<double> row_sum(n, 0.0), row_sq(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        double dz;
        const double z = zeta(i, k, &dz);
        a_sum += dz;
        row_sum[i] += z;
        row_sum[k] += z;
        row_sq[i] += z * z;
        row_sq[k] += z * z;
      }
    }
    // Ordered triples (i; k != l) both paired with i.
    for (std::size_t i = 0; i < n; ++i) b_sum += row_sum[i] * row_sum[i] - row_sq[i];
    b_scale = 1.0;
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k < n; ++k) {
        double dz;
        zeta(i, k, &dz);
        a_sum += dz;
      }
    Rng rng(opts.seed);
    double acc = 0.0;
    for (std::size_t t = 0; t < opts.n_triples; ++t) {
      std::size_t i = rng.below(n), k, l;
      do k = rng.below(n); while (k == i);
      do l = rng.below(n); while (l == i || l == k);
      acc += zeta(i, k, nullptr) * zeta(i, l, nullptr);
    }
    b_sum = acc / static_cast<double>(opts.n_triples);
    b_scale = static_cast<double>(n) * (n - 1) * (n - 2);
  }
  UStatVariance v{};
  v.a_hat = a_sum / (N * (N - 1) / 2);
  v.b_hat = 4.0 * b_sum * b_scale / (N * (N - 1) * (N - 2));
  if (!(v.a_hat > 0.0)) throw NumericalError("degenerate curvature: a_hat = 0");
  v.sandwich_var = v.b_hat / (v.a_hat * v.a_hat);
  return v;
}

PseudoLikResult estimate_pseudolik(const ObservedDataset& data, int group_size) {
  PseudoLikResult r = group_size == 2 ? fit_pairwise(build_pairs(data)) : fit_groupwise(data, group_size);
  if (group_size == 2) {
    const auto v = variance_ustat(data, r.theta_hat);
    r.a_hat = v.a_hat;
    r.b_hat = v.b_hat;
    r.sandwich_var = v.sandwich_var;
  } else {
    // The U-statistic sandwich is derived for the pairwise objective only.
    r.sandwich_var = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace crisscross
