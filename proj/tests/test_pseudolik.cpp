#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crisscross/errors.hpp"
#include "crisscross/pseudolik.hpp"
#include "crisscross/simulate.hpp"

using namespace crisscross;

namespace {

ObservedDataset complete_rows(std::initializer_list<std::pair<double, double>> rows) {
  ObservedDataset d;
  for (auto [x, y] : rows) d.push_back(x, y);
  return d;
}

ObservedDataset sample(std::size_t n, std::uint64_t seed) {
  ScenarioConfig sc;
  sc.n_total = n;
  sc.seed = seed;
  return simulate_dataset(sc).observed;
}

// log of the exact conditional likelihood of the observed x-y matching within one group
double brute_group(const std::vector<double>& x, const std::vector<double>& y, double theta) {
  std::vector<int> p(x.size());
  std::iota(p.begin(), p.end(), 0);
  double obs = 0;
  for (std::size_t j = 0; j < x.size(); ++j) obs += x[j] * y[j];
  double denom = 0;
  do {
    double s = 0;
    for (std::size_t j = 0; j < x.size(); ++j) s += x[p[j]] * y[j];
    denom += std::exp(theta * s);
  } while (std::next_permutation(p.begin(), p.end()));
  return theta * obs - std::log(denom);
}

}  // namespace

TEST_CASE("pair design") {
  auto d = build_pairs(complete_rows({{1, 2}, {0, 1}}));
  REQUIRE(d.size() == 1);
  CHECK(d.u[0] == 1);
  CHECK(d.v[0] == 1.0);

  d = build_pairs(complete_rows({{0, 1}, {1, 1}}));
  CHECK(d.size() == 0);
  CHECK(d.ties_dropped == 1);

  // brute-force recomputation from the definitions
  const std::vector<std::pair<double, double>> rows{{2, 3}, {1, 1}, {0, 2}};
  d = build_pairs(complete_rows({{2, 3}, {1, 1}, {0, 2}}));
  REQUIRE(d.size() == 3);
  for (std::size_t j = 0; j < d.size(); ++j) {
    const auto [i, k] = d.pair_index[j];
    const auto [xi, yi] = rows[i];
    const auto [xk, yk] = rows[k];
    CHECK(d.u[j] == (yi > yk ? 1 : 0));
    CHECK(d.v[j] == (xi - xk) * std::abs(yi - yk));
  }
  CHECK(d.v[0] == 2.0);
  CHECK(d.v[1] == 2.0);
  CHECK(d.v[2] == 1.0);

  // incomplete rows never enter
  ObservedDataset m = complete_rows({{2, 3}, {1, 1}});
  m.push_back(std::nullopt, 5.0);
  m.push_back(7.0, std::nullopt);
  const auto dm = build_pairs(m);
  CHECK(dm.size() == 1);
  CHECK(dm.n_total == 4);
  CHECK(dm.n_complete == 2);
}

TEST_CASE("pairwise score and hessian match finite differences") {
  const auto d = build_pairs(sample(400, 21));
  for (double th : {-0.3, 0.0, 0.11, 0.5}) {
    double s, h;
    pairwise_loglik(d, th, &s, &h);
    const double e = 1e-5;
    const double fs = (pairwise_loglik(d, th + e) - pairwise_loglik(d, th - e)) / (2 * e);
    double sp, sm;
    pairwise_loglik(d, th + e, &sp);
    pairwise_loglik(d, th - e, &sm);
    CHECK(s == doctest::Approx(fs).epsilon(1e-6));
    CHECK(h == doctest::Approx((sp - sm) / (2 * e)).epsilon(1e-6));
  }
}

TEST_CASE("groupwise score matches finite differences") {
  const auto data = sample(40, 22);
  for (int g : {2, 3, 4}) {
    for (double th : {-0.2, 0.1}) {
      double s, h;
      groupwise_loglik(data, th, g, &s, &h);
      const double e = 1e-5;
      double sp, sm;
      const double fp = groupwise_loglik(data, th + e, g, &sp), fm = groupwise_loglik(data, th - e, g, &sm);
      INFO("g=", g, " theta=", th);
      CHECK(s == doctest::Approx((fp - fm) / (2 * e)).epsilon(1e-6));
      CHECK(h == doctest::Approx((sp - sm) / (2 * e)).epsilon(1e-6));
    }
  }
}

TEST_CASE("groupwise g=2 is the pairwise objective") {
  // Tied pairs contribute log(1/2) to the groupwise sum and are dropped from the pairwise one.
  ObservedDataset data = sample(300, 23);
  data.push_back(1.0, 2.0);
  data.push_back(3.0, 2.0);
  const auto d = build_pairs(data);
  CHECK(d.ties_dropped >= 1);
  for (double th : {-0.4, 0.0, 0.13, 0.7}) {
    double gs, ps;
    const double g = groupwise_loglik(data, th, 2, &gs);
    const double p = pairwise_loglik(d, th, &ps);
    CHECK(std::abs(g - (p - static_cast<double>(d.ties_dropped) * std::log(2.0))) <= 1e-12 * std::abs(g));
    CHECK(std::abs(gs - ps) <= 1e-12 * std::max(1.0, std::abs(ps)));
  }
  const auto a = fit_groupwise(data, 2), b = fit_pairwise(d);
  CHECK(std::abs(a.theta_hat - b.theta_hat) <= 1e-10);
}

TEST_CASE("g=3 on three points is the exact conditional likelihood") {
  const auto data = complete_rows({{0, 0}, {1, 2}, {2, 1}});
  for (double th : {-1.5, -0.2, 0.0, 0.3, 1.7})
    CHECK(std::abs(groupwise_loglik(data, th, 3) - brute_group({0, 1, 2}, {0, 2, 1}, th)) <= 1e-10);

  // grid oracle over [-2, 2], step 1e-4
  double best = -2, best_v = -1e300;
  for (int i = 0; i <= 40000; ++i) {
    const double th = -2 + 1e-4 * i;
    const double v = brute_group({0, 1, 2}, {0, 2, 1}, th);
    if (v > best_v) {
      best_v = v;
      best = th;
    }
  }
  const auto fit = fit_groupwise(data, 3);
  CHECK(fit.converged);
  CHECK(std::abs(fit.theta_hat - best) <= 1e-4);
}

TEST_CASE("groupwise at theta = 0") {
  const auto data = sample(30, 24);
  const double n = static_cast<double>(data.n_complete());
  CHECK(groupwise_loglik(data, 0.0, 3) == doctest::Approx(n * (n - 1) * (n - 2) / 6 * std::log(1.0 / 6)).epsilon(1e-12));
  CHECK(groupwise_loglik(data, 0.0, 4) ==
        doctest::Approx(n * (n - 1) * (n - 2) * (n - 3) / 24 * std::log(1.0 / 24)).epsilon(1e-12));
  CHECK_THROWS_AS(groupwise_loglik(data, 0.0, 5), ConfigError);
}

TEST_CASE("separation and degenerate designs") {
  const auto sep = complete_rows({{0, 0}, {1, 1}, {2, 2}});
  try {
    fit_pairwise(build_pairs(sep));
    FAIL("expected separation");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("+infinity") != std::string::npos);
  }
  CHECK_THROWS_AS(fit_pairwise(build_pairs(complete_rows({{0, 2}, {1, 1}, {2, 0}}))), NumericalError);
  const auto flat = complete_rows({{1, 0}, {1, 1}, {1, 2}, {1, 5}});
  CHECK_THROWS_AS(fit_pairwise(build_pairs(flat)), DataError);
  CHECK_THROWS_AS(variance_ustat(flat, 0.1), NumericalError);
  CHECK_THROWS_AS(build_pairs(complete_rows({{1, 0}})), DataError);
}

TEST_CASE("null association") {
  // x independent of y
  ScenarioConfig sc;
  sc.n_total = 3000;
  sc.seed = 25;
  sc.target = BivariateNormal{2.0, 0.4, 1.0, 3.0, 0.0};
  const auto r = estimate_pseudolik(simulate_dataset(sc).observed);
  CHECK(std::abs(r.theta_hat) < 4 * r.se());
  CHECK(std::abs(r.theta_hat) < 0.03);
}

TEST_CASE("U-statistic pieces match a brute-force triple loop") {
  const auto data = sample(36, 26);
  auto [x, y] = data.complete_cases();
  const std::size_t n = x.size();
  REQUIRE(n >= 15);
  const double th = 0.12, N = static_cast<double>(data.size());
  auto zeta = [&](std::size_t i, std::size_t k) {
    const double d = (x[i] - x[k]) * (y[i] - y[k]);
    return -d / (1 + std::exp(th * d));
  };
  double b = 0, a = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l)
        if (i != k && i != l && k != l) b += zeta(i, k) * zeta(i, l);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) {
      const double d = (x[i] - x[k]) * (y[i] - y[k]);
      const double s = 1 / (1 + std::exp(th * d));
      a += d * d * s * (1 - s);
    }
  const auto v = variance_ustat(data, th);
  CHECK(v.b_hat == doctest::Approx(4 * b / (N * (N - 1) * (N - 2))).epsilon(1e-12));
  CHECK(v.a_hat == doctest::Approx(a / (N * (N - 1) / 2)).epsilon(1e-12));
  CHECK(v.sandwich_var == doctest::Approx(v.b_hat / (v.a_hat * v.a_hat)).epsilon(1e-14));

  // the sampled-triple version is close to the exact one
  UStatOptions o;
  o.incomplete = true;
  o.n_triples = 400000;
  o.seed = 3;
  const auto vi = variance_ustat(data, th, o);
  CHECK(vi.b_hat == doctest::Approx(v.b_hat).epsilon(0.05));
}

TEST_CASE("complete-case gating ignores incomplete rows and their order") {
  const auto base = sample(500, 27);
  ObservedDataset a, b;
  std::vector<std::size_t> inc;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base.complete(i)) {
      a.push_back(base.x[i], base.y[i]);
      b.push_back(base.x[i], base.y[i]);
    } else {
      inc.push_back(i);
    }
  }
  for (std::size_t i : inc) a.push_back(base.x_at(i), base.y_at(i));
  std::reverse(inc.begin(), inc.end());
  for (std::size_t i : inc) b.push_back(base.x_at(i), base.y_at(i));
  const auto ra = estimate_pseudolik(a), rb = estimate_pseudolik(b);
  CHECK(ra.theta_hat == rb.theta_hat);
  CHECK(ra.sandwich_var == rb.sandwich_var);
}

TEST_CASE("g=3 is at least as efficient as pairwise") {
  // N reduced from the usual 1000 to keep the C(n,3) enumeration cheap
  const int reps = 40;
  std::vector<double> t2, t3;
  for (int r = 0; r < reps; ++r) {
    const auto d = sample(250, 1000 + static_cast<std::uint64_t>(r));
    t2.push_back(fit_pairwise(build_pairs(d)).theta_hat);
    t3.push_back(fit_groupwise(d, 3).theta_hat);
  }
  auto sd = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0;
    for (double e : v) s += (e - m) * (e - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  CHECK(sd(t3) / sd(t2) <= 1.02);
}
