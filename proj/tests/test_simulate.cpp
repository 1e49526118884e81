#include "doctest.h"

#include <cmath>

#include "crisscross/errors.hpp"
#include "crisscross/simulate.hpp"

using namespace crisscross;

TEST_CASE("pattern frequencies under the default mechanism") {
  ScenarioConfig sc;
  sc.n_total = 100000;
  sc.seed = 11;
  const auto d = simulate_dataset(sc);
  const auto f = missingness_summary(d.observed);
  CHECK(std::abs(f.both_missing - 0.05) <= 0.02);
  CHECK(std::abs(f.x_missing - 0.16) <= 0.02);
  CHECK(std::abs(f.y_missing - 0.25) <= 0.02);
  CHECK(std::abs(f.complete - 0.54) <= 0.02);
  CHECK(f.both_missing + f.x_missing + f.y_missing + f.complete == 1.0);
}

TEST_CASE("complete-data correlation") {
  ScenarioConfig sc;
  sc.n_total = 1000000;
  sc.seed = 12;
  const auto d = simulate_dataset(sc).complete;
  double mx = 0, my = 0;
  const double n = static_cast<double>(d.x.size());
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    mx += d.x[i];
    my += d.y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    sxy += (d.x[i] - mx) * (d.y[i] - my);
    sxx += (d.x[i] - mx) * (d.x[i] - mx);
    syy += (d.y[i] - my) * (d.y[i] - my);
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy) - 0.3) <= 0.003);
  CHECK(std::abs(mx - 0.4) <= 0.01);
  CHECK(std::abs(my - 2.0) <= 0.005);
}

TEST_CASE("forced observation") {
  ScenarioConfig sc;
  sc.mechanism = MissingnessMechanism::none();
  sc.n_total = 5000;
  sc.seed = 3;
  const auto d = simulate_dataset(sc);
  CHECK(d.observed.n_complete() == 5000);
  CHECK(d.observed.x == d.complete.x);
  CHECK(d.observed.y == d.complete.y);
}

TEST_CASE("seed determines the dataset") {
  ScenarioConfig sc;
  sc.n_total = 500;
  sc.seed = 77;
  const auto a = simulate_dataset(sc), b = simulate_dataset(sc);
  CHECK(a.observed.r_x == b.observed.r_x);
  CHECK(a.complete.x == b.complete.x);
  sc.seed = 78;
  CHECK(simulate_dataset(sc).complete.x != a.complete.x);
}

TEST_CASE("missingness_summary edge cases") {
  ObservedDataset one;
  one.push_back(1.0, 2.0);
  auto f = missingness_summary(one);
  CHECK(f.both_missing == 0);
  CHECK(f.x_missing == 0);
  CHECK(f.y_missing == 0);
  CHECK(f.complete == 1);
  ObservedDataset none;
  none.push_back(std::nullopt, std::nullopt);
  none.push_back(std::nullopt, std::nullopt);
  f = missingness_summary(none);
  CHECK(f.both_missing == 1);
  CHECK(f.complete == 0);
  CHECK_THROWS(missingness_summary(ObservedDataset{}));
}

TEST_CASE("binary cells") {
  Binary2x2Model b;
  auto d = simulate_binary(b, MissingnessMechanism::none(), 400000, 5).complete;
  std::array<double, 4> cnt{};
  for (std::size_t i = 0; i < d.x.size(); ++i) cnt[static_cast<int>((d.x[i] - 1) * 2 + (d.y[i] - 1))] += 1;
  for (double c : cnt) CHECK(std::abs(c / 400000 - 0.25) <= 0.003);

  b.cells = {0.723, 0.081, 0.078, 0.118};
  CHECK(b.log_or() == doctest::Approx(2.60).epsilon(0.01));
  d = simulate_binary(b, MissingnessMechanism::none(), 100000, 6).complete;
  cnt = {};
  for (std::size_t i = 0; i < d.x.size(); ++i) cnt[static_cast<int>((d.x[i] - 1) * 2 + (d.y[i] - 1))] += 1;
  CHECK(std::abs(std::log(cnt[0] * cnt[3] / (cnt[1] * cnt[2])) - 2.60) <= 0.1);

  b.cells = {1, 0, 0, 0};
  d = simulate_binary(b, MissingnessMechanism::standard(), 1000, 7).complete;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    CHECK(d.x[i] == 1);
    CHECK(d.y[i] == 1);
  }
  b.cells = {0.5, 0.5, 0.5, -0.5};
  CHECK_THROWS(simulate_binary(b, MissingnessMechanism::none(), 10, 1));
  b.cells = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS(simulate_binary(b, MissingnessMechanism::none(), 10, 1));
}

TEST_CASE("family targets") {
  FamilyTarget t;
  t.spec.family_x = XFamily::Poisson;
  t.spec.family_y_given_x = YFamily::Normal;
  t.params.alpha = 0.5;
  t.params.beta = Eigen::VectorXd::Constant(1, 0.8);
  t.params.phi = 1.2;
  t.params.eta_x = Eigen::VectorXd::Constant(1, std::log(2.0));
  ScenarioConfig sc;
  sc.target = t;
  sc.n_total = 50000;
  sc.seed = 9;
  sc.mechanism = MissingnessMechanism::none();
  const auto d = simulate_dataset(sc).complete;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    mx += d.x[i];
    my += d.y[i];
    CHECK(d.x[i] == std::floor(d.x[i]));
  }
  CHECK(std::abs(mx / 50000 - 2.0) < 0.03);
  CHECK(std::abs(my / 50000 - (0.5 + 0.8 * 2.0)) < 0.03);

  // exponential Y with canonical link needs alpha + beta x < 0 everywhere
  FamilyTarget e;
  e.spec.family_x = XFamily::Normal;
  e.spec.family_y_given_x = YFamily::Exponential;
  e.params.alpha = -1;
  e.params.beta = Eigen::VectorXd::Constant(1, 0.5);
  sc.target = e;
  CHECK_THROWS_AS(simulate_dataset(sc), DomainError);
}
