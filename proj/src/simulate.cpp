#include "crisscross/simulate.hpp"

#include <cmath>

#include "crisscross/errors.hpp"
#include "crisscross/families.hpp"
#include "crisscross/rng.hpp"

namespace crisscross {

double BivariateNormal::theta() const {
  const auto c = conditional();
  return c.beta / c.sigma2;
}

void Binary2x2Model::validate() const {
  double s = 0.0;
  for (double p : cells) {
    if (!(p >= 0.0) || p > 1.0) throw DomainError("cell probabilities must lie in [0, 1]");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12) throw DomainError("cell probabilities must sum to 1");
}

double Binary2x2Model::log_or() const {
  return std::log(cells[0]) + std::log(cells[3]) - std::log(cells[1]) - std::log(cells[2]);
}

namespace {

void coarsen(SimulatedData& out, double x, double y, const MissingnessMechanism& mech, Rng& rng) {
  const int rx = rng.bernoulli(mech.prob_rx(y));
  const int ry = rng.bernoulli(mech.prob_ry(x, rx));
  out.complete.x.push_back(x);
  out.complete.y.push_back(y);
  out.complete.r_x.push_back(static_cast<std::uint8_t>(rx));
  out.complete.r_y.push_back(static_cast<std::uint8_t>(ry));
  out.observed.push_back(rx ? std::optional<double>(x) : std::nullopt,
                         ry ? std::optional<double>(y) : std::nullopt);
}

void reserve(SimulatedData& out, std::size_t n) {
  out.complete.x.reserve(n);
  out.complete.y.reserve(n);
  out.complete.r_x.reserve(n);
  out.complete.r_y.reserve(n);
  out.observed.x.reserve(n);
  out.observed.y.reserve(n);
  out.observed.r_x.reserve(n);
  out.observed.r_y.reserve(n);
}

double draw_x(const CovariateTable& tab, const TargetLawParams& p, Rng& rng) {
  const double eta = p.eta_x(0);
  switch (tab.family()) {
    case XFamily::Normal: return rng.normal(eta, std::sqrt(p.phi_x));
    case XFamily::Bernoulli: return rng.bernoulli(expit(eta)) ? 1.0 : 0.0;
    case XFamily::Poisson: return static_cast<double>(rng.poisson(std::exp(eta)));
    case XFamily::Exponential:
      if (!(eta < 0)) throw DomainError("exponential X needs eta_x < 0");
      return rng.exponential(-eta);
    default: throw ConfigError("simulation supports univariate X families only");
  }
}

double draw_y(const ResponseTable& tab, const TargetLawParams& p, double x, Rng& rng) {
  const double t = p.alpha + p.beta(0) * x;
  if (!tab.in_domain(t))
    throw DomainError("mean-domain violation: linear predictor " + std::to_string(t) + " at x = " +
                      std::to_string(x));
  const double eta = tab.natural(t);
  switch (tab.family()) {
    case YFamily::Normal: return rng.normal(tab.mean(eta), std::sqrt(p.phi));
    case YFamily::Bernoulli: return rng.bernoulli(tab.mean(eta)) ? 1.0 : 0.0;
    case YFamily::Exponential: return rng.exponential(-eta);
  }
  return 0;
}

}  // namespace

SimulatedData simulate_dataset(const ScenarioConfig& config) {
  if (config.n_total == 0) throw ConfigError("n_total must be positive");
  if (const auto* b = std::get_if<Binary2x2Model>(&config.target))
    return simulate_binary(*b, config.mechanism, config.n_total, config.seed);

  Rng rng(config.seed);
  SimulatedData out;
  reserve(out, config.n_total);
  if (const auto* bn = std::get_if<BivariateNormal>(&config.target)) {
    const auto c = bn->conditional();
    const double sd = std::sqrt(c.sigma2);
    for (std::size_t i = 0; i < config.n_total; ++i) {
      const double y = rng.normal(bn->mu1, bn->sigma1);
      const double x = rng.normal(c.alpha + c.beta * y, sd);
      coarsen(out, x, y, config.mechanism, rng);
    }
    return out;
  }
  const auto& ft = std::get<FamilyTarget>(config.target);
  ft.params.validate(ft.spec);
  CovariateTable xt(ft.spec.family_x);
  ResponseTable yt(ft.spec.family_y_given_x, ft.spec.link);
  for (std::size_t i = 0; i < config.n_total; ++i) {
    const double x = draw_x(xt, ft.params, rng);
    const double y = draw_y(yt, ft.params, x, rng);
    coarsen(out, x, y, config.mechanism, rng);
  }
  return out;
}

SimulatedData simulate_binary(const Binary2x2Model& binary, const MissingnessMechanism& mechanism,
                              std::size_t n_total, std::uint64_t seed) {
  binary.validate();
  if (n_total == 0) throw ConfigError("n_total must be positive");
  Rng rng(seed);
  SimulatedData out;
  reserve(out, n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    const double u = rng.uniform();
    int cell = 3;
    double acc = 0.0;
    for (int c = 0; c < 4; ++c) {
      acc += binary.cells[c];
      if (u < acc) {
        cell = c;
        break;
      }
    }
    // Skip trailing empty cells when rounding leaves u above the cumulative sum.
    while (binary.cells[cell] == 0.0 && cell > 0) --cell;
    const double x = 1.0 + (cell >= 2);
    const double y = 1.0 + (cell % 2);
    coarsen(out, x, y, mechanism, rng);
  }
  return out;
}

PatternFrequencies missingness_summary(const ObservedDataset& data) {
  const std::size_t n = data.size();
  if (n == 0) throw DataError("missingness_summary on an empty dataset");
  std::size_t c[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) ++c[2 * data.r_x[i] + data.r_y[i]];
  const double dn = static_cast<double>(n);
  PatternFrequencies f{c[0] / dn, c[1] / dn, c[2] / dn, 0.0};
  f.complete = 1.0 - (f.both_missing + f.x_missing + f.y_missing);
  return f;
}

}  // namespace crisscross
