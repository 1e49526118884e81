#include "crisscross/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "crisscross/errors.hpp"

namespace crisscross {

const GaussHermiteRule& gauss_hermite(int order) {
  static std::mutex mu;
  static std::map<int, GaussHermiteRule> cache;
  if (order < 1 || order > 400) throw DomainError("Gauss-Hermite order out of range");
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  // Jacobi matrix of the Hermite recurrence: off-diagonal sqrt(k/2).
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) jm(k, k - 1) = jm(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
  GaussHermiteRule rule;
  const double mu0 = std::sqrt(M_PI);
  for (int k = 0; k < order; ++k) {
    rule.nodes.push_back(es.eigenvalues()(k));
    double v = es.eigenvectors()(0, k);
    rule.weights.push_back(mu0 * v * v);
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

double normal_expectation(const std::function<double(double)>& g, double mean, double sd, int order) {
  const auto& rule = gauss_hermite(order);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    s += rule.weights[k] * g(mean + M_SQRT2 * sd * rule.nodes[k]);
  return s / std::sqrt(M_PI);
}

namespace {

struct Simpson {
  const std::function<double(double)>& f;

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                 int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15 * tol) return left + right + delta / 15;
    if (depth <= 0) throw NumericalError("adaptive Simpson did not reach tolerance");
    return recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1);
  }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol,
                        int max_depth) {
  if (!(b > a)) throw DomainError("adaptive_simpson needs a < b");
  // Start from a few panels so narrow peaks are not missed by the first estimate.
  const int panels = 16;
  const double h = (b - a) / panels;
  double total = 0.0;
  Simpson s{f};
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h, hi = (p == panels - 1) ? b : lo + h;
    double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    double whole = (hi - lo) / 6 * (fa + 4 * fm + fb);
    total += s.recurse(lo, hi, fa, fm, fb, whole, abs_tol / panels, max_depth);
  }
  if (!std::isfinite(total)) throw NumericalError("adaptive Simpson produced a non-finite value");
  return total;
}

}  // namespace crisscross
