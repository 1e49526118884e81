#pragma once

#include <functional>
#include <vector>

namespace crisscross {

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // for the weight exp(-t^2)
};

// Golub-Welsch. Rules are cached per order.
const GaussHermiteRule& gauss_hermite(int order);

// E[g(Z)] for Z ~ N(mean, sd^2).
double normal_expectation(const std::function<double(double)>& g, double mean, double sd,
                          int order = 64);

// Adaptive Simpson with absolute tolerance. Throws NumericalError when the
// recursion depth is exhausted before the tolerance is met.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol,
                        int max_depth = 50);

}  // namespace crisscross
