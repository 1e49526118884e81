#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crisscross/model.hpp"

namespace crisscross {

// One row per unordered complete-case pair (i < k) with y_i != y_k:
// u = 1[y_i > y_k], v = (x_i - x_k)|y_i - y_k|.
struct PairDesign {
  std::vector<std::uint8_t> u;
  std::vector<double> v;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pair_index;  // complete-case indices
  std::size_t ties_dropped = 0;
  std::size_t n_complete = 0;
  std::size_t n_total = 0;

  std::size_t size() const { return u.size(); }
};

PairDesign build_pairs(const ObservedDataset& data);

struct PseudoLikResult {
  double theta_hat = 0.0;
  double sandwich_var = 0.0;  // sqrt(N) scale
  double a_hat = 0.0;
  double b_hat = 0.0;
  std::size_t n_complete = 0;
  std::size_t n_total = 0;
  int iterations = 0;
  bool converged = false;
  double score = 0.0;
  double loglik = 0.0;
  std::size_t ties_dropped = 0;
  int group_size = 2;

  double se() const;
};

// Pairwise log pseudo-likelihood sum_j [u log s(theta v) + (1-u) log(1 - s(theta v))];
// score and hessian are optional outputs.
double pairwise_loglik(const PairDesign& design, double theta, double* score = nullptr,
                       double* hessian = nullptr);

// Newton from 0. Separation throws NumericalError stating the divergence direction.
PseudoLikResult fit_pairwise(const PairDesign& design);

// Sum over all size-g complete-case groups of
// -log sum_P exp(theta sum_j (x_P(j) - x_j) y_j).
double groupwise_loglik(const ObservedDataset& data, double theta, int group_size,
                        double* score = nullptr, double* hessian = nullptr);
PseudoLikResult fit_groupwise(const ObservedDataset& data, int group_size);

struct UStatOptions {
  bool incomplete = false;  // sample triples instead of the exact O(n^2) reduction
  std::size_t n_triples = 2000000;
  std::uint64_t seed = 0;
};

struct UStatVariance {
  double a_hat;
  double b_hat;
  double sandwich_var;
};

UStatVariance variance_ustat(const ObservedDataset& data, double theta_hat, const UStatOptions& opts = {});

// Fit (pairwise when g = 2) and attach the sandwich variance.
PseudoLikResult estimate_pseudolik(const ObservedDataset& data, int group_size = 2);

}  // namespace crisscross
