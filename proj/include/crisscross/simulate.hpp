#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "crisscross/model.hpp"

namespace crisscross {

struct BivariateNormal {
  double mu1 = 2.0;  // Y
  double mu2 = 0.4;  // X
  double sigma1 = 1.0;
  double sigma2 = 3.0;
  double rho = 0.3;

  ConditionalNormal conditional() const { return derive_conditional(mu1, mu2, sigma1, sigma2, rho); }
  // Pairwise odds-ratio parameter beta / sigma^2 of X|Y.
  double theta() const;
};

// Cells theta_ij = p(X=i, Y=j), i, j in {1, 2}, stored as (11, 12, 21, 22).
struct Binary2x2Model {
  std::array<double, 4> cells{0.25, 0.25, 0.25, 0.25};

  void validate() const;
  double log_or() const;
};

struct FamilyTarget {
  ExpFamilySpec spec;
  TargetLawParams params;
};

using TargetLaw = std::variant<BivariateNormal, Binary2x2Model, FamilyTarget>;

struct ScenarioConfig {
  TargetLaw target = BivariateNormal{};
  MissingnessMechanism mechanism = MissingnessMechanism::standard();
  std::size_t n_total = 1000;
  std::uint64_t seed = 0;
};

// Full data before coarsening. Kept for oracle tests only.
struct CompleteData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::uint8_t> r_x;
  std::vector<std::uint8_t> r_y;
};

struct SimulatedData {
  ObservedDataset observed;
  CompleteData complete;
};

SimulatedData simulate_dataset(const ScenarioConfig& config);
SimulatedData simulate_binary(const Binary2x2Model& binary, const MissingnessMechanism& mechanism,
                              std::size_t n_total, std::uint64_t seed);

// Frequencies of (r_x, r_y) = (0,0), (0,1), (1,0), (1,1).
struct PatternFrequencies {
  double both_missing;
  double x_missing;
  double y_missing;
  double complete;
};

PatternFrequencies missingness_summary(const ObservedDataset& data);

}  // namespace crisscross
