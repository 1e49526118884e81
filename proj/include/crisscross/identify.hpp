#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crisscross/model.hpp"
#include "crisscross/simulate.hpp"

namespace crisscross {

using ParamSet = std::vector<std::string>;

struct JacobianReport {
  Eigen::MatrixXd j_matrix;  // rows: phi_1..phi_k then zeta_1..zeta_k
  std::vector<std::string> param_names;
  std::vector<Eigen::VectorXd> support_points;  // x_0 .. x_k
  int k = 0;               // support points beyond x_0
  int equation_count = 0;  // 2k
  int numerical_rank = 0;
  bool full_rank = false;
  Eigen::VectorXd singular_values;  // descending
  std::vector<ParamSet> sufficient_sets;
};

// Parameter order of the Jacobian columns for a configuration of dimension d.
std::vector<std::string> parameter_names(const ExpFamilySpec& spec, int d);
Eigen::VectorXd pack_parameters(const ExpFamilySpec& spec, const TargetLawParams& theta);
TargetLawParams unpack_parameters(const ExpFamilySpec& spec, const Eigen::VectorXd& packed,
                                  const TargetLawParams& base);

// (phi_1..phi_k, zeta_1..zeta_k): the identified functionals of p(X|Y).
Eigen::VectorXd identified_functionals(const ExpFamilySpec& spec, const TargetLawParams& theta,
                                       const std::vector<Eigen::VectorXd>& support);

JacobianReport build_jacobian(const ExpFamilySpec& spec, const TargetLawParams& theta,
                              const std::vector<Eigen::VectorXd>& support);
JacobianReport build_jacobian(const ExpFamilySpec& spec, const TargetLawParams& theta,
                              const std::vector<double>& support);

// Intercept, slope and variance of X|Y against (mu1, mu2, sigma1, sigma2, rho).
Eigen::Vector3d bivariate_functionals(const BivariateNormal& bn);
JacobianReport build_jacobian_bivariate(const BivariateNormal& bn);

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-9);

// Minimal subsets whose columns, once deleted, leave full column rank. Sets
// are ordered by size, then lexicographically on sorted names.
std::vector<ParamSet> sufficient_sets(const Eigen::MatrixXd& j, const std::vector<std::string>& names,
                                      int max_set_size, double rel_tol = 1e-9);
std::vector<ParamSet> sufficient_knowledge_search(const ExpFamilySpec& spec,
                                                  const TargetLawParams& theta,
                                                  const std::vector<Eigen::VectorXd>& support,
                                                  int max_set_size);
std::vector<ParamSet> sufficient_knowledge_search(const BivariateNormal& bn, int max_set_size);

enum class Tristate { Yes, Unknown, No };
std::string to_string(Tristate t);

struct FullLawVerdict {
  bool exp_family_conditional = false;
  Tristate completeness_holds = Tristate::Unknown;
  std::string notes;
};

FullLawVerdict full_law_verdict(const ExpFamilySpec& spec);

// Built-in configurations C1..C7 plus the multivariate examples.
struct CaseConfig {
  std::string name;
  bool bivariate = false;  // C1 uses the bivariate-normal parameterization
  BivariateNormal bn;
  ExpFamilySpec spec;
  TargetLawParams theta;
  std::vector<Eigen::VectorXd> support;
  int max_set_size = 2;
};

CaseConfig builtin_case(const std::string& name);
std::vector<std::string> builtin_case_names();
JacobianReport analyze_case(const CaseConfig& c);

enum class CounterexampleVariant {
  Corrected,           // normal densities, normalized model 2 constant
  DisplayedDensity,    // phi read as the density, constants exactly as printed
  DisplayedCdf,        // phi read as the CDF, constants exactly as printed
};

std::string to_string(CounterexampleVariant v);
CounterexampleVariant parse_counterexample_variant(const std::string& s);

struct CounterexampleOptions {
  double lo = -8.0;
  double hi = 10.0;
  double step = 0.05;
  double quad_tol = 1e-9;
  double integration_margin = 8.0;  // integrals run over [lo - margin, hi + margin]
  CounterexampleVariant variant = CounterexampleVariant::Corrected;
};

struct CounterexampleReport {
  // Order: (1,1), (1,0), (0,1), (0,0).
  std::array<double, 4> max_abs_discrepancy{};
  std::array<double, 2> pattern00_mass{};
  std::array<double, 2> total_mass{};
  std::array<double, 2> variance_y{};  // target-law Var(Y) under models 1 and 2
  CounterexampleVariant variant = CounterexampleVariant::Corrected;
  int grid_points = 0;
};

CounterexampleReport verify_counterexample(const CounterexampleOptions& opts = {});

}  // namespace crisscross
