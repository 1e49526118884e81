#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "crisscross/gee.hpp"
#include "crisscross/model.hpp"
#include "crisscross/simulate.hpp"

namespace crisscross {

enum class Method { Pseudolik, GeeNonOptimal, GeeOptimal };
std::string to_string(Method m);
Method parse_method(const std::string& s);

enum class SweepKind { SampleSize, Rho, Misspecification };
std::string to_string(SweepKind s);
SweepKind parse_sweep(const std::string& s);

struct ExperimentConfig {
  BivariateNormal target;
  MissingnessMechanism mechanism = MissingnessMechanism::standard();
  SweepKind sweep = SweepKind::SampleSize;
  // Sample sizes, rho values, or quadratic coefficients of the R_y mechanism.
  std::vector<double> sweep_values{500, 1000, 2000, 4000};
  std::vector<Method> methods{Method::Pseudolik, Method::GeeNonOptimal, Method::GeeOptimal};
  int replicates = 100;
  std::uint64_t base_seed = 1;
  std::size_t n_total = 1000;  // used by the rho and misspecification sweeps
  bool alpha_known = false;
  bool quadratic_pi = false;  // fit pi with an x^2 term
  int threads = 1;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Truth values per parameter name at a sweep point.
std::map<std::string, double> experiment_truth(const ExperimentConfig& cfg, double sweep_value);

struct ReplicateRecord {
  std::size_t sweep_index = 0;
  double sweep_value = 0.0;
  int replicate = 0;
  Method method = Method::Pseudolik;
  bool ok = false;
  std::string error;
  std::map<std::string, double> estimate;
  std::map<std::string, double> se;
};

struct CellSummary {
  double sweep_value = 0.0;
  Method method = Method::Pseudolik;
  std::string parameter;
  double truth = 0.0;
  std::size_t converged = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double sd = 0.0;       // replicate SD, denominator R - 1
  double mean_se = 0.0;  // mean of the estimated standard errors
};

struct ReplicationSummary {
  std::vector<CellSummary> cells;
  std::vector<ReplicateRecord> raw;

  const CellSummary& cell(double sweep_value, Method m, const std::string& parameter) const;
};

// Aggregate estimates (two-pass). mse = bias^2 + sd^2 (R-1)/R.
struct MomentSummary {
  double mean, bias, mse, sd;
};
MomentSummary summarize(const std::vector<double>& values, double truth);

ReplicationSummary run_experiment(const ExperimentConfig& cfg);

// Writes <path>.csv (tidy long format) and <path>.json.
void save_report(const ReplicationSummary& summary, const std::string& path);
nlohmann::json summary_to_json(const ReplicationSummary& summary);
void write_tidy_csv(const ReplicationSummary& summary, std::ostream& out);

// Single-dataset estimation as used by the CLI and bootstrap.
struct MethodSpec {
  std::string method = "pseudolik";  // pseudolik | gee | binary
  int group_size = 2;
  WeightKind weight = WeightKind::NonOptimal;
  std::optional<double> alpha_known;
  double sigma2 = 8.19;
  bool quadratic_pi = false;
  double theta11 = 0.723;
};

std::map<std::string, double> estimate_point(const ObservedDataset& data, const MethodSpec& spec,
                                             std::map<std::string, double>* se = nullptr);

struct BootstrapResult {
  std::map<std::string, double> se;
  std::map<std::string, double> point;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  int replicates = 0;
};

BootstrapResult bootstrap(const ObservedDataset& data, const MethodSpec& spec, int replicates,
                          std::uint64_t seed);

}  // namespace crisscross
