#include "crisscross/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include "crisscross/errors.hpp"
#include "crisscross/io.hpp"
#include "crisscross/pseudolik.hpp"
#include "crisscross/rng.hpp"

namespace crisscross {

using nlohmann::json;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Pseudolik: return "pseudolik";
    case Method::GeeNonOptimal: return "gee_nonoptimal";
    case Method::GeeOptimal: return "gee_optimal";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (auto m : {Method::Pseudolik, Method::GeeNonOptimal, Method::GeeOptimal})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + s + "'");
}

std::string to_string(SweepKind s) {
  switch (s) {
    case SweepKind::SampleSize: return "sample_size";
    case SweepKind::Rho: return "rho";
    case SweepKind::Misspecification: return "misspecification";
  }
  return "?";
}

SweepKind parse_sweep(const std::string& s) {
  for (auto k : {SweepKind::SampleSize, SweepKind::Rho, SweepKind::Misspecification})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown sweep '" + s + "'");
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
  check_keys(j,
             {"target", "mechanism", "sweep", "values", "methods", "replicates", "base_seed", "n_total",
              "alpha_known", "quadratic_pi", "threads"},
             "experiment config");
  ExperimentConfig c;
  if (j.contains("target")) {
    const json& t = j["target"];
    check_keys(t, {"mu1", "mu2", "sigma1", "sigma2", "rho"}, "target");
    c.target.mu1 = get(t, "mu1", c.target.mu1);
    c.target.mu2 = get(t, "mu2", c.target.mu2);
    c.target.sigma1 = get(t, "sigma1", c.target.sigma1);
    c.target.sigma2 = get(t, "sigma2", c.target.sigma2);
    c.target.rho = get(t, "rho", c.target.rho);
  }
  if (j.contains("mechanism")) {
    const json& m = j["mechanism"];
    check_keys(m, {"rx_given_y", "ry_given_x_rx"}, "mechanism");
    auto rx = get(m, "rx_given_y", std::vector<double>(c.mechanism.rx_given_y.begin(), c.mechanism.rx_given_y.end()));
    auto ry = get(m, "ry_given_x_rx",
                  std::vector<double>(c.mechanism.ry_given_x_rx.begin(), c.mechanism.ry_given_x_rx.end()));
    if (rx.size() < 2 || rx.size() > 3) throw ConfigError("rx_given_y needs 2 or 3 coefficients");
    if (ry.size() < 3 || ry.size() > 4) throw ConfigError("ry_given_x_rx needs 3 or 4 coefficients");
    c.mechanism.rx_given_y = {rx[0], rx[1], rx.size() > 2 ? rx[2] : 0.0};
    c.mechanism.ry_given_x_rx = {ry[0], ry[1], ry[2], ry.size() > 3 ? ry[3] : 0.0};
  }
  c.sweep = parse_sweep(get<std::string>(j, "sweep", "sample_size"));
  if (j.contains("values")) c.sweep_values = get(j, "values", c.sweep_values);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& s : get(j, "methods", std::vector<std::string>{})) c.methods.push_back(parse_method(s));
  }
  c.replicates = get(j, "replicates", c.replicates);
  c.base_seed = get(j, "base_seed", c.base_seed);
  c.n_total = get(j, "n_total", c.n_total);
  c.alpha_known = get(j, "alpha_known", c.alpha_known);
  c.quadratic_pi = get(j, "quadratic_pi", c.quadratic_pi);
  c.threads = get(j, "threads", c.threads);
  if (c.replicates < 1) throw ConfigError("replicates must be positive");
  if (c.sweep_values.empty()) throw ConfigError("sweep values must not be empty");
  if (c.methods.empty()) throw ConfigError("at least one method is required");
  if (c.threads < 1) throw ConfigError("threads must be positive");
  for (double v : c.sweep_values) {
    try {
      experiment_truth(c, v);
    } catch (const DomainError& e) {
      throw ConfigError("sweep value " + format_double(v) + ": " + e.what());
    }
  }
  return c;
}

namespace {

struct Point {
  BivariateNormal bn;
  MissingnessMechanism mech;
  std::size_t n;
};

Point sweep_point(const ExperimentConfig& cfg, double v) {
  Point p{cfg.target, cfg.mechanism, cfg.n_total};
  switch (cfg.sweep) {
    case SweepKind::SampleSize:
      if (!(v >= 2) || v != std::floor(v)) throw ConfigError("sample sizes must be integers >= 2");
      p.n = static_cast<std::size_t>(v);
      break;
    case SweepKind::Rho: p.bn.rho = v; break;
    case SweepKind::Misspecification: p.mech.ry_given_x_rx[3] = v; break;
  }
  return p;
}

template <class F>
void parallel_for(int count, int threads, F&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int t = std::min(threads, count);
  for (int w = 0; w < t; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += t) fn(i);
    });
  for (auto& th : pool) th.join();
}

void record_gee(ReplicateRecord& rec, const GeeResult& g) {
  const Eigen::VectorXd se = g.se();
  for (std::size_t k = 0; k < g.names.size(); ++k) {
    rec.estimate[g.names[k]] = g.theta_hat(static_cast<Eigen::Index>(k));
    rec.se[g.names[k]] = se(static_cast<Eigen::Index>(k));
  }
}

}  // namespace

std::map<std::string, double> experiment_truth(const ExperimentConfig& cfg, double v) {
  const Point p = sweep_point(cfg, v);
  const auto c = p.bn.conditional();
  const double theta = c.beta / c.sigma2;
  return {{"alpha", c.alpha}, {"beta", c.beta}, {"theta", theta}, {"or", std::exp(theta)}};
}

MomentSummary summarize(const std::vector<double>& values, double truth) {
  MomentSummary m{kNaN, kNaN, kNaN, kNaN};
  if (values.empty()) return m;
  const double r = static_cast<double>(values.size());
  double s = 0.0;
  for (double v : values) s += v;
  m.mean = s / r;
  m.bias = m.mean - truth;
  double ss = 0.0, se = 0.0;
  for (double v : values) {
    ss += (v - m.mean) * (v - m.mean);
    se += (v - truth) * (v - truth);
  }
  m.sd = values.size() > 1 ? std::sqrt(ss / (r - 1)) : 0.0;
  m.mse = se / r;
  return m;
}

const CellSummary& ReplicationSummary::cell(double sweep_value, Method m, const std::string& parameter) const {
  for (const auto& c : cells)
    if (c.sweep_value == sweep_value && c.method == m && c.parameter == parameter) return c;
  throw ConfigError("no summary cell for " + to_string(m) + "/" + parameter + " at " + format_double(sweep_value));
}

ReplicationSummary run_experiment(const ExperimentConfig& cfg) {
  const int reps = cfg.replicates;
  auto wants = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };
  const bool need_nonopt = wants(Method::GeeNonOptimal) || wants(Method::GeeOptimal);

  ReplicationSummary out;
  for (std::size_t s = 0; s < cfg.sweep_values.size(); ++s) {
    const double v = cfg.sweep_values[s];
    const Point pt = sweep_point(cfg, v);
    const auto cond = pt.bn.conditional();
    const std::optional<double> alpha_known = cfg.alpha_known ? std::optional<double>(cond.alpha) : std::nullopt;
    const MeanModel model = MeanModel::normal_linear(alpha_known, cond.sigma2);

    std::vector<ObservedDataset> data(reps);
    std::vector<ReplicateRecord> pl(reps), nonopt(reps), opt(reps);
    std::vector<PropensityModel> pis(reps);
    auto base = [&](ReplicateRecord& rec, int r, Method m) {
      rec.sweep_index = s;
      rec.sweep_value = v;
      rec.replicate = r;
      rec.method = m;
    };

    parallel_for(reps, cfg.threads, [&](int r) {
      ScenarioConfig sc{pt.bn, pt.mech, pt.n, derive_seed(cfg.base_seed, s, static_cast<std::uint64_t>(r))};
      data[r] = simulate_dataset(sc).observed;
      if (wants(Method::Pseudolik)) {
        auto& rec = pl[r];
        base(rec, r, Method::Pseudolik);
        try {
          const PseudoLikResult res = estimate_pseudolik(data[r], 2);
          if (!res.converged) throw NumericalError("pseudo-likelihood did not converge");
          const auto [orp, orse] = or_from_theta(res.theta_hat, res.sandwich_var / static_cast<double>(res.n_total), 1.0);
          rec.estimate = {{"theta", res.theta_hat}, {"or", orp}};
          rec.se = {{"theta", res.se()}, {"or", orse}};
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
      if (need_nonopt) {
        auto& rec = nonopt[r];
        base(rec, r, Method::GeeNonOptimal);
        try {
          pis[r] = fit_propensity(data[r], cfg.quadratic_pi);
          if (!pis[r].fitted) throw NumericalError("propensity fit failed (separation or non-convergence)");
          record_gee(rec, solve_gee(data[r], model, pis[r], WeightFunction::non_optimal()));
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
    });

    if (wants(Method::GeeOptimal)) {
      // Pilot: componentwise median of the non-optimal estimates at this point.
      const auto names = model.free_names();
      Eigen::VectorXd pilot(model.dim());
      for (std::size_t k = 0; k < names.size(); ++k) {
        std::vector<double> vals;
        for (const auto& rec : nonopt)
          if (rec.ok) vals.push_back(rec.estimate.at(names[k]));
        if (vals.empty()) throw NumericalError("no successful non-optimal fit to build the optimal-weight pilot");
        std::sort(vals.begin(), vals.end());
        const std::size_t m = vals.size();
        pilot(static_cast<Eigen::Index>(k)) = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
      }
      parallel_for(reps, cfg.threads, [&](int r) {
        auto& rec = opt[r];
        base(rec, r, Method::GeeOptimal);
        try {
          if (!nonopt[r].ok) throw NumericalError("skipped: " + nonopt[r].error);
          const WeightFunction f = WeightFunction::optimal(model, pis[r], pilot);
          record_gee(rec, solve_gee(data[r], model, pis[r], f));
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      });
    }

    const auto truth = experiment_truth(cfg, v);
    auto aggregate = [&](const std::vector<ReplicateRecord>& recs, Method m, const std::vector<std::string>& params) {
      for (const auto& p : params) {
        CellSummary c;
        c.sweep_value = v;
        c.method = m;
        c.parameter = p;
        c.truth = truth.at(p);
        std::vector<double> est, ses;
        for (const auto& rec : recs) {
          if (rec.ok) {
            est.push_back(rec.estimate.at(p));
            ses.push_back(rec.se.at(p));
          }
        }
        c.converged = est.size();
        c.failed = recs.size() - est.size();
        const MomentSummary ms = summarize(est, c.truth);
        c.mean = ms.mean;
        c.bias = ms.bias;
        c.mse = ms.mse;
        c.sd = ms.sd;
        double sse = 0.0;
        for (double e : ses) sse += e;
        c.mean_se = ses.empty() ? kNaN : sse / static_cast<double>(ses.size());
        out.cells.push_back(c);
      }
      out.raw.insert(out.raw.end(), recs.begin(), recs.end());
    };
    if (wants(Method::Pseudolik)) aggregate(pl, Method::Pseudolik, {"theta", "or"});
    if (wants(Method::GeeNonOptimal)) aggregate(nonopt, Method::GeeNonOptimal, model.free_names());
    if (wants(Method::GeeOptimal)) aggregate(opt, Method::GeeOptimal, model.free_names());
  }
  return out;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json summary_to_json(const ReplicationSummary& summary) {
  json cells = json::array();
  for (const auto& c : summary.cells) {
    cells.push_back({{"sweep_point", c.sweep_value},
                     {"method", to_string(c.method)},
                     {"parameter", c.parameter},
                     {"truth", num(c.truth)},
                     {"converged", c.converged},
                     {"failed", c.failed},
                     {"mean", num(c.mean)},
                     {"bias", num(c.bias)},
                     {"mse", num(c.mse)},
                     {"sd", num(c.sd)},
                     {"mean_se", num(c.mean_se)}});
  }
  json raw = json::array();
  for (const auto& r : summary.raw) {
    json est = json::object(), se = json::object();
    for (const auto& [k, v] : r.estimate) est[k] = num(v);
    for (const auto& [k, v] : r.se) se[k] = num(v);
    json row = {{"sweep_point", r.sweep_value}, {"replicate", r.replicate}, {"method", to_string(r.method)},
                {"ok", r.ok}, {"estimate", est}, {"se", se}};
    if (!r.ok) row["error"] = r.error;
    raw.push_back(row);
  }
  return {{"cells", cells}, {"replicates", raw}};
}

void write_tidy_csv(const ReplicationSummary& summary, std::ostream& out) {
  out << "sweep_point,method,parameter,statistic,value\n";
  for (const auto& c : summary.cells) {
    const std::pair<const char*, double> stats[] = {
        {"truth", c.truth}, {"mean", c.mean},      {"bias", c.bias},
        {"mse", c.mse},     {"sd", c.sd},          {"mean_se", c.mean_se},
        {"converged", static_cast<double>(c.converged)}, {"failed", static_cast<double>(c.failed)}};
    for (const auto& [name, v] : stats) {
      out << format_double(c.sweep_value) << ',' << to_string(c.method) << ',' << c.parameter << ',' << name << ',';
      if (std::isfinite(v)) out << format_double(v);
      out << '\n';
    }
  }
}

void save_report(const ReplicationSummary& summary, const std::string& path) {
  {
    std::ofstream f(path + ".csv", std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path + ".csv'");
    write_tidy_csv(summary, f);
  }
  std::ofstream f(path + ".json", std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + ".json'");
  f << summary_to_json(summary).dump(2) << '\n';
}

std::map<std::string, double> estimate_point(const ObservedDataset& data, const MethodSpec& spec,
                                             std::map<std::string, double>* se) {
  std::map<std::string, double> est, err;
  if (spec.method == "pseudolik") {
    const PseudoLikResult r = estimate_pseudolik(data, spec.group_size);
    if (!r.converged) throw NumericalError("pseudo-likelihood did not converge");
    est["theta"] = r.theta_hat;
    est["or"] = std::exp(r.theta_hat);
    if (spec.group_size == 2) {
      err["theta"] = r.se();
      err["or"] = or_from_theta(r.theta_hat, r.se() * r.se(), 1.0).second;
    }
  } else if (spec.method == "gee") {
    const PropensityModel pi = fit_propensity(data, spec.quadratic_pi);
    if (!pi.fitted) throw NumericalError("propensity fit failed (separation or non-convergence)");
    const MeanModel model = MeanModel::normal_linear(spec.alpha_known, spec.sigma2);
    GeeResult g = solve_gee(data, model, pi, WeightFunction::non_optimal());
    if (spec.weight == WeightKind::Optimal) g = solve_gee(data, model, pi, WeightFunction::optimal(model, pi, g.theta_hat));
    const Eigen::VectorXd s = g.se();
    for (std::size_t k = 0; k < g.names.size(); ++k) {
      est[g.names[k]] = g.theta_hat(static_cast<Eigen::Index>(k));
      err[g.names[k]] = s(static_cast<Eigen::Index>(k));
    }
  } else if (spec.method == "binary") {
    const PropensityModel pi = fit_propensity(data, false);
    if (!pi.fitted) throw NumericalError("propensity fit failed (separation or non-convergence)");
    const Binary2x2Result b = estimate_binary_2x2(data, spec.theta11, pi, spec.weight);
    if (!b.cells_valid) throw NumericalError("binary 2x2 cells outside (0, 1)");
    est = {{"theta12", b.cells[1]}, {"theta21", b.cells[2]}, {"theta22", b.cells[3]}, {"log_or", b.log_or}};
    err["log_or"] = b.log_or_se;
  } else {
    throw ConfigError("unknown method '" + spec.method + "'");
  }
  if (se) *se = err;
  return est;
}

BootstrapResult bootstrap(const ObservedDataset& data, const MethodSpec& spec, int replicates, std::uint64_t seed) {
  if (replicates < 2) throw ConfigError("bootstrap needs B >= 2");
  data.validate();
  BootstrapResult res;
  res.replicates = replicates;
  res.point = estimate_point(data, spec);
  std::map<std::string, std::vector<double>> draws;
  const std::size_t n = data.size();
  for (int b = 0; b < replicates; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    ObservedDataset rs;
    rs.x.reserve(n);
    rs.y.reserve(n);
    rs.r_x.reserve(n);
    rs.r_y.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.below(n);
      rs.x.push_back(data.x[k]);
      rs.y.push_back(data.y[k]);
      rs.r_x.push_back(data.r_x[k]);
      rs.r_y.push_back(data.r_y[k]);
    }
    try {
      const auto est = estimate_point(rs, spec);
      for (const auto& [k, v] : est) draws[k].push_back(v);
      ++res.succeeded;
    } catch (const std::exception&) {
      ++res.failed;
    }
  }
  if (res.succeeded == 0) throw NumericalError("all bootstrap resamples failed");
  for (const auto& [k, v] : draws) res.se[k] = summarize(v, 0.0).sd;
  return res;
}

}  // namespace crisscross
