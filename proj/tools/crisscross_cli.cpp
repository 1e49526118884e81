#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "crisscross/crisscross.hpp"

using nlohmann::json;
using namespace crisscross;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + out + "'");
  f << j.dump(2) << '\n';
}

Eigen::VectorXd vec(const json& j) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// {"family_x", "family_y_given_x", "link", "known_nuisance", "theta": {...}}
FamilyTarget family_from_json(const json& j) {
  FamilyTarget t;
  try {
    t.spec.family_x = parse_x_family(j.value("family_x", std::string("normal")));
    t.spec.family_y_given_x = parse_y_family(j.value("family_y_given_x", std::string("normal")));
    t.spec.link = parse_link(j.value("link", std::string("canonical")));
    if (j.contains("known_nuisance")) t.spec.known_nuisance = j["known_nuisance"].get<std::map<std::string, double>>();
    const json th = j.value("theta", json::object());
    t.params.alpha = th.value("alpha", 0.0);
    if (th.contains("beta")) t.params.beta = vec(th["beta"]);
    t.params.phi = th.value("phi", 1.0);
    if (th.contains("eta_x")) t.params.eta_x = vec(th["eta_x"]);
    t.params.phi_x = th.value("phi_x", 1.0);
    if (th.contains("mu_x")) t.params.mu_x = vec(th["mu_x"]);
    if (th.contains("sigma_x")) {
      const auto rows = th["sigma_x"].get<std::vector<std::vector<double>>>();
      t.params.sigma_x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw ConfigError("sigma_x must be square");
        for (std::size_t c = 0; c < rows.size(); ++c)
          t.params.sigma_x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("family config: ") + e.what());
  }
  t.params.validate(t.spec);
  return t;
}

json report_json(const JacobianReport& r, const std::string& name) {
  json sets = json::array();
  for (const auto& s : r.sufficient_sets) sets.push_back(s);
  json support = json::array();
  for (const auto& p : r.support_points) support.push_back(to_json(p));
  json out = {{"param_names", r.param_names},
              {"support_points", support},
              {"k", r.k},
              {"equation_count", r.equation_count},
              {"numerical_rank", r.numerical_rank},
              {"full_rank", r.full_rank},
              {"singular_values", to_json(r.singular_values)},
              {"j_matrix", to_json(r.j_matrix)},
              {"sufficient_sets", sets}};
  if (!name.empty()) out["case"] = name;
  return out;
}

json estimates_json(const std::map<std::string, double>& est, const std::map<std::string, double>& se) {
  json e = json::object(), s = json::object();
  for (const auto& [k, v] : est) e[k] = num(v);
  for (const auto& [k, v] : se) s[k] = num(v);
  return {{"estimate", e}, {"se", s}};
}

struct EstimateArgs {
  std::string data;
  std::string method = "pseudolik";
  int group_size = 2;
  std::string f = "nonoptimal";
  std::vector<std::string> known;
  bool binary = false;
  double theta11 = 0.723;
  double sigma2 = 8.19;
  bool quadratic_pi = false;
};

void add_method_options(CLI::App* sub, EstimateArgs& a) {
  sub->add_option("--data", a.data, "input CSV (x,y,r_x,r_y)")->required();
  sub->add_option("--method", a.method, "pseudolik | gee")->check(CLI::IsMember({"pseudolik", "gee"}));
  sub->add_option("--group-size", a.group_size, "pseudo-likelihood group size (2..4)")->check(CLI::Range(2, 4));
  sub->add_option("--f", a.f, "GEE weight: nonoptimal | optimal")->check(CLI::IsMember({"nonoptimal", "optimal"}));
  sub->add_option("--known", a.known, "known parameter, e.g. alpha=-1.4");
  sub->add_flag("--binary", a.binary, "binary 2x2 GEE with X, Y coded in {1,2}");
  sub->add_option("--theta11", a.theta11, "known p(X=1, Y=1) for --binary");
  sub->add_option("--sigma2", a.sigma2, "known residual variance of X|Y");
  sub->add_flag("--quadratic-pi", a.quadratic_pi, "fit pi with an x^2 term");
}

MethodSpec method_spec(const EstimateArgs& a) {
  MethodSpec m;
  m.method = a.binary ? "binary" : a.method;
  if (a.binary && a.method != "gee") throw ConfigError("--binary requires --method gee");
  m.group_size = a.group_size;
  m.weight = a.f == "optimal" ? WeightKind::Optimal : WeightKind::NonOptimal;
  m.sigma2 = a.sigma2;
  m.quadratic_pi = a.quadratic_pi;
  m.theta11 = a.theta11;
  for (const auto& kv : a.known) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--known expects name=value, got '" + kv + "'");
    const std::string name = kv.substr(0, eq);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("bad number in --known '" + kv + "'");
    }
    if (name == "alpha") m.alpha_known = v;
    else if (name == "theta11") m.theta11 = v;
    else throw ConfigError("unsupported known parameter '" + name + "'");
  }
  if (m.method == "pseudolik" && m.alpha_known) throw ConfigError("--known alpha applies to --method gee only");
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"criss-cross MNAR model: simulation, identifiability and estimation"};
  app.fallthrough();
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  std::string out, config;
  int threads = 1;
  app.add_option("--seed", seed, "64-bit RNG seed");
  app.add_option("--out", out, "output path (stdout when omitted)");
  app.add_option("--config", config, "JSON configuration file");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a coarsened dataset as CSV");
  std::size_t sim_n = 1000;
  double sim_quad = 0.0;
  bool sim_binary = false;
  std::vector<double> sim_cells{0.723, 0.081, 0.078, 0.118};
  sim->add_option("--n", sim_n, "number of rows")->check(CLI::PositiveNumber);
  sim->add_option("--quadratic", sim_quad, "x^2 coefficient in the R_y mechanism");
  sim->add_flag("--binary", sim_binary, "binary 2x2 target");
  sim->add_option("--cells", sim_cells, "cell probabilities p11 p12 p21 p22")->expected(4);

  // identify
  auto* idf = app.add_subcommand("identify", "Jacobian rank analysis of a family configuration");
  std::string id_case;
  int id_max = -1;
  bool id_list = false;
  idf->add_option("--case", id_case, "built-in configuration (C1..C7, MVN, MULTINOMIAL)");
  idf->add_option("--max-set-size", id_max, "largest known-parameter set to search");
  idf->add_flag("--list", id_list, "list built-in configurations");

  // estimate
  auto* est = app.add_subcommand("estimate", "fit one dataset");
  EstimateArgs ea;
  add_method_options(est, ea);

  // experiment
  auto* exp = app.add_subcommand("experiment", "seeded replication study");

  // verify-counterexample
  auto* vce = app.add_subcommand("verify-counterexample", "two target laws with one observed law");
  std::string vce_variant = "corrected";
  CounterexampleOptions vce_opts;
  vce->add_option("--variant", vce_variant, "corrected | displayed_density | displayed_cdf");
  vce->add_option("--step", vce_opts.step, "grid step")->check(CLI::PositiveNumber);

  // bootstrap
  auto* boot = app.add_subcommand("bootstrap", "row-resampling standard errors");
  EstimateArgs ba;
  int boot_b = 1000;
  add_method_options(boot, ba);
  boot->add_option("--B", boot_b, "number of resamples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      SimulatedData d;
      if (sim_binary) {
        Binary2x2Model b;
        std::copy(sim_cells.begin(), sim_cells.end(), b.cells.begin());
        d = simulate_binary(b, MissingnessMechanism::standard(sim_quad), sim_n, seed);
      } else {
        ScenarioConfig sc;
        sc.mechanism = MissingnessMechanism::standard(sim_quad);
        sc.n_total = sim_n;
        sc.seed = seed;
        if (!config.empty()) {
          const json j = read_json(config);
          if (j.contains("family_x")) {
            sc.target = family_from_json(j);
          } else {
            // Reuse the experiment parser for target and mechanism blocks.
            json e = json::object();
            if (j.contains("target")) e["target"] = j["target"];
            if (j.contains("mechanism")) e["mechanism"] = j["mechanism"];
            const ExperimentConfig ec = experiment_from_json(e);
            sc.target = ec.target;
            if (j.contains("mechanism")) sc.mechanism = ec.mechanism;
          }
        }
        d = simulate_dataset(sc);
      }
      if (out.empty())
        write_csv(d.observed, std::cout);
      else
        save_dataset(d.observed, out);
      const PatternFrequencies pf = missingness_summary(d.observed);
      std::cerr << "patterns (00, 01, 10, 11): " << pf.both_missing << ' ' << pf.x_missing << ' ' << pf.y_missing
                << ' ' << pf.complete << '\n';
    } else if (*idf) {
      if (id_list) {
        emit(json(builtin_case_names()), out);
        return 0;
      }
      if (!id_case.empty()) {
        CaseConfig c = builtin_case(id_case);
        if (id_max > 0) c.max_set_size = id_max;
        emit(report_json(analyze_case(c), c.name), out);
      } else {
        if (config.empty()) throw ConfigError("identify needs --case or --config");
        const json j = read_json(config);
        const FamilyTarget t = family_from_json(j);
        if (!j.contains("support")) throw ConfigError("identify config needs a 'support' array");
        std::vector<Eigen::VectorXd> support;
        for (const auto& p : j["support"]) support.push_back(vec(p));
        const int max_set = id_max > 0 ? id_max : j.value("max_set_size", 2);
        JacobianReport r = build_jacobian(t.spec, t.params, support);
        r.sufficient_sets = sufficient_sets(r.j_matrix, r.param_names, max_set);
        json o = report_json(r, "");
        const FullLawVerdict v = full_law_verdict(t.spec);
        o["full_law"] = {{"exp_family_conditional", v.exp_family_conditional},
                         {"completeness_holds", to_string(v.completeness_holds)},
                         {"notes", v.notes}};
        emit(o, out);
      }
    } else if (*est) {
      const MethodSpec m = method_spec(ea);
      const ObservedDataset d = load_dataset(ea.data);
      std::map<std::string, double> se;
      const auto e = estimate_point(d, m, &se);
      json o = estimates_json(e, se);
      o["method"] = m.method;
      if (m.method == "pseudolik") {
        const PseudoLikResult r = estimate_pseudolik(d, m.group_size);
        o["group_size"] = m.group_size;
        o["diagnostics"] = {{"iterations", r.iterations}, {"converged", r.converged},   {"score", num(r.score)},
                            {"loglik", num(r.loglik)},   {"ties_dropped", r.ties_dropped},
                            {"a_hat", num(r.a_hat)},     {"b_hat", num(r.b_hat)},
                            {"n_complete", r.n_complete}, {"n_total", r.n_total}};
      } else {
        o["weight"] = ea.f;
        o["diagnostics"] = {{"n_total", d.n_total()}, {"n_complete", d.n_complete()}};
      }
      emit(o, out);
    } else if (*exp) {
      if (config.empty()) throw ConfigError("experiment needs --config");
      if (out.empty()) throw ConfigError("experiment needs --out <prefix>");
      ExperimentConfig c = experiment_from_json(read_json(config));
      if (app.get_option("--seed")->count()) c.base_seed = seed;
      if (app.get_option("--threads")->count()) c.threads = threads;
      const ReplicationSummary s = run_experiment(c);
      save_report(s, out);
      std::size_t failed = 0;
      for (const auto& cell : s.cells) failed += cell.failed;
      std::cerr << "wrote " << out << ".csv and " << out << ".json (" << s.cells.size() << " cells, " << failed
                << " failed fits)\n";
    } else if (*vce) {
      vce_opts.variant = parse_counterexample_variant(vce_variant);
      const CounterexampleReport r = verify_counterexample(vce_opts);
      double worst = 0.0;
      for (double v : r.max_abs_discrepancy) worst = std::max(worst, v);
      emit({{"variant", to_string(r.variant)},
            {"grid_points", r.grid_points},
            {"max_abs_discrepancy",
             {{"11", r.max_abs_discrepancy[0]},
              {"10", r.max_abs_discrepancy[1]},
              {"01", r.max_abs_discrepancy[2]},
              {"00", r.max_abs_discrepancy[3]}}},
            {"max_discrepancy", worst},
            {"pattern00_mass", r.pattern00_mass},
            {"total_mass", r.total_mass},
            {"variance_y", r.variance_y}},
           out);
    } else if (*boot) {
      const MethodSpec m = method_spec(ba);
      const ObservedDataset d = load_dataset(ba.data);
      const BootstrapResult r = bootstrap(d, m, boot_b, seed);
      json o = estimates_json(r.point, r.se);
      o["method"] = m.method;
      o["replicates"] = r.replicates;
      o["succeeded"] = r.succeeded;
      o["failed"] = r.failed;
      emit(o, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
