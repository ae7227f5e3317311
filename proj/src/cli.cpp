#include "chronoctl/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "chronoctl/config.hpp"
#include "chronoctl/errors.hpp"
#include "chronoctl/format.hpp"

namespace chronoctl {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

json grid_json(const Grid& g) {
  return {{"dense_step", rational_to_json(g.dense_step())},
          {"points", g.size()},
          {"window", {rational_to_json(g.scale().min()), rational_to_json(g.scale().max())}},
          {"components", g.scale().components().size()}};
}

// Writes to the -o target, or to `out` when none was given.
void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot write output file '" + path + "'");
  f << text;
}

struct Common {
  std::string config;
  std::string output;
  bool timing = false;
};

// The backward form of the configured system (forward configs are dualized)
// together with its working interval.
struct Prepared {
  SystemConfig cfg;
  LinearSystem sys;
  Interval interval;
  bool dualized;
};

Prepared prepare(const std::string& path) {
  SystemConfig cfg = load_config(path);
  apply_environment(cfg);
  const bool forward = cfg.direction == Direction::forward_delta;
  if (forward) cfg = dualize_config(cfg);
  LinearSystem sys = cfg.system();
  Interval iv = cfg.interval ? *cfg.interval : working_interval(sys);
  return {std::move(cfg), std::move(sys), iv, forward};
}

json header(const char* name, const Common& c, json options) {
  return {{"command", {{"name", name}, {"config", c.config}, {"options", std::move(options)}}},
          {"version", kVersion}};
}

void finish(json& report, const Common& c, std::chrono::steady_clock::time_point start,
            std::ostream& out) {
  if (c.timing) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report["wall_time_seconds"] = dt.count();
  }
  emit(c.output, out, report.dump(2) + "\n");
}

json invertibility_json(const InvertibilityReport& r) {
  json j{{"holds", r.holds}};
  j["witness"] = r.witness ? rational_to_json(*r.witness) : json(nullptr);
  return j;
}

// --- simulate -------------------------------------------------------------

void cmd_simulate(const Common& c, std::ostream& out) {
  SystemConfig cfg = load_config(c.config);
  apply_environment(cfg);
  if (!cfg.control) throw DomainError("control required");
  if (!cfg.initial_state) throw DomainError("initial_state required");
  const LinearSystem sys = cfg.system();
  const Control u = control_from_expr(*cfg.control);
  const Interval iv = cfg.interval ? *cfg.interval : working_interval(sys);

  const bool back = sys.backward();
  const Trajectory tr = back ? solve_backward_ivp(sys, *cfg.initial_state, u, iv.lo)
                             : solve_forward_ivp(sys, *cfg.initial_state, u, iv.hi);

  std::ostringstream csv;
  csv << (back ? "s" : "t");
  for (Eigen::Index i = 0; i < sys.n(); ++i) csv << (back ? ",y_" : ",x_") << i + 1;
  for (Eigen::Index i = 0; i < sys.p(); ++i) csv << (back ? ",gamma_" : ",z_") << i + 1;
  csv << '\n';
  const std::size_t count = tr.state.size();
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = back ? count - 1 - k : k;
    csv << format_double(tr.state.grid().time(i));
    for (Eigen::Index r = 0; r < sys.n(); ++r) csv << ',' << format_double(tr.state.value(i)(r, 0));
    for (Eigen::Index r = 0; r < sys.p(); ++r) csv << ',' << format_double(tr.output.value(i)(r, 0));
    csv << '\n';
  }
  emit(c.output, out, csv.str());
}

// --- analyze --------------------------------------------------------------

struct AnalyzeOptions {
  std::string test = "both";
  std::optional<std::string> sc;
  std::optional<int> r;
};

json analyze_section(const Prepared& p, const AnalyzeOptions& o, bool controllability) {
  const LinearSystem& sys = p.sys;
  const bool constant =
      sys.A().is_constant() && (controllability ? sys.B() : sys.C()).is_constant();
  json sec;
  json tests = json::array();
  bool verdict = false;
  std::optional<GramianReport> gram;
  if (p.interval.lo < p.interval.hi) {
    gram = controllability ? controllability_gramian(sys, p.interval.lo, p.interval.hi)
                           : observability_gramian(sys, p.interval.lo, p.interval.hi);
  }

  if (constant) {
    sec["method"] = "constant";
    const RankReport kalman = controllability ? kalman_controllability(sys, p.interval)
                                              : kalman_observability(sys, p.interval);
    const RankReport pk = controllability ? pk_controllability(sys, p.interval)
                                          : pk_observability(sys, p.interval);
    tests.push_back(to_json(kalman));
    tests.push_back(to_json(pk));
    verdict = kalman.verdict == Verdict::holds;
    bool agree = pk.verdict == kalman.verdict;
    if (gram) agree = agree && (gram->verdict == kalman.verdict);
    sec["tests_agree"] = agree;
  } else {
    sec["method"] = "time-varying";
    const int r = o.r ? *o.r : static_cast<int>(std::min<Eigen::Index>(sys.n() - 1, 3));
    std::optional<RankReport> rep;
    if (o.sc) {
      Rational sc = parse_rational(*o.sc);
      if (p.dualized) sc = -sc;
      rep = controllability ? tv_controllability(sys, sc, r) : tv_observability(sys, sc, r);
    } else {
      rep = tv_scan(sys, p.interval.lo, p.interval.hi, controllability, r);
    }
    if (rep) {
      tests.push_back(to_json(*rep));
      verdict = rep->verdict == Verdict::holds;
    }
    if (!verdict && gram) {
      sec["method"] = "gramian";
      verdict = gram->verdict == Verdict::holds;
    }
  }
  sec[controllability ? "controllable" : "observable"] = verdict;
  sec["tests"] = tests;
  sec["gramian"] = gram ? to_json(*gram) : json(nullptr);
  return sec;
}

void cmd_analyze(const Common& c, const AnalyzeOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Prepared p = prepare(c.config);
  json options{{"test", o.test}};
  options["sc"] = o.sc ? json(*o.sc) : json(nullptr);
  options["r"] = o.r ? json(*o.r) : json(nullptr);
  json report = header("analyze", c, options);
  report["tolerances"] = {{"rank_relative", kRankTolerance}};
  report["grid"] = grid_json(p.sys.grid());
  report["dualized_from_forward"] = p.dualized;
  report["interval"] = {rational_to_json(p.interval.lo), rational_to_json(p.interval.hi)};
  report["progressive"] = invertibility_json(is_progressive(p.sys));
  if (o.test == "controllability" || o.test == "both") {
    report["controllability"] = analyze_section(p, o, true);
  }
  if (o.test == "observability" || o.test == "both") {
    report["observability"] = analyze_section(p, o, false);
  }
  finish(report, c, start, out);
}

// --- dualize --------------------------------------------------------------

void cmd_dualize(const Common& c, std::ostream& out) {
  const SystemConfig cfg = load_config(c.config);
  emit(c.output, out, to_json(dualize_config(cfg)).dump(2) + "\n");
}

// --- realize --------------------------------------------------------------

void write_factors(const std::string& prefix, const Factorization& f) {
  std::ofstream h(prefix + "_H.csv", std::ios::binary);
  std::ofstream fz(prefix + "_F.csv", std::ios::binary);
  if (!h || !fz) throw DomainError("cannot write factor files with prefix '" + prefix + "'");
  write_factor_csv(h, f.s_times, f.H);
  write_factor_csv(fz, f.z_times, f.F);
}

void cmd_realize(const Common& c, double tol, const std::string& factors, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Prepared p = prepare(c.config);
  const MinimalityReport m = is_minimal(p.sys, p.interval.lo, p.interval.hi, tol);
  json options{{"tol", tol}};
  options["factors"] = factors.empty() ? json(nullptr) : json(factors);
  json report = header("realize", c, options);
  report["tolerances"] = {{"rank_relative", kRankTolerance}, {"separable_rank_relative", tol}};
  report["grid"] = grid_json(p.sys.grid());
  report["dualized_from_forward"] = p.dualized;
  report["interval"] = {rational_to_json(m.s1), rational_to_json(m.s0)};
  report["progressive"] = invertibility_json(m.progressive);
  report["time_invariant"] = m.time_invariant;
  report["method"] = m.method;
  report["controllable"] = m.controllable;
  report["observable"] = m.observable;
  report["minimal"] = m.minimal;
  json tests = json::array();
  for (const auto& r : m.rank_reports) tests.push_back(to_json(r));
  report["tests"] = tests;
  json grams = json::array();
  for (const auto& g : m.gramians) grams.push_back(to_json(g));
  report["gramians"] = grams;
  report["state_dimension"] = p.sys.n();
  report["separable_rank"] = m.factorization.rank;
  report["factorization"] = to_json(m.factorization);
  report["cross_check_agrees"] = m.cross_check_agrees;
  report["note"] = "realizable at sampled resolution";
  if (!factors.empty()) write_factors(factors, m.factorization);
  finish(report, c, start, out);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "System config (JSON)")->required();
  cmd->add_option("-o,--output", c.output, "Output file (default: standard output)");
}

}  // namespace

json to_json(const RankReport& rep) {
  json j{{"test", rep.test},
         {"rows", rep.rows},
         {"cols", rep.cols},
         {"rank", rep.rank},
         {"singular_values", vector_json(rep.singular_values)},
         {"relative_threshold", rep.relative_threshold},
         {"verdict", to_string(rep.verdict)}};
  if (rep.test_point) j["test_point"] = rational_to_json(*rep.test_point);
  if (rep.order >= 0) j["order"] = rep.order;
  return j;
}

json to_json(const GramianReport& rep) {
  return {{"s1", rational_to_json(rep.s1)},
          {"s0", rational_to_json(rep.s0)},
          {"gramian", matrix_json(rep.gramian)},
          {"eigenvalues", vector_json(rep.eigenvalues)},
          {"rank", rep.rank},
          {"progressive", rep.progressive},
          {"verdict", to_string(rep.verdict)}};
}

json to_json(const Factorization& f) {
  json s = json::array(), z = json::array();
  for (const auto& t : f.s_times) s.push_back(rational_to_json(t));
  for (const auto& t : f.z_times) z.push_back(rational_to_json(t));
  return {{"rank", f.rank},
          {"residual", f.residual},
          {"kernel_norm", f.kernel_norm},
          {"tolerance", f.tolerance},
          {"singular_values", vector_json(f.singular_values)},
          {"s_points", s},
          {"z_points", z}};
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear control systems on time scales"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common sim, ana, dua, rea;
  auto* simulate = app.add_subcommand("simulate", "Solve the system and write a CSV trajectory");
  add_common(simulate, sim);

  AnalyzeOptions aopt;
  std::string sc_text;
  int r_value = -1;
  auto* analyze = app.add_subcommand("analyze", "Controllability and observability report");
  add_common(analyze, ana);
  analyze->add_option("--test", aopt.test, "controllability, observability or both")
      ->check(CLI::IsMember({"controllability", "observability", "both"}));
  analyze->add_option("--sc", sc_text, "Test point for the time-varying tests");
  analyze->add_option("--r", r_value, "Derivative order for the time-varying tests (0..3)")
      ->check(CLI::Range(0, 3));
  analyze->add_flag("--timing", ana.timing, "Include wall time in the report");

  auto* dualize = app.add_subcommand("dualize", "Write the config of the dual system");
  add_common(dualize, dua);

  double tol = 1e-8;
  std::string factors;
  auto* realize = app.add_subcommand("realize", "Minimality and weighting-pattern factorization");
  add_common(realize, rea);
  realize->add_option("--tol", tol, "Relative tolerance of the separable rank")
      ->check(CLI::PositiveNumber);
  realize->add_option("--factors", factors, "Write PREFIX_H.csv and PREFIX_F.csv");
  realize->add_flag("--timing", rea.timing, "Include wall time in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*simulate) {
      cmd_simulate(sim, out);
    } else if (*analyze) {
      if (!sc_text.empty()) aopt.sc = sc_text;
      if (r_value >= 0) aopt.r = r_value;
      cmd_analyze(ana, aopt, out);
    } else if (*dualize) {
      cmd_dualize(dua, out);
    } else if (*realize) {
      cmd_realize(rea, tol, factors, out);
    }
  } catch (const HypothesisError& e) {
    err << "error: hypothesis violated: " << e.what() << '\n';
    return exit_hypothesis;
  } catch (const NumericError& e) {
    err << "error: numeric failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const EvalError& e) {
    err << "error: evaluation failed: " << e.what() << '\n';
    return exit_numeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return exit_config;
  }
  return exit_ok;
}

}  // namespace chronoctl
