#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rbldp/covariance.hpp"
#include "rbldp/errors.hpp"
#include "rbldp/io.hpp"
#include "rbldp/ldp_verify.hpp"
#include "rbldp/parallel.hpp"
#include "rbldp/path_sim.hpp"
#include "rbldp/rate_solver.hpp"
#include "rbldp/rbergomi.hpp"
#include "rbldp/stats.hpp"
#include "rbldp/version.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace rbldp;

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct Options {
  double alpha = -0.25;
  double eta = 1.0;
  double rho = 0.0;
  double v0 = 0.04;
  int n = 0;        // 0: command default
  int n_paths = 0;  // 0: command default
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string format;

  double u = 0.1;
  double eps = 1.0;
  double delta = 0.01;
  std::vector<double> ladder;

  double s = 1.0;
  double t = 1.0;
  std::string kind = "zz";
  bool table = false;

  std::string mode = "auto";
  bool reduced = false;
  int starts = 8;
  std::vector<double> u_sweep;

  int min_hits = 50;
  int rate_n = 64;
  double fixed_eps = 0.0;  // 0: eps-matched reference
  std::vector<double> x = {1.0, 1.5, 2.0};
  bool absolute = false;
  double se_multiple = 3.0;
  double tol = 0.05;
  std::vector<double> a = {0.25, 0.5};
  double level = 0.01;

  ModelParams params() const { return {alpha, eta, rho, v0}; }
};

// Flags a leaf command accepts. Values come from defaults, then the JSON
// config file, then explicit flags.
class FlagSet {
 public:
  FlagSet(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {}

  template <class T>
  FlagSet& add(const std::string& name, T Options::*member, const std::string& help,
               bool echo = true) {
    CLI::Option* opt;
    if constexpr (std::is_same_v<T, bool>)
      opt = app_->add_flag("--" + name, parsed_.*member, help);
    else
      opt = app_->add_option("--" + name, parsed_.*member, help);
    if constexpr (std::is_same_v<T, std::vector<double>>) opt->delimiter(',');
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    Field f;
    f.key = key;
    f.echo = echo;
    f.from_cli = [opt, member](Options& dst, const Options& src) {
      if (opt->count() > 0) dst.*member = src.*member;
    };
    f.from_json = [member](Options& dst, const json& j) { dst.*member = j.get<T>(); };
    f.to_json = [member](const Options& o) { return json(o.*member); };
    fields_.push_back(std::move(f));
    all_keys().insert(key);
    return *this;
  }

  FlagSet& model() {
    add("alpha", &Options::alpha, "kernel exponent in (-1/2, 0)");
    add("eta", &Options::eta, "vol-of-vol, > 0");
    add("rho", &Options::rho, "spot/vol correlation in [-1, 1]");
    add("v0", &Options::v0, "initial variance, > 0");
    return *this;
  }

  FlagSet& common() {
    app_->add_option("--config", config_path_, "JSON config file; flags override its values");
    add("n", &Options::n, "grid steps on [0, 1]");
    add("seed", &Options::seed, "random seed");
    add("threads", &Options::threads, "worker threads (0: all); does not change results", false);
    add("out", &Options::out, "output path (default: stdout)", false);
    add("format", &Options::format, "json or csv");
    return *this;
  }

  Options resolve() const {
    Options o;
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) throw DomainError("cannot read config file " + config_path_);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw DomainError("config file " + config_path_ + ": " + e.what());
      }
      if (!file.is_object()) throw DomainError("config file must hold a JSON object");
      const json& cfg = file.contains("config") ? file.at("config") : file;
      for (const auto& [key, value] : cfg.items()) {
        if (key == "command") {
          if (value != command_)
            throw DomainError("config file is for command '" + value.dump() + "'");
          continue;
        }
        if (key == "version") continue;
        const auto it = std::find_if(fields_.begin(), fields_.end(),
                                     [&](const Field& f) { return f.key == key; });
        if (it == fields_.end()) {
          if (all_keys().count(key)) continue;  // belongs to another command
          throw DomainError("unknown config key '" + key + "'");
        }
        try {
          it->from_json(o, value);
        } catch (const json::exception&) {
          throw DomainError("config key '" + key + "' has the wrong type");
        }
      }
    }
    for (const auto& f : fields_) f.from_cli(o, parsed_);
    return o;
  }

  json echo(const Options& o) const {
    json j;
    j["command"] = command_;
    for (const auto& f : fields_)
      if (f.echo) j[f.key] = f.to_json(o);
    return j;
  }

  const std::string& command() const noexcept { return command_; }

 private:
  struct Field {
    std::string key;
    bool echo = true;
    std::function<void(Options&, const Options&)> from_cli;
    std::function<void(Options&, const json&)> from_json;
    std::function<json(const Options&)> to_json;
  };

  static std::set<std::string>& all_keys() {
    static std::set<std::string> keys;
    return keys;
  }

  CLI::App* app_;
  std::string command_;
  Options parsed_;
  std::string config_path_;
  std::vector<Field> fields_;
};

// ---------------------------------------------------------------------------
// Output helpers

std::string header_line(const json& echo) {
  json h;
  h["version"] = kVersion;
  h["config"] = echo;
  return h.dump();
}

json envelope(const json& echo, json result) {
  json j;
  j["version"] = kVersion;
  j["config"] = echo;
  j["result"] = std::move(result);
  return j;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot write output file " + path);
  f << text;
  if (!f) throw DomainError("failed writing output file " + path);
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

std::string format_or(Options& o, const std::string& fallback) {
  if (o.format.empty()) o.format = fallback;
  if (o.format != "json" && o.format != "csv") throw DomainError("--format must be json or csv");
  return o.format;
}

int or_default(int value, int fallback) { return value > 0 ? value : fallback; }

void check_positive(int value, const char* what) {
  if (value < 1) throw DomainError(std::string(what) + " must be positive");
}

json summary_json(std::span<const double> values) {
  const auto s = summarize(values);
  json q = json::object();
  for (std::size_t i = 0; i < s.probs.size(); ++i) {
    const long pct = std::lround(100.0 * s.probs[i]);
    q[(pct < 10 ? "q0" : "q") + std::to_string(pct)] = s.quantiles[i];
  }
  return {{"mean", s.mean}, {"std_err", s.std_err}, {"quantiles", q}};
}

McOptions mc_options(const Options& o, int n_default, int paths_default) {
  McOptions mc;
  mc.n = or_default(o.n, n_default);
  mc.n_paths = or_default(o.n_paths, paths_default);
  mc.seed = o.seed;
  mc.threads = o.threads;
  return mc;
}

// ---------------------------------------------------------------------------
// Commands

void run_simulate(const FlagSet& flags, Options o) {
  o.n = or_default(o.n, 64);
  o.n_paths = or_default(o.n_paths, 10);
  const auto format = format_or(o, "csv");
  const auto params = o.params();
  params.validate();
  if (!(o.eps > 0.0)) throw DomainError("--eps must be positive");
  const auto echo = flags.echo(o);
  const Grid grid(o.n);
  const auto factor = build_joint_cholesky(grid, params);

  std::ostringstream csv;
  write_paths_header(csv, header_line(echo));
  std::vector<double> v_end(o.n_paths), x_end(o.n_paths);
  constexpr int kChunk = 1024;
  for (int lo = 0; lo < o.n_paths; lo += kChunk) {
    const int count = std::min(kChunk, o.n_paths - lo);
    std::vector<ModelPaths> chunk(count);
    parallel_for(static_cast<std::size_t>(count), o.threads, [&](std::size_t i) {
      chunk[i] = build_model_paths(sample_path(factor, o.seed, lo + i), params, o.eps);
    });
    for (int i = 0; i < count; ++i) {
      write_paths_rows(csv, chunk[i]);
      v_end[lo + i] = chunk[i].v.back();
      x_end[lo + i] = chunk[i].x.back();
    }
  }

  json result;
  result["n_paths"] = o.n_paths;
  result["cholesky_jitter"] = factor.jitter();
  result["v_terminal"] = summary_json(v_end);
  result["x_terminal"] = summary_json(x_end);
  const auto summary = json_text(envelope(echo, result));

  if (o.out.empty()) {
    emit("", format == "csv" ? csv.str() : summary);
  } else {
    emit(o.out, csv.str());
    emit(o.out + ".summary.json", summary);
  }
}

void run_cov(const FlagSet& flags, Options o) {
  o.n = or_default(o.n, 8);
  const auto format = format_or(o, "json");
  const auto params = o.params();
  params.validate();
  const auto echo = flags.echo(o);

  if (o.table) {
    const Grid grid(o.n);
    std::vector<std::array<double, 5>> rows;
    for (int i = 1; i <= grid.n; ++i)
      for (int j = 1; j <= grid.n; ++j) {
        const double s = grid.time(i), t = grid.time(j);
        rows.push_back({s, t, cov_zz(s, t, params), cov_zw(s, t, params), std::min(s, t)});
      }
    if (format == "csv") {
      std::ostringstream os;
      os << "# " << header_line(echo) << "\ns,t,zz,zw,bb\n";
      for (const auto& r : rows)
        os << format_double(r[0]) << ',' << format_double(r[1]) << ',' << format_double(r[2]) << ','
           << format_double(r[3]) << ',' << format_double(r[4]) << '\n';
      emit(o.out, os.str());
    } else {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"s", r[0]}, {"t", r[1]}, {"zz", r[2]}, {"zw", r[3]}, {"bb", r[4]}});
      emit(o.out, json_text(envelope(echo, {{"table", arr}})));
    }
    return;
  }

  double value = 0.0;
  if (o.kind == "zz") {
    value = cov_zz(o.s, o.t, params);
  } else if (o.kind == "zw") {
    value = cov_zw(o.s, o.t, params);
  } else if (o.kind == "zb") {
    if (o.s != o.t) throw DomainError("--kind zb is defined at equal times (s = t)");
    value = cov_zb(o.t, params);
  } else if (o.kind == "bb" || o.kind == "ww") {
    if (!(o.s >= 0.0 && o.s <= 1.0 && o.t >= 0.0 && o.t <= 1.0))
      throw DomainError("times must lie in [0, 1]");
    value = std::min(o.s, o.t);
  } else {
    throw DomainError("--kind must be one of zz, zw, zb, bb, ww");
  }
  if (format == "csv") {
    std::ostringstream os;
    os << "# " << header_line(echo) << "\ns,t,kind,value\n"
       << format_double(o.s) << ',' << format_double(o.t) << ',' << o.kind << ','
       << format_double(value) << '\n';
    emit(o.out, os.str());
  } else {
    emit(o.out, json_text(envelope(echo, {{"s", o.s}, {"t", o.t}, {"kind", o.kind}, {"value", value}})));
  }
}

json rate_json(const RateResult& r) {
  json j;
  j["value"] = r.value;
  j["residual"] = r.residual;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["multistart_best_of"] = r.multistart_best_of;
  j["best_start"] = r.best_start;
  j["control"] = r.control.values;
  if (!r.control2.values.empty()) j["control2"] = r.control2.values;
  return j;
}

void run_rate(const FlagSet& flags, Options o) {
  o.n = or_default(o.n, 64);
  const auto format = format_or(o, "json");
  RateProblem problem;
  problem.params = o.params();
  problem.grid = Grid(o.n);
  problem.eps = o.eps;
  if (o.mode == "auto")
    problem.mode = o.rho == 0.0 ? RateMode::uncorrelated : RateMode::correlated;
  else if (o.mode == "correlated")
    problem.mode = RateMode::correlated;
  else if (o.mode == "uncorrelated")
    problem.mode = RateMode::uncorrelated;
  else
    throw DomainError("--mode must be auto, correlated or uncorrelated");
  if (o.reduced && problem.mode != RateMode::uncorrelated)
    throw DomainError("--reduced applies to the uncorrelated mode only");
  problem.validate();
  SolverSettings settings;
  settings.starts = o.starts;
  settings.seed = o.seed;
  check_positive(o.starts, "--starts");
  const auto echo = flags.echo(o);

  auto solve = [&](double u) {
    RateProblem p = problem;
    p.target_u = u;
    return o.reduced ? solve_endpoint_uncorrelated_reduced(p, settings) : solve_endpoint(p, settings);
  };

  if (o.u_sweep.empty()) {
    const auto r = solve(o.u);
    if (format == "csv") {
      std::ostringstream os;
      os << "# " << header_line(echo) << "\nu,value,residual,converged\n"
         << format_double(o.u) << ',' << format_double(r.value) << ',' << format_double(r.residual)
         << ',' << (r.converged ? 1 : 0) << '\n';
      emit(o.out, os.str());
    } else {
      json res{{"u", o.u}};
      res.update(rate_json(r));
      emit(o.out, json_text(envelope(echo, res)));
    }
    return;
  }

  std::vector<RateResult> results;
  for (double u : o.u_sweep) results.push_back(solve(u));
  if (format == "csv") {
    std::ostringstream os;
    os << "# " << header_line(echo) << "\nu,value,residual,converged\n";
    for (std::size_t i = 0; i < results.size(); ++i)
      os << format_double(o.u_sweep[i]) << ',' << format_double(results[i].value) << ','
         << format_double(results[i].residual) << ',' << (results[i].converged ? 1 : 0) << '\n';
    emit(o.out, os.str());
  } else {
    json arr = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      json row{{"u", o.u_sweep[i]}};
      row.update(rate_json(results[i]));
      arr.push_back(row);
    }
    emit(o.out, json_text(envelope(echo, {{"sweep", arr}})));
  }
}

void require_json(Options& o) {
  if (format_or(o, "json") != "json") throw DomainError("verify reports are JSON only");
}

void run_verify_slope(const FlagSet& flags, Options o) {
  require_json(o);
  SlopeOptions opts;
  opts.mc = mc_options(o, 64, 10000);
  opts.min_hits = o.min_hits;
  if (o.fixed_eps > 0.0) opts.fixed_eps = o.fixed_eps;
  if (o.ladder.empty()) o.ladder = {0.5, 0.35, 0.25, 0.18, 0.12};
  o.n = opts.mc.n;
  o.n_paths = opts.mc.n_paths;
  const auto params = o.params();
  const auto echo = flags.echo(o);
  const auto rep = slope_check(o.u, o.ladder, params, opts, endpoint_rate_hook(params, o.u, o.rate_n));
  json r;
  r["u"] = rep.u;
  r["ladder"] = rep.ladder;
  r["p_hat"] = rep.p_hat;
  r["std_err"] = rep.std_err;
  r["hits"] = rep.hits;
  r["log_p"] = rep.log_p;
  r["rate_per_rung"] = rep.rate_per_rung;
  r["fitted_slope"] = rep.fitted_slope;
  r["slope_std_err"] = rep.slope_std_err;
  r["intercept"] = rep.intercept;
  r["r_squared"] = rep.r_squared;
  r["rate_reference"] = rep.rate_reference;
  r["relative_gap"] = rep.relative_gap;
  r["log_p_monotone"] = rep.log_p_monotone;
  emit(o.out, json_text(envelope(echo, r)));
}

void run_verify_expequiv(const FlagSet& flags, Options o) {
  require_json(o);
  const auto mc = mc_options(o, 64, 100000);
  if (o.ladder.empty()) o.ladder = {0.5, 0.25, 0.1};
  o.n = mc.n;
  o.n_paths = mc.n_paths;
  const auto echo = flags.echo(o);
  const auto rep = exp_equiv_check(o.delta, o.ladder, o.params(), mc);
  json r;
  r["delta"] = rep.delta;
  r["n_paths"] = rep.n_paths;
  r["eps"] = rep.eps;
  r["q_hat"] = rep.q_hat;
  r["std_err"] = rep.std_err;
  r["scaled_log_q"] = json::array();
  for (double v : rep.scaled_log_q)
    r["scaled_log_q"].push_back(std::isfinite(v) ? json(v) : json(nullptr));
  r["nonincreasing"] = rep.nonincreasing;
  r["final_zero"] = rep.final_zero;
  r["pass"] = rep.pass;
  emit(o.out, json_text(envelope(echo, r)));
}

void run_verify_borell(const FlagSet& flags, Options o) {
  require_json(o);
  const auto mc = mc_options(o, 512, 100000);
  o.n = mc.n;
  o.n_paths = mc.n_paths;
  const auto echo = flags.echo(o);
  const auto rep = borell_tis_check(o.x, o.params(), mc, !o.absolute, o.se_multiple);
  json r;
  r["m_hat"] = rep.m_hat;
  r["m_std_err"] = rep.m_std_err;
  r["sigma2"] = rep.sigma2;
  r["x"] = rep.x;
  r["p_hat"] = rep.p_hat;
  r["std_err"] = rep.std_err;
  r["bound"] = rep.bound;
  r["holds"] = rep.holds;
  r["pass"] = rep.pass;
  emit(o.out, json_text(envelope(echo, r)));
}

void run_verify_holder(const FlagSet& flags, Options o) {
  require_json(o);
  const auto mc = mc_options(o, 1024, 1000);
  o.n = mc.n;
  o.n_paths = mc.n_paths;
  const auto echo = flags.echo(o);
  const auto rep = holder_check(o.params(), mc, o.tol);
  emit(o.out, json_text(envelope(echo, {{"target", rep.target},
                                        {"mean", rep.mean},
                                        {"std_err", rep.std_err},
                                        {"tolerance", rep.tolerance},
                                        {"pass", rep.pass}})));
}

void run_verify_selfsim(const FlagSet& flags, Options o) {
  require_json(o);
  const auto mc = mc_options(o, 64, 100000);
  o.n = mc.n;
  o.n_paths = mc.n_paths;
  const auto echo = flags.echo(o);
  const auto rep = selfsim_check(o.a, o.params(), mc, o.level);
  json r;
  r["a"] = rep.a;
  r["sample_variance"] = rep.sample_variance;
  r["theory_variance"] = rep.theory_variance;
  r["ks_statistic"] = rep.ks_statistic;
  r["p_value"] = rep.p_value;
  r["level"] = rep.level;
  r["pass"] = rep.pass;
  emit(o.out, json_text(envelope(echo, r)));
}

using Runner = std::function<void(const FlagSet&, Options)>;

struct Leaf {
  CLI::App* app;
  std::unique_ptr<FlagSet> flags;
  Runner run;
};

int run_main(int argc, char** argv) {
  CLI::App app{"Rough Bergomi simulation, small-noise rate functions and Monte Carlo checks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::vector<Leaf> leaves;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& command,
                  const std::string& help, Runner run) -> FlagSet& {
    auto* sub = parent->add_subcommand(name, help);
    leaves.push_back({sub, std::make_unique<FlagSet>(sub, command), std::move(run)});
    auto& f = *leaves.back().flags;
    f.model().common();
    return f;
  };

  leaf(&app, "simulate", "simulate", "sample driver and model paths (CSV) with a summary (JSON)",
       run_simulate)
      .add("n-paths", &Options::n_paths, "number of replicas")
      .add("eps", &Options::eps, "noise level of the rescaled model");

  leaf(&app, "cov", "cov", "closed-form covariances", run_cov)
      .add("s", &Options::s, "first time")
      .add("t", &Options::t, "second time")
      .add("kind", &Options::kind, "zz, zw, zb, bb or ww")
      .add("table", &Options::table, "tabulate on the grid nodes instead");

  leaf(&app, "rate", "rate", "endpoint rate function", run_rate)
      .add("u", &Options::u, "endpoint target")
      .add("eps", &Options::eps, "evaluation point of the variance map")
      .add("mode", &Options::mode, "auto, correlated or uncorrelated")
      .add("reduced", &Options::reduced, "closed-form inner minimization (uncorrelated mode)")
      .add("starts", &Options::starts, "multistart count")
      .add("u-sweep", &Options::u_sweep, "comma-separated targets; emits a sweep");

  auto* verify = app.add_subcommand("verify", "Monte Carlo checks of the small-noise regime");
  verify->require_subcommand(1);
  leaf(verify, "slope", "verify slope", "log-tail slope against the rate function",
       run_verify_slope)
      .add("n-paths", &Options::n_paths, "replicas per rung")
      .add("u", &Options::u, "tail level")
      .add("ladder", &Options::ladder, "strictly decreasing maturities")
      .add("min-hits", &Options::min_hits, "minimum hits per rung")
      .add("rate-n", &Options::rate_n, "grid steps of the rate solver")
      .add("fixed-eps", &Options::fixed_eps, "single reference evaluation point (0: eps-matched)");
  leaf(verify, "expequiv", "verify expequiv", "drift exceedance frequencies", run_verify_expequiv)
      .add("n-paths", &Options::n_paths, "replicas")
      .add("delta", &Options::delta, "exceedance level")
      .add("ladder", &Options::ladder, "strictly decreasing noise levels");
  leaf(verify, "borell", "verify borell", "Borell-TIS bound for sup Z", run_verify_borell)
      .add("n-paths", &Options::n_paths, "replicas")
      .add("x", &Options::x, "levels (offsets above the sample mean of sup Z)")
      .add("absolute", &Options::absolute, "read --x as absolute levels")
      .add("se-multiple", &Options::se_multiple, "allowed standard errors above the bound");
  leaf(verify, "holder", "verify holder", "variogram roughness of log v", run_verify_holder)
      .add("n-paths", &Options::n_paths, "replicas")
      .add("tol", &Options::tol, "tolerance around alpha + 1/2");
  leaf(verify, "selfsim", "verify selfsim", "KS test of scaled marginals", run_verify_selfsim)
      .add("n-paths", &Options::n_paths, "replicas")
      .add("a", &Options::a, "grid-node times")
      .add("level", &Options::level, "test level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  for (auto& l : leaves)
    if (l.app->parsed()) {
      const Options o = l.flags->resolve();
      if (o.n_paths < 0) throw DomainError("--n-paths must be positive");
      if (o.n < 0) throw DomainError("--n must be positive");
      if (o.threads < 0) throw DomainError("--threads must be non-negative");
      l.run(*l.flags, o);
      return 0;
    }
  return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
