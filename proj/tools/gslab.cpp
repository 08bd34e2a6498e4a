// gslab: command-line front end for the critical greedy-server laboratory.
//
// Subcommands
//   simulate      one chain trajectory -> JSON-lines or CSV
//   estimate      Monte Carlo estimators over replica ensembles
//   oracle-check  integer chain vs event-driven continuous simulation
//   sample-zeta   raw first-passage service-time draws
//
// Conventions
//   * every subcommand takes --seed (environment fallback GSL_SEED) and an
//     optional --config FILE of plain key=value lines; command-line flags
//     override file entries, unknown keys are rejected;
//   * the full effective configuration is echoed to stdout ("config: {...}")
//     and embedded in every output file header;
//   * exit codes: 0 success, 1 statistical failure, 2 invalid arguments or
//     configuration, 3 exact-mode horizon or sampling-budget exhaustion;
//   * log-domain values in summaries carry a "_log" key suffix; trajectory
//     records keep their native column names log_tau / log_T.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gslab/chain.hpp"
#include "gslab/experiments.hpp"
#include "gslab/hitting.hpp"
#include "gslab/io.hpp"
#include "gslab/rng.hpp"
#include "gslab/special.hpp"

namespace {

using nlohmann::json;

unsigned default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

// Options shared by every subcommand.
struct CommonOpts {
  std::uint64_t seed = 1;
  double lambda = 1.0;
  unsigned threads = default_threads();
  std::string out;
  std::string format;
  std::string config_file;  // consumed before parsing; bound for --help only
};

void add_common(CLI::App* sub, CommonOpts& o, const std::string& default_format,
                const std::vector<std::string>& formats) {
  sub->add_option("--seed", o.seed, "base seed for all derived streams")
      ->envname("GSL_SEED")
      ->capture_default_str();
  sub->add_option("--lambda", o.lambda, "arrival rate per site")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--threads", o.threads,
                  "worker threads (results are independent of the count)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--out", o.out, "output file path");
  o.format = default_format;
  sub->add_option("--format", o.format, "output file format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  sub->add_option("--config", o.config_file,
                  "plain key=value file of this subcommand's options; "
                  "explicit flags take precedence, unknown keys are errors");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Read a key=value file into synthetic "--key=value" arguments.
std::vector<std::string> read_config_entries(const std::string& path) {
  std::istringstream in(gslab::read_text_file(path));
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    }
    out.push_back("--" + trim(s.substr(0, eq)) + "=" + trim(s.substr(eq + 1)));
  }
  return out;
}

// Replace "--config FILE" with the file's entries, inserted right after the
// subcommand token.  Every option uses a take-last policy, so entries coming
// before the explicit flags means the flags win; unknown keys surface as
// unknown-option parse errors.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> files;
  std::vector<std::string> cleaned;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        throw std::invalid_argument("--config requires a file path");
      }
      files.push_back(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      files.push_back(args[i].substr(9));
    } else {
      cleaned.push_back(args[i]);
    }
  }
  if (files.empty()) return cleaned;

  std::vector<std::string> entries;
  for (const auto& f : files) {
    const auto e = read_config_entries(f);
    entries.insert(entries.end(), e.begin(), e.end());
  }
  std::size_t pos = 0;  // insert after the first non-flag token (subcommand)
  while (pos < cleaned.size() && !cleaned[pos].empty() &&
         cleaned[pos][0] == '-') {
    ++pos;
  }
  if (pos == cleaned.size()) {
    throw std::invalid_argument("--config requires a subcommand");
  }
  cleaned.insert(cleaned.begin() + pos + 1, entries.begin(), entries.end());
  return cleaned;
}

void echo_config(const json& cfg, std::ostream& os = std::cout) {
  os << "config: " << cfg.dump() << "\n";
}

void maybe_write(const CommonOpts& o, const std::string& text) {
  if (o.out.empty()) return;
  gslab::write_text_file(o.out, text);
  std::cout << "wrote " << o.out << "\n";
}

std::string json_file_text(json j) { return j.dump(2) + "\n"; }

gslab::ChainMode parse_mode(const std::string& s) {
  return s == "exact" ? gslab::ChainMode::Exact : gslab::ChainMode::Asymptotic;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  CommonOpts common;
  std::uint64_t n_steps = 10;
  std::string mode = "asymptotic";
  std::uint64_t handoff = 6;
  std::uint64_t zeta_budget = 0;  // 0 = unbounded
  std::uint64_t walk_cap = 0;     // 0 = unbounded exact walk
  bool secondary_turn_term = false;
};

int cmd_simulate(const SimulateOpts& o) {
  gslab::RunSpec spec;
  spec.n_steps = o.n_steps;
  spec.mode = parse_mode(o.mode);
  spec.handoff_n = std::min(o.handoff, o.n_steps);
  spec.seed = o.common.seed;
  spec.sampler.params.lambda = o.common.lambda;
  spec.sampler.walk_cap = o.walk_cap;
  if (o.zeta_budget > 0) spec.zeta_budget = o.zeta_budget;
  spec.secondary_turn_term = o.secondary_turn_term;

  const json cfg = {{"command", "simulate"},
                    {"n_steps", o.n_steps},
                    {"mode", o.mode},
                    {"handoff_n", o.handoff},
                    {"seed", o.common.seed},
                    {"lambda", o.common.lambda},
                    {"zeta_budget", o.zeta_budget},
                    {"walk_cap", o.walk_cap},
                    {"secondary_turn_term", o.secondary_turn_term},
                    {"format", o.common.format}};

  // With no --out the trajectory itself goes to stdout, so the chatter moves
  // to stderr to keep the data stream clean.
  std::ostream& info = o.common.out.empty() ? std::cerr : std::cout;
  echo_config(cfg, info);

  const gslab::Trajectory traj = gslab::run(spec);

  std::ostringstream body;
  if (o.common.format == "csv") {
    gslab::write_trajectory_csv(traj, body, cfg);
  } else {
    gslab::write_trajectory_jsonl(traj, body, cfg);
  }
  if (o.common.out.empty()) {
    std::cout << body.str();
  } else {
    gslab::write_text_file(o.common.out, body.str());
    info << "wrote " << o.common.out << "\n";
  }

  std::uint64_t turns = 0;
  for (const auto& rec : traj.records) turns += rec.turn ? 1 : 0;
  const auto& last = traj.records.back();
  json summary = {{"final_x", last.x},
                  {"final_eta", last.eta},
                  {"turns", turns},
                  {"final_tau_log", last.log_tau},
                  {"final_t_log", last.log_t},
                  {"n_steps", o.n_steps},
                  {"gaussian_poisson_used", traj.gaussian_poisson_used}};
  if (traj.handoff_n) summary["handoff_n"] = *traj.handoff_n;
  info << "summary: " << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOpts {
  CommonOpts common;
  std::string name;
  std::string mode = "asymptotic";
  std::uint64_t handoff = 6;
  std::uint64_t walk_cap = gslab::kEstimatorWalkCap;
  std::uint64_t n = 20;              // turning
  std::uint64_t n_max = 0;           // 0 = per-estimator default
  std::uint64_t replicas = 0;        // 0 = per-estimator default
  double kappa = 1e4;                // poisson-diff
  std::uint64_t samples = 0;         // poisson-diff / levy-ks
  std::uint64_t k = 50;              // levy-ks
  std::uint64_t budget = 6400000000; // levy-ks jump budget per draw
  std::uint64_t pairs = 1000000;     // quarter
  std::string calibration;           // lil / recurrence reference band file
};

gslab::ExperimentOptions make_experiment_options(const EstimateOpts& o) {
  gslab::ExperimentOptions opts;
  opts.mode = parse_mode(o.mode);
  opts.handoff_n = o.handoff;
  opts.sampler.params.lambda = o.common.lambda;
  opts.sampler.walk_cap = o.walk_cap;
  opts.threads = o.common.threads;
  return opts;
}

json estimate_config(const EstimateOpts& o, std::uint64_t n_max,
                     std::uint64_t replicas) {
  return {{"command", "estimate"},   {"name", o.name},
          {"mode", o.mode},          {"handoff_n", o.handoff},
          {"seed", o.common.seed},   {"lambda", o.common.lambda},
          {"threads", o.common.threads}, {"walk_cap", o.walk_cap},
          {"n_max", n_max},          {"replicas", replicas},
          {"format", o.common.format}};
}

std::uint64_t pick(std::uint64_t value, std::uint64_t fallback) {
  return value > 0 ? value : fallback;
}

void require_json_format(const EstimateOpts& o) {
  if (o.common.format == "csv") {
    throw std::invalid_argument("estimate " + o.name +
                                ": csv output is only available for "
                                "series-valued estimators");
  }
}

gslab::WalkCalibration load_calibration(const std::string& path) {
  return gslab::calibration_from_json(json::parse(gslab::read_text_file(path)));
}

int run_estimate(const EstimateOpts& o) {
  const auto finish = [&](json out, const std::string& csv_text) {
    if (o.common.format == "csv") {
      maybe_write(o.common, csv_text);
    } else {
      maybe_write(o.common, json_file_text(std::move(out)));
    }
    return 0;
  };

  if (o.name == "turning") {
    require_json_format(o);
    const std::uint64_t R = pick(o.replicas, 10000);
    const json cfg = estimate_config(o, o.n, R);
    echo_config(cfg);
    const gslab::EstimateResult res =
        gslab::estimate_turning(o.n, R, o.common.seed, make_experiment_options(o));
    std::printf("turning frequency at n=%" PRIu64 ": %.6f +- %.6f (target 0.25)\n",
                o.n, res.point, res.std_error);
    json out = gslab::to_json(res);
    out["config"] = cfg;
    return finish(std::move(out), {});
  }

  if (o.name == "tau-growth") {
    const std::uint64_t n_max = pick(o.n_max, 50);
    const std::uint64_t R = pick(o.replicas, 1000);
    const json cfg = estimate_config(o, n_max, R);
    echo_config(cfg);
    const gslab::TauGrowthResult res = gslab::tau_growth_series(
        n_max, R, o.common.seed, make_experiment_options(o));
    const auto& tail = res.series.points.back();
    std::printf("mean log log tau_n / n at n=%" PRIu64
                ": %.6f +- %.6f (target log 2 = %.6f)\n",
                n_max, tail.value, tail.std_error, std::log(2.0));
    std::printf("growth constant log(tau_n)/2^n: median %.6g over %" PRIu64
                " replicas\n",
                gslab::sample_quantile(res.gamma_hat, 0.5), R);
    json out = gslab::to_json(res);
    out["config"] = cfg;
    std::ostringstream csv;
    gslab::write_series_csv(res.series, csv, cfg);
    return finish(std::move(out), csv.str());
  }

  if (o.name == "martingale") {
    const std::uint64_t n_max = pick(o.n_max, 20);
    const std::uint64_t R = pick(o.replicas, 10000);
    const json cfg = estimate_config(o, n_max, R);
    echo_config(cfg);
    const gslab::MartingaleAudit res = gslab::martingale_audit(
        n_max, R, o.common.seed, make_experiment_options(o));
    const auto& tail = res.rows.back();
    std::printf("martingale increment at n=%" PRIu64
                ": mean %.6f +- %.6f (target 0); second moment %.6f (target "
                "3); max |increment| = %.0f (bound 3)\n",
                n_max, tail.mean_increment, tail.increment_std_error,
                tail.second_moment, res.max_abs_increment);
    json out = gslab::to_json(res);
    out["config"] = cfg;
    std::ostringstream csv;
    gslab::write_martingale_csv(res, csv, cfg);
    return finish(std::move(out), csv.str());
  }

  if (o.name == "lil") {
    const std::uint64_t n_max = pick(o.n_max, 10000);
    const std::uint64_t R = pick(o.replicas, 200);
    const json cfg = estimate_config(o, n_max, R);
    echo_config(cfg);
    const gslab::LilResult res =
        gslab::lil_scaling(n_max, R, o.common.seed, make_experiment_options(o));
    std::printf("median over %" PRIu64 " replicas of max_{100<=n<=%" PRIu64
                "} |X_n| / sqrt(6 n log log n): %.6f\n",
                R, n_max, res.median_max);
    std::printf("(limit constant 1 in the step scale; the time-scale "
                "normalizer uses sqrt(6/log 2) = %.6f)\n",
                gslab::lil_time_prefactor());
    int exit_code = 0;
    json out = gslab::to_json(res);
    if (!o.calibration.empty()) {
      const gslab::WalkCalibration cal = load_calibration(o.calibration);
      const bool inside =
          res.median_max >= cal.lil_q05 && res.median_max <= cal.lil_q95;
      std::printf("reference band [%.6f, %.6f] from %s: %s\n", cal.lil_q05,
                  cal.lil_q95, o.calibration.c_str(),
                  inside ? "inside" : "OUTSIDE");
      out["reference_band"] = {{"q05", cal.lil_q05},
                               {"q95", cal.lil_q95},
                               {"inside", inside}};
      if (!inside) exit_code = 1;
    }
    out["config"] = cfg;
    std::ostringstream csv;
    gslab::write_series_csv(res.mean_series, csv, cfg);
    finish(std::move(out), csv.str());
    return exit_code;
  }

  if (o.name == "nt") {
    const std::uint64_t n_max = pick(o.n_max, 40);
    const std::uint64_t R = pick(o.replicas, 1000);
    const json cfg = estimate_config(o, n_max, R);
    echo_config(cfg);
    const gslab::ScalingSeries res =
        gslab::nt_scaling(n_max, R, o.common.seed, make_experiment_options(o));
    const auto& tail = res.points.back();
    std::printf("mean n / log log T_n at n=%" PRIu64
                ": %.6f +- %.6f (target 1/log 2 = %.6f)\n",
                n_max, tail.value, tail.std_error, 1.0 / std::log(2.0));
    json out = gslab::to_json(res);
    out["config"] = cfg;
    std::ostringstream csv;
    gslab::write_series_csv(res, csv, cfg);
    return finish(std::move(out), csv.str());
  }

  if (o.name == "recurrence") {
    require_json_format(o);
    const std::uint64_t n_max = pick(o.n_max, 10000);
    const std::uint64_t R = pick(o.replicas, 1000);
    const json cfg = estimate_config(o, n_max, R);
    echo_config(cfg);
    const gslab::RecurrenceResult res = gslab::recurrence_stats(
        n_max, R, o.common.seed, make_experiment_options(o));
    std::printf("mean returns to 0 by n=%" PRIu64 ": %.3f +- %.3f\n", n_max,
                res.mean_returns, res.returns_std_error);
    std::printf("fraction of replicas changing sign in the final half: %.4f "
                "+- %.4f\n",
                res.sign_change_fraction, res.fraction_std_error);
    int exit_code = 0;
    json out = gslab::to_json(res);
    if (!o.calibration.empty()) {
      const gslab::WalkCalibration cal = load_calibration(o.calibration);
      const bool met = res.mean_returns >= cal.returns_bound;
      std::printf("reference bound %.3f from %s: %s\n", cal.returns_bound,
                  o.calibration.c_str(), met ? "met" : "NOT met");
      out["reference_bound"] = {{"bound", cal.returns_bound}, {"met", met}};
      if (!met) exit_code = 1;
    }
    out["config"] = cfg;
    finish(std::move(out), {});
    return exit_code;
  }

  if (o.name == "poisson-diff") {
    require_json_format(o);
    const std::uint64_t n = pick(o.samples, 1000000);
    json cfg = estimate_config(o, 0, 0);
    cfg["kappa"] = o.kappa;
    cfg["samples"] = n;
    echo_config(cfg);
    const gslab::DistanceReport res =
        gslab::poisson_diff_distance(o.kappa, n, o.common.seed);
    const double mid = gslab::poisson_diff_midcdf_zero(o.kappa, n, o.common.seed);
    std::printf("sup distance to N(0,2) at kappa=%g: %.6f (mc stderr %.6f, "
                "%" PRIu64 " samples)\n",
                o.kappa, res.ks_statistic, res.mc_stderr, n);
    std::printf("mid-distribution value at 0: %.6f (target 0.5)\n", mid);
    json out = gslab::to_json(res);
    out["midcdf_zero"] = mid;
    out["config"] = cfg;
    return finish(std::move(out), {});
  }

  if (o.name == "levy-ks") {
    require_json_format(o);
    const std::uint64_t n = pick(o.samples, 100000);
    json cfg = estimate_config(o, 0, 0);
    cfg["k"] = o.k;
    cfg["samples"] = n;
    cfg["budget"] = o.budget;
    echo_config(cfg);
    gslab::HittingSampler sampler;
    sampler.params.lambda = o.common.lambda;
    sampler.method = gslab::ZetaMethod::ExactWalk;
    const gslab::DistanceReport res =
        gslab::ks_distance_to_levy(o.k, n, o.common.seed, sampler, o.budget);
    std::printf("KS distance of 2*lambda*zeta/k^2 to the limit law at k=%" PRIu64
                ": %.6f (mc stderr %.6f, %" PRIu64 " samples, %" PRIu64
                " redraws)\n",
                o.k, res.ks_statistic, res.mc_stderr, n, res.redraws);
    json out = gslab::to_json(res);
    out["config"] = cfg;
    return finish(std::move(out), {});
  }

  if (o.name == "quarter") {
    require_json_format(o);
    json cfg = estimate_config(o, 0, 0);
    cfg["pairs"] = o.pairs;
    echo_config(cfg);
    const double quad = gslab::quarter_quadrature();
    std::printf("%.6f (target 0.25)\n", quad);
    // Monte Carlo cross-check: P(Z sqrt(S) > 1) with S = 1/Z'^2 reduces to
    // P(Z > |Z'|) for independent standard normals.
    gslab::RngStream rng =
        gslab::RngStream::derive(o.common.seed, "quarter.mc", 0);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < o.pairs; ++i) {
      const double z = rng.normal();
      const double zp = rng.normal();
      if (z > std::abs(zp)) ++hits;
    }
    const double mc = static_cast<double>(hits) / static_cast<double>(o.pairs);
    const double se =
        std::sqrt(0.25 * 0.75 / static_cast<double>(o.pairs));
    std::printf("monte carlo with %" PRIu64 " pairs: %.6f +- %.6f\n", o.pairs,
                mc, se);
    json out = {{"label", "quarter"},
                {"quadrature", quad},
                {"mc_point", mc},
                {"mc_stderr", se},
                {"pairs", o.pairs},
                {"seed", o.common.seed},
                {"config", cfg}};
    return finish(std::move(out), {});
  }

  throw std::invalid_argument("unknown estimator '" + o.name +
                              "'; expected one of turning, tau-growth, "
                              "martingale, lil, nt, recurrence, poisson-diff, "
                              "levy-ks, quarter");
}

// ---------------------------------------------------------------------------
// oracle-check

struct OracleOpts {
  CommonOpts common;
  double mu = 1.0;
  double t_max = 10000.0;
  std::uint64_t replicas = 10000;
  std::uint64_t sites = 4;
};

int cmd_oracle_check(const OracleOpts& o) {
  const json cfg = {{"command", "oracle-check"}, {"lambda", o.common.lambda},
                    {"mu", o.mu},               {"t_max", o.t_max},
                    {"replicas", o.replicas},   {"sites", o.sites},
                    {"seed", o.common.seed},    {"threads", o.common.threads},
                    {"format", o.common.format}};
  echo_config(cfg);

  if (o.common.lambda == o.mu) {
    const gslab::OracleComparison cmp = gslab::compare_chain_to_oracle(
        o.sites, o.replicas, o.t_max, o.common.lambda, o.common.seed,
        o.common.threads);
    std::printf("chain vs continuous oracle on the first %" PRIu64
                " emptied-site directions (lambda = mu = %g):\n",
                o.sites, o.common.lambda);
    std::printf("  conditioned on T_%" PRIu64 " <= %g: chain %" PRIu64
                "/%" PRIu64 ", oracle %" PRIu64 "/%" PRIu64 "\n",
                o.sites, o.t_max, cmp.n_chain, cmp.n_replicas, cmp.n_oracle,
                cmp.n_replicas);
    std::printf("  chi-square = %.3f (dof %" PRIu64 "), p = %.6f\n",
                cmp.chi_square, cmp.dof, cmp.p_value);
    const bool pass = cmp.p_value > 0.001;
    std::printf("%s (threshold: p > 0.001)\n", pass ? "PASS" : "FAIL");
    json out = {{"label", "oracle_check"},
                {"chi_square", cmp.chi_square},
                {"p_value", cmp.p_value},
                {"dof", cmp.dof},
                {"n_chain", cmp.n_chain},
                {"n_oracle", cmp.n_oracle},
                {"n_replicas", cmp.n_replicas},
                {"sites", cmp.sites},
                {"t_max", cmp.t_max},
                {"lambda", cmp.lambda},
                {"seed", cmp.seed},
                {"pass", pass},
                {"config", cfg}};
    maybe_write(o.common, json_file_text(std::move(out)));
    return pass ? 0 : 1;
  }

  // Off-critical regimes have no integer-chain counterpart; report what the
  // continuous simulation does instead of comparing.
  const gslab::RegimeReport rep = gslab::oracle_regime_report(
      o.common.lambda, o.mu, o.t_max, o.replicas, o.common.seed,
      o.common.threads);
  std::printf("off-critical regime (lambda = %g, mu = %g, t_max = %g, %" PRIu64
              " replicas):\n",
              rep.lambda, rep.mu, rep.t_max, rep.n_replicas);
  std::printf("  stuck fraction (no emptying in the final half-run): %.4f\n",
              rep.stuck_fraction);
  std::printf("  mean emptyings per replica: %.3f\n", rep.mean_emptyings);
  json out = {{"label", "oracle_regime"},
              {"stuck_fraction", rep.stuck_fraction},
              {"mean_emptyings", rep.mean_emptyings},
              {"n_replicas", rep.n_replicas},
              {"t_max", rep.t_max},
              {"lambda", rep.lambda},
              {"mu", rep.mu},
              {"seed", rep.seed},
              {"config", cfg}};
  maybe_write(o.common, json_file_text(std::move(out)));
  return 0;
}

// ---------------------------------------------------------------------------
// sample-zeta

struct ZetaOpts {
  CommonOpts common;
  std::uint64_t k = 5;
  std::uint64_t samples = 1000;
  std::string method = "auto";
  std::uint64_t budget = 0;  // per-draw jump budget; exceeding it aborts
  std::uint64_t cap = 0;     // capped-continuation round size (0 = unbounded)
};

int cmd_sample_zeta(const ZetaOpts& o) {
  const json cfg = {{"command", "sample-zeta"}, {"k", o.k},
                    {"samples", o.samples},     {"method", o.method},
                    {"budget", o.budget},       {"walk_cap", o.cap},
                    {"seed", o.common.seed},    {"lambda", o.common.lambda},
                    {"format", o.common.format}};
  std::ostream& info = o.common.out.empty() ? std::cerr : std::cout;
  echo_config(cfg, info);

  gslab::HittingSampler sampler;
  sampler.params.lambda = o.common.lambda;
  sampler.method = o.method == "walk"   ? gslab::ZetaMethod::ExactWalk
                   : o.method == "levy" ? gslab::ZetaMethod::LevyApprox
                                        : gslab::ZetaMethod::Auto;
  sampler.walk_cap = o.cap;

  gslab::RngStream rng =
      gslab::RngStream::derive(o.common.seed, "zeta.sample", 0);
  std::vector<double> samples(o.samples);
  const std::optional<std::uint64_t> budget =
      o.budget > 0 ? std::optional<std::uint64_t>(o.budget) : std::nullopt;
  for (auto& v : samples) v = gslab::sample_zeta(o.k, sampler, rng, budget);

  std::ostringstream body;
  if (o.common.format == "jsonl") {
    body << json{{"type", "zeta_samples"}, {"config", cfg}}.dump() << "\n";
    for (double v : samples) body << json{{"sample", v}}.dump() << "\n";
  } else {
    body << "# config=" << cfg.dump() << "\n" << "sample\n";
    char buf[64];
    for (double v : samples) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      body << buf;
    }
  }
  if (o.common.out.empty()) {
    std::cout << body.str();
  } else {
    gslab::write_text_file(o.common.out, body.str());
    info << "wrote " << o.common.out << "\n";
  }

  // The normalized variable 2*lambda*zeta/k^2 has a heavy (infinite-mean)
  // tail, so the summary reports quartiles, not means.
  std::vector<double> norm = samples;
  const double scale = 2.0 * o.common.lambda /
                       (static_cast<double>(o.k) * static_cast<double>(o.k));
  for (double& v : norm) v *= scale;
  char line[256];
  std::snprintf(line, sizeof line,
                "summary: k=%" PRIu64 ", %" PRIu64
                " draws; normalized quartiles [%.4f, %.4f, %.4f]; limit-law "
                "median %.6f\n",
                o.k, o.samples, gslab::sample_quantile(norm, 0.25),
                gslab::sample_quantile(norm, 0.5),
                gslab::sample_quantile(norm, 0.75), gslab::levy_median());
  info << line;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for the critical greedy server on the "
               "integer lattice"};
  app.require_subcommand(1);
  // Later occurrences of an option win, so config-file entries (inserted
  // before the explicit flags) are overridden by them.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SimulateOpts sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "run one chain trajectory");
  add_common(sim_cmd, sim.common, "jsonl", {"jsonl", "csv"});
  sim_cmd->add_option("--n-steps", sim.n_steps, "emptying steps to simulate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--mode", sim.mode, "integer-exact or renormalized")
      ->check(CLI::IsMember({"exact", "asymptotic"}))
      ->capture_default_str();
  sim_cmd
      ->add_option("--handoff", sim.handoff,
                   "asymptotic mode: exact steps before the recursion")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--zeta-budget", sim.zeta_budget,
                      "abort if one service draw exceeds this many jumps "
                      "(0 = unbounded)");
  sim_cmd->add_option("--walk-cap", sim.walk_cap,
                      "bounded-cost service draws: continuation round size "
                      "(0 = exact unbounded walk)");
  sim_cmd->add_flag("--secondary-turn-term", sim.secondary_turn_term,
                    "include the vanishing secondary term in renormalized "
                    "direction decisions");

  EstimateOpts est;
  CLI::App* est_cmd =
      app.add_subcommand("estimate", "Monte Carlo estimators over replicas");
  add_common(est_cmd, est.common, "json", {"json", "csv"});
  est_cmd->add_option("name", est.name,
                      "turning | tau-growth | martingale | lil | nt | "
                      "recurrence | poisson-diff | levy-ks | quarter")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
  est_cmd->add_option("--mode", est.mode, "chain mode for replica runs")
      ->check(CLI::IsMember({"exact", "asymptotic"}))
      ->capture_default_str();
  est_cmd
      ->add_option("--handoff", est.handoff,
                   "exact steps before the renormalized recursion")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--walk-cap", est.walk_cap,
                      "service-draw continuation round size (0 = unbounded)")
      ->capture_default_str();
  est_cmd->add_option("--n", est.n, "step index (turning)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--n-max", est.n_max,
                      "largest step index (series estimators)")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--replicas", est.replicas, "replica count")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--kappa", est.kappa, "Poisson mean (poisson-diff)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--samples", est.samples,
                      "sample count (poisson-diff, levy-ks)")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--k", est.k, "initial customer count (levy-ks)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--budget", est.budget,
                      "per-draw jump budget before redraw (levy-ks)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--pairs", est.pairs, "Monte Carlo pairs (quarter)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  est_cmd->add_option("--calibration", est.calibration,
                      "reference-walk calibration file (lil, recurrence)");

  OracleOpts ora;
  CLI::App* ora_cmd = app.add_subcommand(
      "oracle-check", "compare the chain with the continuous simulation");
  add_common(ora_cmd, ora.common, "json", {"json"});
  ora_cmd->add_option("--mu", ora.mu, "service rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ora_cmd->add_option("--t-max", ora.t_max, "continuous-time horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ora_cmd->add_option("--replicas", ora.replicas, "replicas per side")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  ora_cmd->add_option("--sites", ora.sites,
                      "emptied sites whose directions are compared")
      ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{16}))
      ->capture_default_str();

  ZetaOpts zet;
  CLI::App* zet_cmd =
      app.add_subcommand("sample-zeta", "draw first-passage service times");
  add_common(zet_cmd, zet.common, "csv", {"csv", "jsonl"});
  zet_cmd->add_option("--k", zet.k, "initial customer count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  zet_cmd->add_option("--samples", zet.samples, "number of draws")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  zet_cmd->add_option("--method", zet.method,
                      "auto | walk (exact embedded walk) | levy (limit law)")
      ->check(CLI::IsMember({"auto", "walk", "levy"}))
      ->capture_default_str();
  zet_cmd->add_option("--budget", zet.budget,
                      "per-draw jump budget; exceeding it aborts with exit "
                      "code 3 (0 = unbounded)");
  zet_cmd->add_option("--cap", zet.cap,
                      "continuation round size for bounded-cost draws "
                      "(0 = unbounded)");

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // the vector overload pops back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    const std::string name = e.get_name();
    if (name == "CallForHelp" || name == "CallForAllHelp" ||
        name == "CallForVersion") {
      return code;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (est_cmd->parsed()) return run_estimate(est);
    if (ora_cmd->parsed()) return cmd_oracle_check(ora);
    if (zet_cmd->parsed()) return cmd_sample_zeta(zet);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const gslab::HorizonExceeded& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step
              << "); use --mode asymptotic or a smaller --n-steps\n";
    return 3;
  } catch (const gslab::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
