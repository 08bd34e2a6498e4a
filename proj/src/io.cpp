#include "gslab/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gslab {

namespace {

const char* mode_name(ChainMode mode) {
  return mode == ChainMode::Exact ? "exact" : "asymptotic";
}

// Lossless double for CSV cells; non-finite values print as inf/-inf/nan.
void put_double(std::ostream& os, double v) {
  os << std::setprecision(17) << v;
}

void put_csv_metadata(std::ostream& os, const nlohmann::json& meta) {
  for (const auto& [key, value] : meta.items()) {
    os << "# " << key << "=" << value.dump() << "\n";
  }
}

nlohmann::json optional_u64(const std::optional<std::uint64_t>& v) {
  if (v) return *v;
  return nullptr;
}

// Statistic fields may be NaN (e.g. an index excluded by a domain guard);
// those serialize as explicit JSON null.
nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json trajectory_metadata(const Trajectory& traj,
                                   const nlohmann::json& config) {
  nlohmann::json meta{
      {"type", "trajectory"},
      {"mode", mode_name(traj.mode)},
      {"seed", traj.seed},
      {"lambda", traj.lambda},
      {"handoff_n", optional_u64(traj.handoff_n)},
      {"gaussian_poisson_used", traj.gaussian_poisson_used},
      {"zeta_budget", optional_u64(traj.zeta_budget)},
      {"n_steps", traj.records.size()},
  };
  if (!config.is_null() && !config.empty()) meta["config"] = config;
  return meta;
}

void write_trajectory_jsonl(const Trajectory& traj, std::ostream& os,
                            const nlohmann::json& config) {
  os << trajectory_metadata(traj, config).dump() << "\n";
  for (const StepRecord& rec : traj.records) {
    const nlohmann::json line{
        {"n", rec.n},          {"x", rec.x},
        {"eta", rec.eta},      {"turn", rec.turn},
        {"log_tau", rec.log_tau}, {"log_T", rec.log_t},
    };
    os << line.dump() << "\n";
  }
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os,
                          const nlohmann::json& config) {
  put_csv_metadata(os, trajectory_metadata(traj, config));
  os << "n,x,eta,turn,log_tau,log_T\n";
  for (const StepRecord& rec : traj.records) {
    os << rec.n << "," << rec.x << "," << rec.eta << ","
       << (rec.turn ? 1 : 0) << ",";
    put_double(os, rec.log_tau);
    os << ",";
    put_double(os, rec.log_t);
    os << "\n";
  }
}

nlohmann::json to_json(const EstimateResult& r) {
  return nlohmann::json{
      {"label", r.label},         {"point", finite_or_null(r.point)},
      {"stderr", finite_or_null(r.std_error)}, {"n_replicas", r.n_replicas},
      {"seed", r.seed},
  };
}

nlohmann::json to_json(const ScalingSeries& s) {
  nlohmann::json points = nlohmann::json::array();
  for (const SeriesPoint& p : s.points) {
    points.push_back({{"index", p.index},
                      {"value", finite_or_null(p.value)},
                      {"stderr", finite_or_null(p.std_error)},
                      {"abs_dev", finite_or_null(p.abs_dev)},
                      {"count", p.count}});
  }
  return nlohmann::json{
      {"label", s.label},         {"reference", s.reference},
      {"n_replicas", s.n_replicas}, {"seed", s.seed},
      {"points", std::move(points)},
  };
}

nlohmann::json to_json(const MartingaleAudit& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (const MartingaleRow& r : a.rows) {
    rows.push_back({{"n", r.n},
                    {"mean_increment", finite_or_null(r.mean_increment)},
                    {"second_moment", finite_or_null(r.second_moment)},
                    {"increment_stderr", finite_or_null(r.increment_std_error)},
                    {"turn_frequency", finite_or_null(r.turn_frequency)},
                    {"n_replicas", r.n_replicas}});
  }
  return nlohmann::json{
      {"label", "martingale"},
      {"n_max", a.n_max},
      {"n_replicas", a.n_replicas},
      {"seed", a.seed},
      {"max_abs_increment", a.max_abs_increment},
      {"rows", std::move(rows)},
  };
}

nlohmann::json to_json(const TauGrowthResult& r) {
  std::vector<double> gamma = r.gamma_hat;
  return nlohmann::json{
      {"label", "tau_growth"},
      {"n_max", r.n_max},
      {"n_replicas", r.n_replicas},
      {"seed", r.seed},
      {"series", to_json(r.series)},
      {"gamma_hat_q25", finite_or_null(sample_quantile(gamma, 0.25))},
      {"gamma_hat_median", finite_or_null(sample_quantile(gamma, 0.5))},
      {"gamma_hat_q75", finite_or_null(sample_quantile(gamma, 0.75))},
  };
}

nlohmann::json to_json(const LilResult& r) {
  std::vector<double> last(r.n_replicas);
  const std::size_t c = r.checkpoints.size() - 1;
  for (std::uint64_t i = 0; i < r.n_replicas; ++i) {
    last[i] = r.running_max[i][c];
  }
  return nlohmann::json{
      {"label", "lil"},
      {"n_max", r.n_max},
      {"n_replicas", r.n_replicas},
      {"seed", r.seed},
      {"checkpoints", r.checkpoints},
      {"median_max", finite_or_null(r.median_max)},
      {"max_q05", finite_or_null(sample_quantile(last, 0.05))},
      {"max_q95", finite_or_null(sample_quantile(last, 0.95))},
      {"mean_series", to_json(r.mean_series)},
  };
}

nlohmann::json to_json(const RecurrenceResult& r) {
  return nlohmann::json{
      {"label", "recurrence"},
      {"n_max", r.n_max},
      {"n_replicas", r.n_replicas},
      {"seed", r.seed},
      {"mean_returns", finite_or_null(r.mean_returns)},
      {"returns_stderr", finite_or_null(r.returns_std_error)},
      {"sign_change_fraction", finite_or_null(r.sign_change_fraction)},
      {"fraction_stderr", finite_or_null(r.fraction_std_error)},
  };
}

nlohmann::json to_json(const DistanceReport& r) {
  return nlohmann::json{
      {"k", r.k},       {"n_samples", r.n_samples},
      {"ks_statistic", r.ks_statistic}, {"mc_stderr", r.mc_stderr},
      {"seed", r.seed}, {"budget", r.budget},
      {"redraws", r.redraws},
  };
}

nlohmann::json to_json(const WalkCalibration& c) {
  return nlohmann::json{
      {"label", "reference_walk_calibration"},
      {"n_max", c.n_max},
      {"n_replicas", c.n_replicas},
      {"seed", c.seed},
      {"turn_prob", c.turn_prob},
      {"lil_q05", c.lil_q05},
      {"lil_median", c.lil_median},
      {"lil_q95", c.lil_q95},
      {"mean_returns", c.mean_returns},
      {"sd_returns", c.sd_returns},
      {"returns_bound", c.returns_bound},
      {"sign_change_fraction", c.sign_change_fraction},
      {"band_rule",
       "lil band = [lil_q05, lil_q95] of the replica running maxima; "
       "returns_bound = mean_returns / 2"},
  };
}

WalkCalibration calibration_from_json(const nlohmann::json& j) {
  WalkCalibration c;
  c.n_max = j.at("n_max").get<std::uint64_t>();
  c.n_replicas = j.at("n_replicas").get<std::uint64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.turn_prob = j.at("turn_prob").get<double>();
  c.lil_q05 = j.at("lil_q05").get<double>();
  c.lil_median = j.at("lil_median").get<double>();
  c.lil_q95 = j.at("lil_q95").get<double>();
  c.mean_returns = j.at("mean_returns").get<double>();
  c.sd_returns = j.at("sd_returns").get<double>();
  c.returns_bound = j.at("returns_bound").get<double>();
  c.sign_change_fraction = j.at("sign_change_fraction").get<double>();
  return c;
}

std::string calibration_file_text(const WalkCalibration& c) {
  return to_json(c).dump(2) + "\n";
}

void write_series_csv(const ScalingSeries& s, std::ostream& os,
                      const nlohmann::json& config) {
  nlohmann::json meta{{"label", s.label},
                      {"reference", s.reference},
                      {"n_replicas", s.n_replicas},
                      {"seed", s.seed}};
  if (!config.is_null() && !config.empty()) meta["config"] = config;
  put_csv_metadata(os, meta);
  os << "index,value,std_error,abs_dev,count\n";
  for (const SeriesPoint& p : s.points) {
    put_double(os, p.index);
    os << ",";
    put_double(os, p.value);
    os << ",";
    put_double(os, p.std_error);
    os << ",";
    put_double(os, p.abs_dev);
    os << "," << p.count << "\n";
  }
}

void write_martingale_csv(const MartingaleAudit& a, std::ostream& os,
                          const nlohmann::json& config) {
  nlohmann::json meta{{"label", "martingale"},
                      {"n_max", a.n_max},
                      {"n_replicas", a.n_replicas},
                      {"seed", a.seed},
                      {"max_abs_increment", a.max_abs_increment}};
  if (!config.is_null() && !config.empty()) meta["config"] = config;
  put_csv_metadata(os, meta);
  os << "n,mean_increment,second_moment,increment_std_error,turn_frequency,"
        "n_replicas\n";
  for (const MartingaleRow& r : a.rows) {
    os << r.n << ",";
    put_double(os, r.mean_increment);
    os << ",";
    put_double(os, r.second_moment);
    os << ",";
    put_double(os, r.increment_std_error);
    os << ",";
    put_double(os, r.turn_frequency);
    os << "," << r.n_replicas << "\n";
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gslab
