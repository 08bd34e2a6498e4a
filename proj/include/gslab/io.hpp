#pragma once
// Serialization: trajectories to JSON-lines / CSV, estimator results to JSON
// summaries, plot-ready CSV series, and the committed calibration files.
//
// Conventions: JSON summaries carry the full effective run configuration so
// every output is reproducible from its own header; non-finite doubles
// serialize as JSON null; CSV uses comma separators, a header row, '.' as the
// decimal point, and '#'-prefixed metadata lines.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "gslab/chain.hpp"
#include "gslab/experiments.hpp"
#include "gslab/hitting.hpp"

namespace gslab {

// --- trajectories ----------------------------------------------------------

// Metadata object shared by both trajectory formats: mode, seed, lambda,
// handoff_n, approximation flags, step count, plus the caller's config echo.
nlohmann::json trajectory_metadata(const Trajectory& traj,
                                   const nlohmann::json& config);

// One metadata line, then one record per step with keys
// n, x, eta, turn, log_tau, log_T.
void write_trajectory_jsonl(const Trajectory& traj, std::ostream& os,
                            const nlohmann::json& config = {});

// '#'-prefixed metadata, then a header row and the same columns.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os,
                          const nlohmann::json& config = {});

// --- estimator summaries ---------------------------------------------------

nlohmann::json to_json(const EstimateResult& r);
nlohmann::json to_json(const ScalingSeries& s);
nlohmann::json to_json(const MartingaleAudit& a);
nlohmann::json to_json(const TauGrowthResult& r);
nlohmann::json to_json(const LilResult& r);
nlohmann::json to_json(const RecurrenceResult& r);
nlohmann::json to_json(const DistanceReport& r);
nlohmann::json to_json(const WalkCalibration& c);

WalkCalibration calibration_from_json(const nlohmann::json& j);

// Canonical bytes of a committed calibration file; regenerating with the
// file's own parameters must reproduce it byte for byte.
std::string calibration_file_text(const WalkCalibration& c);

// Plot-ready CSV: index,value,std_error,abs_dev,count.
void write_series_csv(const ScalingSeries& s, std::ostream& os,
                      const nlohmann::json& config = {});

// Per-n audit CSV: n,mean_increment,second_moment,increment_std_error,
// turn_frequency,n_replicas.
void write_martingale_csv(const MartingaleAudit& a, std::ostream& os,
                          const nlohmann::json& config = {});

// --- small file helpers ----------------------------------------------------

std::string read_text_file(const std::string& path);   // throws on failure
void write_text_file(const std::string& path, const std::string& text);

}  // namespace gslab
