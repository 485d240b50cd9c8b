#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mrbear/game.hpp"

namespace mrbear::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kMaxCurvePoints = 10'000;
inline constexpr const char* kOutputRootEnv = "MRBEAR_OUTPUT_ROOT";

inline constexpr const char* kMrbear = "mrbear";
inline constexpr const char* kNaiveTopClass = "naive_top_class";
inline constexpr const char* kOracleClass = "oracle_class";

struct ExperimentConfig {
  std::size_t horizon = 0;
  std::size_t num_classes = 1;
  double delta = 0.01;
  double c_h = 1.0;
  double universal_constant = 1.0;
  game::StageGame stage{1, 1, {0.0}};
  game::OpponentPolicy opponent{0, game::OpponentKind::General, 1, 1, {1.0}};
  std::vector<std::string> baselines;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  bool write_steps = true;
  std::size_t threads = 0;  // 0: hardware concurrency
  nlohmann::json source;    // the document as loaded
};

// Parses and validates a config document. Relative file references are
// resolved against base_dir. Throws ParseError or ValidationError.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// output_dir, placed under $MRBEAR_OUTPUT_ROOT when that is set and the
// directory is relative.
std::filesystem::path resolve_output_dir(const std::filesystem::path& output_dir);

struct CurvePoint {
  std::size_t t = 0;
  double regret = 0.0;
};

struct RunLog {
  std::string baseline;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  nlohmann::json meta;
  std::vector<CurvePoint> curve;
  std::filesystem::path meta_path;
};

std::string job_stem(const std::string& baseline, std::uint64_t seed);

// Runs every (seed, baseline) job in parallel and writes its files into
// the resolved output directory. A failing job is reported in its RunLog
// and does not affect the others.
std::vector<RunLog> run_experiment(const ExperimentConfig& config);

// Reads back the metadata and regret curves of a run directory.
std::vector<RunLog> load_run_logs(const std::filesystem::path& dir);

struct ClassShare {
  std::size_t class_order = 0;
  double mean_step_share = 0.0;
  std::size_t eliminated_runs = 0;
  std::optional<double> median_elimination_epoch;
};

struct BaselineSummary {
  std::string baseline;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double median_regret = 0.0;
  double q1_regret = 0.0;
  double q3_regret = 0.0;
  std::vector<ClassShare> classes;
};

std::vector<BaselineSummary> summarize(const std::vector<RunLog>& logs);
void write_summary_csv(const std::vector<BaselineSummary>& summary, const std::filesystem::path& path);

// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

// Regret and regret / sqrt(t) charts per baseline plus a median comparison,
// as standalone SVG files in out_dir. Returns the written paths; writes
// nothing for an empty input. Throws IoError.
std::vector<std::filesystem::path> emit_plots(const std::vector<RunLog>& logs,
                                              const std::filesystem::path& out_dir);

// Least-squares slope of log(regret) against log(t) over the points with
// t in [t_begin, t_end] and positive regret.
double log_log_slope(const std::vector<CurvePoint>& curve, std::size_t t_begin, std::size_t t_end);

// Pointwise median of curves sampled on the same grid.
std::vector<CurvePoint> median_curve(const std::vector<const std::vector<CurvePoint>*>& curves);

}  // namespace mrbear::harness
