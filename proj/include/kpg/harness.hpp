#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kpg/kfold.hpp"

namespace kpg {

// A run config plus the sweep-level settings: which environment, which seeds,
// where to write, and the policy architecture.
struct ExperimentConfig {
  RunConfig run;
  std::string env_name = "pointmass2d";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string output_dir = "results";
  std::vector<std::size_t> policy_hidden = {100, 50, 25};

  void validate() const;
};

struct Summary {
  std::string env_name;
  std::string algo;
  std::string mode;
  std::size_t k = 1;
  std::size_t seed_count = 0;
  double mean_performance = 0.0;
  double std_performance = 0.0;  // population convention (n divisor)
};

struct CurveRow {
  std::size_t iteration = 0;
  double return_mean = 0.0;
  double return_std = 0.0;
  double kl_mean = 0.0;
  double kl_std = 0.0;
};

// Flat "key = value" text; '#' starts a comment, blank lines ignored. Any key
// may be omitted (defaults above and in RunConfig apply). Unknown keys, type
// errors and invariant violations raise ConfigError naming the key.
ExperimentConfig parse_config(const std::string& text);

// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

std::string mode_to_string(Mode mode);
Mode mode_from_string(const std::string& name);
std::string algo_to_string(Algo algo);
Algo algo_from_string(const std::string& name);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

void write_metrics_csv(const std::string& path,
                       const std::vector<IterationMetrics>& metrics);
std::vector<IterationMetrics> read_metrics_csv(const std::string& path);

// Runs every seed, writing metrics_seed<seed>.csv, config.txt and summary.csv
// under config.output_dir. Failures are rethrown with the seed named.
Summary run_experiment(const ExperimentConfig& config);

// Recomputes the summary for an experiment directory from its emitted CSVs
// (and rewrites summary.csv).
Summary summarize_dir(const std::string& dir);

// Per-iteration mean and population std of avg_return and mean_kl across the
// seed files of an experiment directory; also written to curve.csv there.
std::vector<CurveRow> emit_curve_data(const std::string& dir);

std::string summary_csv_text(const Summary& summary);

}  // namespace kpg
