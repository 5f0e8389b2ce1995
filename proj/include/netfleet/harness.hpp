#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netfleet/algorithms.hpp"

namespace netfleet {

using KeyValues = std::map<std::string, std::string>;

/// Flat "key=value" text, one pair per line; '#' starts a comment. Keys are
/// normalised to dashed form (local_steps -> local-steps).
KeyValues parse_key_values(const std::string& text);

struct RunConfig {
  Algorithm algo = Algorithm::netfleet;
  int workers = 10;
  int rounds = 100;        // S
  int local_steps = 10;    // K
  std::optional<double> eta = 0.01;  // nullopt ("auto"): K and eta from the linear-speedup schedule
  double c_eta = 1.0;
  std::string topology = "er:0.5";
  std::string objective = "quad:p=10,h=1,sigma=0";
  int batch = 32;
  std::uint64_t seed = 0;
  int metric_every = 1;
  int eta_decay_every = 0;
  std::string out;
  int threads = 1;
  bool wall_clock = false;

  /// Unknown keys raise std::invalid_argument naming the key.
  static RunConfig from_keys(const KeyValues& keys);
  static RunConfig parse(const std::string& text) { return from_keys(parse_key_values(text)); }
  /// Emits every field; parse(emit()) reproduces the config exactly.
  std::string emit() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// FNV-1a over the fields that influence results (not out or threads).
  std::string hash() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct Summary {
  std::string algo;
  int workers = 0;
  int rounds = 0;
  int local_steps = 0;
  double lambda = 0.0;
  double L = 0.0;
  double eta = 0.0;
  double eta_max = 0.0;
  std::string argmin_term;
  bool eta_warn = false;  // eta exceeds the certificate
  bool side_condition = true;
  long long comm_rounds = 0;
  long long total_local_steps = 0;
  double final_metric_smoothed = 0.0;
  std::optional<double> test_accuracy;
  std::string config_hash;
  double wall_ms = 0.0;

  std::string to_text() const;
};

struct ExperimentResult {
  RunConfig config;  // with eta and K resolved when eta is auto
  TrainingResult training;
  Summary summary;
};

inline constexpr int kSmoothingWindow = 10;

/// Trailing moving average: out[t] = mean(values[max(0, t-window+1) .. t]).
std::vector<double> smooth_series(const std::vector<double>& values, int window);

std::string trace_csv(const Trace& trace);
void write_text_file(const std::string& path, const std::string& text);

/// Builds topology, consensus matrix and objectives, runs, summarises, and
/// writes <out>/trace.csv and <out>/summary.txt when config.out is set.
ExperimentResult run_experiment(const RunConfig& config);

struct SweepGrid {
  enum class Axis { workers, local_rounds, connectivity, eta };
  RunConfig base;
  Axis axis = Axis::local_rounds;
  std::vector<double> values;
  int seeds = 1;

  static Axis parse_axis(const std::string& name);
  static std::string axis_name(Axis axis);
  /// Comma-separated list of numbers.
  static std::vector<double> parse_values(const std::string& text);
  /// Applies one axis value to a copy of the base config.
  RunConfig cell(double value, int seed_offset) const;
};

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  double final_metric_smoothed = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  long long comm_rounds = 0;
  std::optional<double> test_accuracy;
};

struct SweepAggregate {
  double value = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double mean_lambda = 0.0;
  int n = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // value-major, then seed
  std::vector<SweepAggregate> aggregates;

  std::string rows_csv() const;
  std::string aggregates_csv() const;
};

/// Runs every (value, seed) cell, in parallel over base.threads, with
/// order-stable assembly.
SweepTable sweep(const SweepGrid& grid);

}  // namespace netfleet
