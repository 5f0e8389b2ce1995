#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netfleet/objectives.hpp"
#include "netfleet/stacked.hpp"
#include "netfleet/theory.hpp"
#include "netfleet/topology.hpp"

namespace netfleet {

enum class Algorithm { netfleet, dsgd, gtsgd, ldsgd };

Algorithm parse_algorithm(const std::string& tag);
std::string to_string(Algorithm algo);

/// NET-FLEET and LD-SGD gossip once per outer round; DSGD and GT-SGD gossip
/// after every local step.
inline bool communicates_every_step(Algorithm algo) {
  return algo == Algorithm::dsgd || algo == Algorithm::gtsgd;
}

/// Worker-stacked iterates. `g` always holds the stochastic gradient drawn at
/// the current `x`; `y` is the gradient tracker (NET-FLEET, GT-SGD only).
struct AlgState {
  StackedVectors x;
  StackedVectors y;
  StackedVectors g;
  int s = 0;
  int k = 0;
  double eta = 0.0;
  int K = 1;
};

struct TrainingOptions {
  Algorithm algo = Algorithm::netfleet;
  int S = 1;
  int K = 1;
  double eta = 0.01;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int metric_every = 1;     // record every n-th inner step
  int eta_decay_every = 0;  // halve eta every n outer rounds; 0 disables
  int threads = 1;
  bool wall_clock = false;  // fill TraceRecord::elapsed_ms; off keeps traces reproducible
  Vec x0;                   // empty means the zero vector

  /// Called with the initial state and after every inner step.
  std::function<void(const AlgState&)> on_state;
  /// NET-FLEET only: full (x, y, g) history of each finished outer round.
  std::function<void(const RoundHistory&)> on_round;
};

struct TraceRecord {
  Algorithm algo = Algorithm::netfleet;
  int s = 0;
  int k = 0;
  double grad_norm_sq = 0.0;
  double consensus_err = 0.0;
  double metric = 0.0;
  double potential = 0.0;
  double elapsed_ms = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  std::string config_hash;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double L = 0.0;
  double eta = 0.0;
};

struct TrainingResult {
  Trace trace;
  AlgState state;
  long long comm_rounds = 0;
  long long local_steps = 0;
};

/// Validates options and draws y = g = grad f_i(x0; zeta) from stream (seed, i, 0, 0).
AlgState init_run(const TrainingOptions& opts, const LocalObjectiveSet& objset, const ConsensusMatrix& W);

/// Per-run context shared by the round functions.
class RoundEngine {
 public:
  RoundEngine(const TrainingOptions& opts, const LocalObjectiveSet& objset, const ConsensusMatrix& W);

  /// One NET-FLEET outer round: a single gossip of (x, y) followed by K
  /// tracked local steps. Appends up to K records.
  void netfleet_outer_round(AlgState& state, std::vector<TraceRecord>& records);
  /// One outer round (K inner steps) of DSGD, GT-SGD or LD-SGD.
  void baseline_round(AlgState& state, Algorithm algo, std::vector<TraceRecord>& records);

  long long comm_rounds() const { return comm_rounds_; }
  long long local_steps() const { return local_steps_; }

 private:
  StackedVectors draw_gradients(const StackedVectors& x, int s, int k) const;
  void record(const AlgState& state, Algorithm algo, int s, int k, bool with_tracker,
              std::vector<TraceRecord>& records) const;
  void advance(AlgState& state, int& s, int& k) const;
  void notify(const AlgState& state) const;

  const TrainingOptions& opts_;
  const LocalObjectiveSet& objset_;
  const ConsensusMatrix& W_;
  double start_ms_ = 0.0;
  long long comm_rounds_ = 0;
  long long local_steps_ = 0;
};

/// Runs S outer rounds of opts.algo. Output is a pure function of the
/// options and inputs, independent of opts.threads.
TrainingResult run_training(const TrainingOptions& opts, const LocalObjectiveSet& objset,
                            const ConsensusMatrix& W);

}  // namespace netfleet
