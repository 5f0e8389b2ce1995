#include "netfleet/algorithms.hpp"

#include <chrono>
#include <exception>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace netfleet {

Algorithm parse_algorithm(const std::string& tag) {
  if (tag == "netfleet") return Algorithm::netfleet;
  if (tag == "dsgd") return Algorithm::dsgd;
  if (tag == "gtsgd") return Algorithm::gtsgd;
  if (tag == "ldsgd") return Algorithm::ldsgd;
  throw std::invalid_argument("unknown algorithm '" + tag + "' (expected netfleet, dsgd, gtsgd or ldsgd)");
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::netfleet: return "netfleet";
    case Algorithm::dsgd: return "dsgd";
    case Algorithm::gtsgd: return "gtsgd";
    case Algorithm::ldsgd: return "ldsgd";
  }
  return "netfleet";
}

namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

/// Runs fn(i) for every worker; the first exception is rethrown after the loop.
template <class Fn>
void for_each_worker(int m, int threads, Fn&& fn) {
  std::exception_ptr error;
#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
  for (int i = 0; i < m; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(netfleet_worker_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::pair<int, int> next_index(int s, int k, int K) { return k + 1 < K ? std::pair{s, k + 1} : std::pair{s + 1, 0}; }

void validate(const TrainingOptions& opts, const LocalObjectiveSet& objset, const ConsensusMatrix& W) {
  if (!(opts.eta > 0.0)) throw std::invalid_argument(fmt::format("training: eta must be positive, got {}", opts.eta));
  if (opts.K < 1) throw std::invalid_argument(fmt::format("training: K must be >= 1, got {}", opts.K));
  if (opts.S < 0) throw std::invalid_argument(fmt::format("training: S must be >= 0, got {}", opts.S));
  if (opts.batch_size < 1) throw std::invalid_argument("training: batch size must be >= 1");
  if (opts.metric_every < 1) throw std::invalid_argument("training: metric_every must be >= 1");
  if (opts.eta_decay_every < 0) throw std::invalid_argument("training: eta_decay_every must be >= 0");
  if (opts.threads < 1) throw std::invalid_argument("training: threads must be >= 1");
  if (W.size() != objset.workers())
    throw std::invalid_argument(fmt::format("training: consensus matrix has {} workers, objectives have {}", W.size(),
                                            objset.workers()));
  if (opts.x0.size() != 0 && opts.x0.size() != objset.dim())
    throw std::invalid_argument("training: x0 dimension does not match the model");
}

}  // namespace

AlgState init_run(const TrainingOptions& opts, const LocalObjectiveSet& objset, const ConsensusMatrix& W) {
  validate(opts, objset, W);
  const int m = objset.workers();
  const int p = objset.dim();
  AlgState state;
  state.K = opts.K;
  state.eta = opts.eta;
  const Vec x0 = opts.x0.size() == 0 ? Vec(Vec::Zero(p)) : opts.x0;
  state.x = x0.replicate(1, m);
  state.g.resize(p, m);
  for_each_worker(m, opts.threads, [&](int i) {
    RngStream rng = RngStream::oracle(opts.seed, static_cast<std::uint32_t>(i), 0, 0);
    state.g.col(i) = objset.stochastic_gradient(i, state.x.col(i), opts.batch_size, rng);
  });
  state.y = state.g;
  return state;
}

RoundEngine::RoundEngine(const TrainingOptions& opts, const LocalObjectiveSet& objset, const ConsensusMatrix& W)
    : opts_(opts), objset_(objset), W_(W), start_ms_(now_ms()) {
  validate(opts, objset, W);
}

StackedVectors RoundEngine::draw_gradients(const StackedVectors& x, int s, int k) const {
  StackedVectors g(x.rows(), x.cols());
  for_each_worker(static_cast<int>(x.cols()), opts_.threads, [&](int i) {
    RngStream rng = RngStream::oracle(opts_.seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(s),
                                      static_cast<std::uint32_t>(k));
    g.col(i) = objset_.stochastic_gradient(i, x.col(i), opts_.batch_size, rng);
  });
  return g;
}

void RoundEngine::record(const AlgState& state, Algorithm algo, int s, int k, bool with_tracker,
                         std::vector<TraceRecord>& records) const {
  const long long step = static_cast<long long>(s) * state.K + k;
  if (step % opts_.metric_every != 0) return;
  const auto measure = stationarity_metric(objset_, state.x);
  const auto params = PotentialParams::make(W_.lambda, state.K, state.eta);
  TraceRecord rec;
  rec.algo = algo;
  rec.s = s;
  rec.k = k;
  rec.grad_norm_sq = measure.grad_norm_sq;
  rec.consensus_err = measure.consensus_err;
  rec.metric = measure.metric;
  rec.potential = with_tracker ? potential_value(objset_, state.x, state.y, params)
                               : potential_value(objset_, state.x, params);
  rec.elapsed_ms = opts_.wall_clock ? now_ms() - start_ms_ : 0.0;
  records.push_back(rec);
}

void RoundEngine::advance(AlgState& state, int& s, int& k) const {
  std::tie(s, k) = next_index(s, k, state.K);
  if (k == 0 && opts_.eta_decay_every > 0 && s % opts_.eta_decay_every == 0) state.eta *= 0.5;
  state.s = s;
  state.k = k;
}

void RoundEngine::notify(const AlgState& state) const {
  if (opts_.on_state) opts_.on_state(state);
}

void RoundEngine::netfleet_outer_round(AlgState& state, std::vector<TraceRecord>& records) {
  if (state.k != 0) throw std::logic_error("netfleet_outer_round: state is mid-round");
  const int K = state.K;
  const int round = state.s;
  const double eta = state.eta;
  int s = state.s, k = 0;

  RoundHistory history;
  const bool keep_history = static_cast<bool>(opts_.on_round);
  auto snapshot = [&] {
    if (!keep_history) return;
    history.x.push_back(state.x);
    history.y.push_back(state.y);
    history.g.push_back(state.g);
  };
  history.s = round;
  history.eta = eta;
  snapshot();

  // Share step: the only gossip of the round.
  record(state, Algorithm::netfleet, s, 0, true, records);
  {
    StackedVectors x_next = gossip_mix(W_, state.x) - eta * state.y;
    StackedVectors y_mixed = gossip_mix(W_, state.y);
    const auto [ns, nk] = next_index(s, 0, K);
    StackedVectors g_next = draw_gradients(x_next, ns, nk);
    state.y = y_mixed + g_next - state.g;
    state.x = std::move(x_next);
    state.g = std::move(g_next);
    ++comm_rounds_;
    ++local_steps_;
    advance(state, s, k);
    snapshot();
    notify(state);
  }

  // Local steps with recursive gradient correction.
  for (int inner = 1; inner < K; ++inner) {
    record(state, Algorithm::netfleet, s, k, true, records);
    StackedVectors x_next = state.x - eta * state.y;
    const auto [ns, nk] = next_index(s, k, K);
    StackedVectors g_next = draw_gradients(x_next, ns, nk);
    state.y += g_next - state.g;
    state.x = std::move(x_next);
    state.g = std::move(g_next);
    ++local_steps_;
    advance(state, s, k);
    snapshot();
    notify(state);
  }

  if (keep_history) opts_.on_round(history);
}

void RoundEngine::baseline_round(AlgState& state, Algorithm algo, std::vector<TraceRecord>& records) {
  if (state.k != 0) throw std::logic_error("baseline_round: state is mid-round");
  const int K = state.K;
  const double eta = state.eta;
  int s = state.s, k = 0;

  switch (algo) {
    case Algorithm::dsgd:
      for (int inner = 0; inner < K; ++inner) {
        record(state, algo, s, k, false, records);
        StackedVectors x_next = gossip_mix(W_, state.x) - eta * state.g;
        const auto [ns, nk] = next_index(s, k, K);
        state.g = draw_gradients(x_next, ns, nk);
        state.x = std::move(x_next);
        ++comm_rounds_;
        ++local_steps_;
        advance(state, s, k);
        notify(state);
      }
      break;
    case Algorithm::gtsgd:
      for (int inner = 0; inner < K; ++inner) {
        record(state, algo, s, k, true, records);
        StackedVectors x_next = gossip_mix(W_, state.x) - eta * state.y;
        const auto [ns, nk] = next_index(s, k, K);
        StackedVectors g_next = draw_gradients(x_next, ns, nk);
        state.y = gossip_mix(W_, state.y) + g_next - state.g;
        state.x = std::move(x_next);
        state.g = std::move(g_next);
        ++comm_rounds_;
        ++local_steps_;
        advance(state, s, k);
        notify(state);
      }
      break;
    case Algorithm::ldsgd:
      for (int inner = 0; inner < K; ++inner) {
        record(state, algo, s, k, false, records);
        state.x -= eta * state.g;
        ++local_steps_;
        if (inner + 1 < K) {
          state.g = draw_gradients(state.x, s, k + 1);
          advance(state, s, k);
          notify(state);
        }
      }
      state.x = gossip_mix(W_, state.x);
      ++comm_rounds_;
      advance(state, s, k);
      state.g = draw_gradients(state.x, s, k);
      notify(state);
      break;
    case Algorithm::netfleet:
      throw std::invalid_argument("baseline_round: netfleet is not a baseline");
  }
}

TrainingResult run_training(const TrainingOptions& opts, const LocalObjectiveSet& objset, const ConsensusMatrix& W) {
  TrainingResult result;
  result.state = init_run(opts, objset, W);
  RoundEngine engine(opts, objset, W);
  result.trace.seed = opts.seed;
  result.trace.lambda = W.lambda;
  result.trace.L = objset.smoothness();
  result.trace.eta = opts.eta;
  if (opts.on_state) opts.on_state(result.state);
  for (int round = 0; round < opts.S; ++round) {
    if (opts.algo == Algorithm::netfleet)
      engine.netfleet_outer_round(result.state, result.trace.records);
    else
      engine.baseline_round(result.state, opts.algo, result.trace.records);
  }
  result.comm_rounds = engine.comm_rounds();
  result.local_steps = engine.local_steps();
  return result;
}

}  // namespace netfleet
