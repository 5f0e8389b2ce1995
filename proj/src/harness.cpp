#include "netfleet/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace netfleet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalise_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw std::invalid_argument("config: field '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  const long long v = parse_integer(key, value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw std::invalid_argument("config: field '" + key + "' is out of range");
  return static_cast<int>(v);
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw std::invalid_argument("config: field '" + key + "' expects a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config: field '" + key + "' expects true or false, got '" + value + "'");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(fmt::format("config: line {} is not key=value", lineno));
    const std::string key = normalise_key(trim(line.substr(0, eq)));
    if (key.empty()) throw std::invalid_argument(fmt::format("config: line {} has an empty key", lineno));
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig RunConfig::from_keys(const KeyValues& keys) {
  RunConfig c;
  for (const auto& [raw_key, value] : keys) {
    const std::string key = normalise_key(raw_key);
    if (key == "algo") c.algo = parse_algorithm(value);
    else if (key == "workers") c.workers = parse_int(key, value);
    else if (key == "rounds") c.rounds = parse_int(key, value);
    else if (key == "local-steps") c.local_steps = parse_int(key, value);
    else if (key == "eta") c.eta = value == "auto" ? std::nullopt : std::optional<double>(parse_real(key, value));
    else if (key == "c-eta") c.c_eta = parse_real(key, value);
    else if (key == "topology") c.topology = value;
    else if (key == "objective") c.objective = value;
    else if (key == "batch") c.batch = parse_int(key, value);
    else if (key == "seed") {
      const long long s = parse_integer(key, value);
      if (s < 0) throw std::invalid_argument("config: field 'seed' must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "metric-every") c.metric_every = parse_int(key, value);
    else if (key == "eta-decay-every") c.eta_decay_every = parse_int(key, value);
    else if (key == "out") c.out = value;
    else if (key == "threads") c.threads = parse_int(key, value);
    else if (key == "wall-clock") c.wall_clock = parse_bool(key, value);
    else if (key == "sweep-axis" || key == "sweep-values" || key == "seeds") continue;  // SweepGrid keys
    else throw std::invalid_argument("config: unknown field '" + key + "'");
  }
  return c;
}

std::string RunConfig::emit() const {
  std::string text;
  text += fmt::format("algo={}\n", to_string(algo));
  text += fmt::format("workers={}\n", workers);
  text += fmt::format("rounds={}\n", rounds);
  text += fmt::format("local-steps={}\n", local_steps);
  text += eta ? fmt::format("eta={}\n", *eta) : std::string("eta=auto\n");
  text += fmt::format("c-eta={}\n", c_eta);
  text += fmt::format("topology={}\n", topology);
  text += fmt::format("objective={}\n", objective);
  text += fmt::format("batch={}\n", batch);
  text += fmt::format("seed={}\n", seed);
  text += fmt::format("metric-every={}\n", metric_every);
  text += fmt::format("eta-decay-every={}\n", eta_decay_every);
  text += fmt::format("out={}\n", out);
  text += fmt::format("threads={}\n", threads);
  text += fmt::format("wall-clock={}\n", wall_clock ? "true" : "false");
  return text;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: field '" + field + "' " + what);
  };
  require(workers >= 1, "workers", "must be >= 1");
  require(rounds >= 1, "rounds", "must be >= 1");
  require(local_steps >= 1, "local-steps", "must be >= 1");
  require(!eta || *eta > 0.0, "eta", "must be positive or auto");
  require(c_eta > 0.0, "c-eta", "must be positive");
  require(batch >= 1, "batch", "must be >= 1");
  require(metric_every >= 1, "metric-every", "must be >= 1");
  require(eta_decay_every >= 0, "eta-decay-every", "must be >= 0");
  require(threads >= 1, "threads", "must be >= 1");
  try {
    TopologySpec::parse(topology);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: field 'topology': ") + e.what());
  }
  try {
    ObjectiveSpec::parse(objective);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: field 'objective': ") + e.what());
  }
}

std::string RunConfig::hash() const {
  RunConfig canonical = *this;
  canonical.out.clear();
  canonical.threads = 1;
  return fmt::format("{:016x}", fnv1a(canonical.emit()));
}

// ---------------------------------------------------------------------------

std::string Summary::to_text() const {
  std::string out;
  out += fmt::format("algo={}\n", algo);
  out += fmt::format("workers={}\n", workers);
  out += fmt::format("rounds={}\n", rounds);
  out += fmt::format("local_steps={}\n", local_steps);
  out += fmt::format("lambda={}\n", lambda);
  out += fmt::format("L={}\n", L);
  out += fmt::format("eta={}\n", eta);
  out += fmt::format("eta_max={}\n", eta_max);
  out += fmt::format("argmin_term={}\n", argmin_term);
  out += fmt::format("eta_warn={}\n", eta_warn ? "WARN eta exceeds eta_max" : "none");
  out += fmt::format("schedule_side_condition={}\n", side_condition ? "ok" : "violated");
  out += fmt::format("comm_rounds={}\n", comm_rounds);
  out += fmt::format("total_local_steps={}\n", total_local_steps);
  out += fmt::format("final_metric_smoothed={}\n", final_metric_smoothed);
  if (test_accuracy) out += fmt::format("test_accuracy={}\n", *test_accuracy);
  out += fmt::format("config_hash={}\n", config_hash);
  out += fmt::format("wall_ms={:.3f}\n", wall_ms);
  return out;
}

std::vector<double> smooth_series(const std::vector<double>& values, int window) {
  if (window < 1) throw std::invalid_argument(fmt::format("smooth_series: window must be >= 1, got {}", window));
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    const std::size_t count = std::min(t + 1, static_cast<std::size_t>(window));
    double sum = 0.0;
    for (std::size_t j = t + 1 - count; j <= t; ++j) sum += values[j];
    out[t] = sum / static_cast<double>(count);
  }
  return out;
}

std::string trace_csv(const Trace& trace) {
  std::string out = "algo,s,k,grad_norm_sq,consensus_err,metric,potential,elapsed_ms\n";
  for (const auto& r : trace.records)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.algo), r.s, r.k, r.grad_norm_sq, r.consensus_err,
                       r.metric, r.potential, r.elapsed_ms);
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path(), ec);
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

ExperimentResult run_experiment(const RunConfig& input) {
  input.validate();
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.config = input;
  RunConfig& config = result.config;
  Schedule schedule;
  if (!config.eta) {
    schedule = speedup_schedule(config.rounds, config.workers, config.c_eta);
    config.local_steps = schedule.K;
    config.eta = schedule.eta;
  }

  const auto topo = build_topology(TopologySpec::parse(config.topology), config.workers, config.seed);
  const auto W = consensus_matrix(topo);
  const auto objset = build_objective_set(ObjectiveSpec::parse(config.objective), config.workers, config.seed);

  TrainingOptions opts;
  opts.algo = config.algo;
  opts.S = config.rounds;
  opts.K = config.local_steps;
  opts.eta = *config.eta;
  opts.batch_size = config.batch;
  opts.seed = config.seed;
  opts.metric_every = config.metric_every;
  opts.eta_decay_every = config.eta_decay_every;
  opts.threads = config.threads;
  opts.wall_clock = config.wall_clock;
  result.training = run_training(opts, objset, W);
  result.training.trace.config_hash = input.hash();

  Summary& sum = result.summary;
  sum.algo = to_string(config.algo);
  sum.workers = config.workers;
  sum.rounds = config.rounds;
  sum.local_steps = config.local_steps;
  sum.lambda = W.lambda;
  sum.L = objset.smoothness();
  sum.eta = *config.eta;
  if (sum.L > 0.0) {
    const auto cert = step_size_certificate(sum.L, W.lambda, config.workers, config.local_steps);
    sum.eta_max = cert.eta_max;
    sum.argmin_term = std::string(cert.argmin);
    sum.eta_warn = sum.eta > cert.eta_max;
  } else {
    sum.argmin_term = "undefined";
  }
  sum.side_condition = input.eta ? true : schedule.side_condition;
  sum.comm_rounds = result.training.comm_rounds;
  sum.total_local_steps = result.training.local_steps;
  std::vector<double> metric;
  metric.reserve(result.training.trace.records.size());
  for (const auto& r : result.training.trace.records) metric.push_back(r.metric);
  const auto smoothed = smooth_series(metric, kSmoothingWindow);
  sum.final_metric_smoothed = smoothed.empty() ? 0.0 : smoothed.back();
  if (objset.has_test_set()) sum.test_accuracy = objset.test_accuracy(block_mean(result.training.state.x));
  sum.config_hash = input.hash();
  sum.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  if (!config.out.empty()) {
    const std::filesystem::path dir(config.out);
    write_text_file((dir / "trace.csv").string(), trace_csv(result.training.trace));
    write_text_file((dir / "summary.txt").string(), sum.to_text());
  }
  return result;
}

// ---------------------------------------------------------------------------

SweepGrid::Axis SweepGrid::parse_axis(const std::string& name) {
  if (name == "workers") return Axis::workers;
  if (name == "local_rounds" || name == "local-rounds") return Axis::local_rounds;
  if (name == "connectivity") return Axis::connectivity;
  if (name == "eta") return Axis::eta;
  throw std::invalid_argument("sweep: unknown axis '" + name + "' (expected workers, local_rounds, connectivity or eta)");
}

std::string SweepGrid::axis_name(Axis axis) {
  switch (axis) {
    case Axis::workers: return "workers";
    case Axis::local_rounds: return "local_rounds";
    case Axis::connectivity: return "connectivity";
    case Axis::eta: return "eta";
  }
  return "workers";
}

std::vector<double> SweepGrid::parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_real("sweep-values", item));
  }
  if (out.empty()) throw std::invalid_argument("sweep: no values given");
  return out;
}

RunConfig SweepGrid::cell(double value, int seed_offset) const {
  RunConfig c = base;
  c.out.clear();
  c.threads = 1;
  c.seed = base.seed + static_cast<std::uint64_t>(seed_offset);
  auto as_count = [&](const char* field) {
    if (value != std::floor(value) || value < 1)
      throw std::invalid_argument(fmt::format("sweep: {} value {} is not a positive integer", field, value));
    return static_cast<int>(value);
  };
  switch (axis) {
    case Axis::workers: c.workers = as_count("workers"); break;
    case Axis::local_rounds: c.local_steps = as_count("local_rounds"); break;
    case Axis::connectivity: c.topology = fmt::format("er:{}", value); break;
    case Axis::eta: c.eta = value; break;
  }
  return c;
}

std::string SweepTable::rows_csv() const {
  std::string out = "value,seed,final_metric_smoothed,lambda,eta,comm_rounds,test_accuracy\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", r.value, r.seed, r.final_metric_smoothed, r.lambda, r.eta,
                       r.comm_rounds, r.test_accuracy ? fmt::format("{}", *r.test_accuracy) : std::string());
  return out;
}

std::string SweepTable::aggregates_csv() const {
  std::string out = "value,n,mean_final_metric,stderr,mean_lambda\n";
  for (const auto& a : aggregates)
    out += fmt::format("{},{},{},{},{}\n", a.value, a.n, a.mean, a.stderr_, a.mean_lambda);
  return out;
}

SweepTable sweep(const SweepGrid& grid) {
  if (grid.values.empty()) throw std::invalid_argument("sweep: no axis values");
  if (grid.seeds < 1) throw std::invalid_argument("sweep: seeds must be >= 1");
  grid.base.validate();

  const int seeds = grid.seeds;
  const int cells = static_cast<int>(grid.values.size()) * seeds;
  SweepTable table;
  table.rows.resize(static_cast<std::size_t>(cells));
  std::vector<RunConfig> configs;
  for (double v : grid.values)
    for (int j = 0; j < seeds; ++j) configs.push_back(grid.cell(v, j));

  std::exception_ptr error;
#pragma omp parallel for num_threads(grid.base.threads) schedule(dynamic) if (grid.base.threads > 1)
  for (int c = 0; c < cells; ++c) {
    try {
      const auto res = run_experiment(configs[static_cast<std::size_t>(c)]);
      SweepRow row;
      row.value = grid.values[static_cast<std::size_t>(c / seeds)];
      row.seed = res.config.seed;
      row.final_metric_smoothed = res.summary.final_metric_smoothed;
      row.lambda = res.summary.lambda;
      row.eta = res.summary.eta;
      row.comm_rounds = res.summary.comm_rounds;
      row.test_accuracy = res.summary.test_accuracy;
      table.rows[static_cast<std::size_t>(c)] = row;
    } catch (...) {
#pragma omp critical(netfleet_sweep_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  for (std::size_t v = 0; v < grid.values.size(); ++v) {
    SweepAggregate agg;
    agg.value = grid.values[v];
    agg.n = seeds;
    double sum = 0.0, sum_lambda = 0.0;
    for (int j = 0; j < seeds; ++j) {
      const auto& row = table.rows[v * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(j)];
      sum += row.final_metric_smoothed;
      sum_lambda += row.lambda;
    }
    agg.mean = sum / seeds;
    agg.mean_lambda = sum_lambda / seeds;
    if (seeds > 1) {
      double ss = 0.0;
      for (int j = 0; j < seeds; ++j) {
        const double d = table.rows[v * static_cast<std::size_t>(seeds) + static_cast<std::size_t>(j)].final_metric_smoothed - agg.mean;
        ss += d * d;
      }
      agg.stderr_ = std::sqrt(ss / (seeds - 1)) / std::sqrt(static_cast<double>(seeds));
    }
    table.aggregates.push_back(agg);
  }
  return table;
}

}  // namespace netfleet
