#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "netfleet/harness.hpp"

using namespace netfleet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("netfleet_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("trailing moving average") {
  CHECK(smooth_series({0.0, 10.0}, 2) == std::vector<double>{0.0, 5.0});
  CHECK(smooth_series({3.0, 3.0, 3.0, 3.0}, 3) == std::vector<double>{3.0, 3.0, 3.0, 3.0});
  CHECK(smooth_series({1.0, 2.0, 3.0, 4.0}, 1) == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(smooth_series({}, 4).empty());
  std::vector<double> long_series(1000);
  for (std::size_t t = 0; t < long_series.size(); ++t) long_series[t] = static_cast<double>(t % 17);
  const auto sm = smooth_series(long_series, kSmoothingWindow);
  CHECK(sm.size() == 1000);
  double expect = 0.0;
  for (std::size_t j = 990; j < 1000; ++j) expect += long_series[j];
  CHECK(sm.back() == doctest::Approx(expect / 10.0).epsilon(1e-15));
  CHECK_THROWS_AS(smooth_series({1.0}, 0), std::invalid_argument);
}

TEST_CASE("config files") {
  const auto kv = parse_key_values("# header\nlocal_steps = 4\n  workers=3 # trailing\n\n");
  CHECK(kv.at("local-steps") == "4");
  CHECK(kv.at("workers") == "3");

  RunConfig c = RunConfig::parse("algo=ldsgd\nworkers=7\nrounds=12\nlocal-steps=3\neta=0.125\ntopology=ring\n"
                                 "objective=quad:p=3,h=2,sigma=0.5\nbatch=8\nseed=99\nmetric-every=2\n"
                                 "eta-decay-every=5\nout=/tmp/x\nthreads=2\nwall-clock=true\nc-eta=0.5\n");
  CHECK(c.algo == Algorithm::ldsgd);
  CHECK(c.workers == 7);
  CHECK(c.eta == 0.125);
  CHECK(c.seed == 99);
  CHECK(c.wall_clock);
  CHECK(RunConfig::parse(c.emit()) == c);

  RunConfig autoeta = c;
  autoeta.eta.reset();
  CHECK(autoeta.emit().find("eta=auto") != std::string::npos);
  CHECK(RunConfig::parse(autoeta.emit()) == autoeta);

  RunConfig odd;
  odd.eta = 0.1 + 0.2;
  odd.c_eta = 1.0 / 3.0;
  CHECK(RunConfig::parse(odd.emit()) == odd);
  CHECK(RunConfig::parse(RunConfig{}.emit()) == RunConfig{});
}

TEST_CASE("config hash covers result-relevant fields only") {
  RunConfig a;
  RunConfig b = a;
  b.out = "/elsewhere";
  b.threads = 8;
  CHECK(a.hash() == b.hash());
  b.seed = 1;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("config errors name the field") {
  CHECK(error_of([] { RunConfig::parse("wrokers=3"); }).find("wrokers") != std::string::npos);
  CHECK(error_of([] { RunConfig::parse("workers=three"); }).find("workers") != std::string::npos);
  CHECK(error_of([] { RunConfig::parse("algo=sgd"); }).find("sgd") != std::string::npos);
  auto field_error = [](auto mutate, const std::string& field) {
    RunConfig c;
    mutate(c);
    const auto msg = error_of([&] { c.validate(); });
    CAPTURE(msg);
    CHECK(msg.find(field) != std::string::npos);
  };
  field_error([](RunConfig& c) { c.workers = 0; }, "workers");
  field_error([](RunConfig& c) { c.rounds = 0; }, "rounds");
  field_error([](RunConfig& c) { c.local_steps = 0; }, "local-steps");
  field_error([](RunConfig& c) { c.eta = -1.0; }, "eta");
  field_error([](RunConfig& c) { c.batch = 0; }, "batch");
  field_error([](RunConfig& c) { c.metric_every = 0; }, "metric-every");
  field_error([](RunConfig& c) { c.topology = "star"; }, "topology");
  field_error([](RunConfig& c) { c.objective = "quad:p=0"; }, "objective");
  field_error([](RunConfig& c) { c.c_eta = 0.0; }, "c-eta");
  field_error([](RunConfig& c) { c.threads = 0; }, "threads");
  CHECK_NOTHROW(RunConfig{}.validate());
}

TEST_CASE("minimal experiment") {
  RunConfig c;
  c.workers = 1;
  c.rounds = 1;
  c.local_steps = 1;
  c.objective = "quad:p=3,h=1,sigma=0";
  c.topology = "ring";
  const auto out = scratch("minimal");
  c.out = out.string();
  const auto res = run_experiment(c);
  CHECK(res.training.trace.records.size() == 1);
  CHECK(res.summary.lambda == 0.0);
  CHECK(res.summary.comm_rounds == 1);
  CHECK(res.summary.wall_ms >= 0.0);
  const auto csv = slurp(out / "trace.csv");
  CHECK(csv.rfind("algo,s,k,grad_norm_sq,consensus_err,metric,potential,elapsed_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const auto summary = slurp(out / "summary.txt");
  for (const char* key : {"lambda=0\n", "L=", "eta=", "eta_max=", "argmin_term=", "comm_rounds=1\n",
                          "final_metric_smoothed=", "wall_ms="})
    CHECK(summary.find(key) != std::string::npos);
}

TEST_CASE("experiment summary reports gossip counts and the certificate gap") {
  RunConfig c;
  c.workers = 50;
  c.rounds = 1000;
  c.local_steps = 10;
  c.eta = 0.01;
  c.batch = 32;
  c.topology = "er:0.5";
  c.objective = "quad:p=4,h=1,sigma=0.1";
  c.metric_every = 100;
  const auto res = run_experiment(c);
  CHECK(res.summary.comm_rounds == 1000);
  CHECK(res.summary.total_local_steps == 10000);
  CHECK(res.summary.eta_warn);
  CHECK(res.summary.to_text().find("eta_warn=WARN") != std::string::npos);
  CHECK(res.training.trace.records.size() == 100);

  c.algo = Algorithm::gtsgd;
  c.rounds = 20;
  CHECK(run_experiment(c).summary.comm_rounds == 200);
}

TEST_CASE("automatic step size follows the linear-speedup schedule") {
  RunConfig c;
  c.workers = 10;
  c.rounds = 1000;
  c.local_steps = 7;
  c.eta.reset();
  c.c_eta = 0.5;
  c.objective = "quad:p=2,h=1,sigma=0";
  c.metric_every = 50;
  const auto res = run_experiment(c);
  CHECK(res.summary.local_steps == 1);
  CHECK(res.summary.eta == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(res.config.eta.value() == res.summary.eta);
  CHECK(res.summary.side_condition);
}

TEST_CASE("logistic experiment reports held-out accuracy") {
  RunConfig c;
  c.workers = 4;
  c.rounds = 5;
  c.local_steps = 2;
  c.eta = 0.1;
  c.objective = "logreg:synthetic_blobs,partition=shards:2,classes=4,per_class=40";
  const auto res = run_experiment(c);
  REQUIRE(res.summary.test_accuracy.has_value());
  CHECK(*res.summary.test_accuracy >= 0.0);
  CHECK(*res.summary.test_accuracy <= 1.0);
  CHECK(res.summary.to_text().find("test_accuracy=") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  RunConfig c;
  c.workers = 6;
  c.rounds = 8;
  c.local_steps = 3;
  c.objective = "quad:p=4,h=2,sigma=1";
  const auto a = scratch("det_a"), b = scratch("det_b");
  c.out = a.string();
  run_experiment(c);
  c.out = b.string();
  c.threads = 3;
  run_experiment(c);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
}

TEST_CASE("sweep axes") {
  CHECK(SweepGrid::parse_axis("local_rounds") == SweepGrid::Axis::local_rounds);
  CHECK(SweepGrid::parse_axis("connectivity") == SweepGrid::Axis::connectivity);
  CHECK_THROWS_AS(SweepGrid::parse_axis("batch"), std::invalid_argument);
  CHECK(SweepGrid::parse_values("1, 8,10,20") == std::vector<double>{1, 8, 10, 20});
  CHECK_THROWS_AS(SweepGrid::parse_values("1,x"), std::invalid_argument);

  SweepGrid g;
  g.base.seed = 5;
  g.axis = SweepGrid::Axis::connectivity;
  const auto cell = g.cell(0.3, 2);
  CHECK(cell.topology == "er:0.3");
  CHECK(cell.seed == 7);
  g.axis = SweepGrid::Axis::workers;
  CHECK(g.cell(30, 0).workers == 30);
  g.axis = SweepGrid::Axis::eta;
  CHECK(g.cell(0.005, 0).eta == 0.005);
  g.axis = SweepGrid::Axis::local_rounds;
  CHECK(g.cell(8, 0).local_steps == 8);
}

TEST_CASE("single-cell sweep equals the experiment") {
  SweepGrid g;
  g.base.workers = 5;
  g.base.rounds = 6;
  g.base.objective = "quad:p=3,h=2,sigma=0.5";
  g.base.seed = 11;
  g.axis = SweepGrid::Axis::local_rounds;
  g.values = {4};
  g.seeds = 1;
  const auto table = sweep(g);
  REQUIRE(table.rows.size() == 1);
  RunConfig c = g.base;
  c.local_steps = 4;
  const auto res = run_experiment(c);
  CHECK(table.rows[0].final_metric_smoothed == res.summary.final_metric_smoothed);
  CHECK(table.aggregates[0].mean == res.summary.final_metric_smoothed);
  CHECK(table.aggregates[0].n == 1);
  CHECK(table.aggregates[0].stderr_ == 0.0);
}

TEST_CASE("sweeps over local rounds and connectivity") {
  SweepGrid g;
  g.base.workers = 10;
  g.base.rounds = 10;
  g.base.objective = "quad:p=3,h=2,sigma=0.2";
  g.base.threads = 2;
  g.axis = SweepGrid::Axis::local_rounds;
  g.values = {1, 8, 10, 20};
  g.seeds = 2;
  auto table = sweep(g);
  CHECK(table.rows.size() == 8);
  CHECK(table.aggregates.size() == 4);
  CHECK(table.rows[3].comm_rounds == 10);
  CHECK(table.aggregates_csv().rfind("value,n,mean_final_metric,stderr,mean_lambda\n", 0) == 0);
  const auto again = sweep(g);
  CHECK(again.rows_csv() == table.rows_csv());

  g.axis = SweepGrid::Axis::connectivity;
  g.values = {0.1, 0.3, 0.5, 0.9};
  g.base.workers = 30;
  g.base.rounds = 2;
  g.seeds = 3;
  table = sweep(g);
  REQUIRE(table.aggregates.size() == 4);
  for (std::size_t v = 1; v < 4; ++v) CHECK(table.aggregates[v].mean_lambda < table.aggregates[v - 1].mean_lambda);
}

TEST_CASE("file writing") {
  const auto dir = scratch("files") / "nested" / "deeper";
  write_text_file((dir / "a.txt").string(), "hello\n");
  CHECK(slurp(dir / "a.txt") == "hello\n");
  CHECK_THROWS(write_text_file("/proc/netfleet_forbidden/a.txt", "x"));
}
