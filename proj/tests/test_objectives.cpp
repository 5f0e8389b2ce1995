#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "netfleet/objectives.hpp"
#include "oracles.hpp"

using namespace netfleet;

namespace {

LocalObjectiveSet scalar_quadratics(std::vector<double> centers, double curvature = 1.0, double sigma = 0.0) {
  std::vector<Mat> A;
  std::vector<Vec> c;
  for (double ci : centers) {
    A.push_back(Mat::Constant(1, 1, curvature));
    c.push_back(Vec::Constant(1, ci));
  }
  return LocalObjectiveSet::quadratic(std::move(A), std::move(c), sigma);
}

void check_partition(const PartitionAssignment& part, std::size_t n, int m, int shards_per_worker,
                     int shard_size) {
  REQUIRE(part.samples.size() == static_cast<std::size_t>(m));
  std::set<std::size_t> seen;
  std::set<int> shard_seen;
  for (int w = 0; w < m; ++w) {
    CHECK(part.shards[w].size() == static_cast<std::size_t>(shards_per_worker));
    CHECK(part.samples[w].size() == static_cast<std::size_t>(shards_per_worker * shard_size));
    for (int s : part.shards[w]) CHECK(shard_seen.insert(s).second);
    for (std::size_t idx : part.samples[w]) {
      CHECK(idx < n);
      CHECK(seen.insert(idx).second);
    }
  }
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("netfleet_test_" + name);
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("objective descriptor parsing") {
  const auto q = ObjectiveSpec::parse("quad:p=3,h=0.5,sigma=2");
  CHECK(q.kind == ObjectiveSpec::Kind::quadratic);
  CHECK(q.p == 3);
  CHECK(q.h == 0.5);
  CHECK(q.sigma == 2.0);
  CHECK(ObjectiveSpec::parse(q.to_string()) == q);

  const auto l = ObjectiveSpec::parse("logreg:synthetic_blobs,partition=shards:2,classes=4,per_class=50");
  CHECK(l.kind == ObjectiveSpec::Kind::logistic_regression);
  CHECK(l.data_path == "synthetic_blobs");
  CHECK(l.shards_per_worker == 2);
  CHECK(l.blob_classes == 4);
  CHECK(l.blob_per_class == 50);
  CHECK(l.ridge == 1e-4);
  CHECK(ObjectiveSpec::parse(l.to_string()) == l);
  CHECK(ObjectiveSpec::parse("logreg:data.csv,partition=iid").shards_per_worker == 0);

  CHECK_THROWS_AS(ObjectiveSpec::parse("quad:p=0"), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveSpec::parse("quad:p=-2,h=1"), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveSpec::parse("quad:q=1"), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveSpec::parse("cnn:resnet"), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveSpec::parse("p=10"), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveSpec::parse("logreg:x.csv,partition=random"), std::invalid_argument);
}

TEST_CASE("homogeneous quadratic ensemble") {
  const auto set = build_objective_set(ObjectiveSpec::parse("quad:p=1,h=0,sigma=0"), 4, 1);
  CHECK(set.workers() == 4);
  for (const Vec& c : set.minimizers()) CHECK((c - set.minimizers()[0]).norm() == 0.0);
  CHECK(global_full_gradient(set, set.minimizers()[0]).norm() == 0.0);

  const auto set10 = build_objective_set(ObjectiveSpec::parse("quad:p=10,h=0,sigma=0"), 5, 2);
  CHECK(global_full_gradient(set10, set10.minimizers()[0]).norm() < 1e-14);
}

TEST_CASE("heterogeneous quadratic ensemble") {
  const auto set = build_objective_set(ObjectiveSpec::parse("quad:p=10,h=5,sigma=1"), 8, 3);
  CHECK(set.workers() == 8);
  CHECK(set.dim() == 10);
  CHECK(set.sigma() == 1.0);
  CHECK_FALSE(set.deterministic());
  double L = 0.0;
  for (int i = 0; i < 8; ++i) {
    const Mat& A = set.hessians()[i];
    CHECK((A - A.transpose()).norm() == 0.0);
    const auto ev = oracle::jacobi_eigenvalues(A);
    CHECK(ev.front() >= 0.1 - 1e-12);
    CHECK(ev.back() <= 1.0 + 1e-12);
    L = std::max(L, static_cast<double>(ev.back()));
    CHECK(set.minimizers()[i].norm() <= 5.0);
    CHECK((set.linear_terms()[i] + A * set.minimizers()[i]).norm() < 1e-12);
    for (int j = 0; j < i; ++j) CHECK((set.minimizers()[i] - set.minimizers()[j]).norm() > 1e-3);
  }
  CHECK(std::abs(smoothness_constant(set) - L) < 1e-12);
  CHECK(smoothness_constant(set) >= 0.1);
  CHECK(smoothness_constant(set) <= 1.0);
  CHECK(global_full_gradient(set, set.global_minimizer()).norm() < 1e-10);

  // Same seed, same ensemble.
  const auto again = build_objective_set(ObjectiveSpec::parse("quad:p=10,h=5,sigma=1"), 8, 3);
  CHECK((again.hessians()[5] - set.hessians()[5]).norm() == 0.0);
}

TEST_CASE("global gradient of scalar quadratics") {
  const auto set = scalar_quadratics({-1.0, 1.0});
  CHECK(global_full_gradient(set, Vec::Constant(1, 0.0))(0) == 0.0);
  CHECK(global_full_gradient(set, Vec::Constant(1, 1.0))(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(set.value(Vec::Constant(1, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(smoothness_constant(scalar_quadratics({0.0, 0.0, 0.0})) == 1.0);
  CHECK_THROWS_AS(set.local_gradient(0, Vec::Zero(2)), std::invalid_argument);
}

TEST_CASE("noiseless quadratic oracle is exact") {
  const auto set = build_objective_set(ObjectiveSpec::parse("quad:p=6,h=2,sigma=0"), 3, 9);
  CHECK(set.deterministic());
  const Vec x = Vec::LinSpaced(6, -1.0, 2.0);
  for (int batch : {1, 7, 1000}) {
    RngStream rng = RngStream::oracle(4, 1, 2, 0);
    const Vec g = stochastic_gradient(set, 1, x, batch, rng);
    CHECK((g - (set.hessians()[1] * x + set.linear_terms()[1])).norm() == 0.0);
  }
  RngStream rng = RngStream::oracle(4, 1, 2, 0);
  CHECK_THROWS_AS(set.stochastic_gradient(3, x, 1, rng), std::out_of_range);
}

TEST_CASE("noisy quadratic oracle: Monte-Carlo mean and variance") {
  std::vector<Mat> A{Mat::Constant(1, 1, 2.0)};
  std::vector<Vec> c{Vec::Zero(1)};
  const auto set = LocalObjectiveSet::quadratic(A, c, 1.0);
  const Vec x = Vec::Constant(1, 1.0);
  const int N = 100000;
  double sum = 0.0;
  for (int k = 0; k < N; ++k) {
    RngStream rng = RngStream::oracle(17, 0, 0, static_cast<std::uint32_t>(k));
    sum += set.stochastic_gradient(0, x, 1, rng)(0);
  }
  CHECK(std::abs(sum / N - 2.0) <= 0.01);

  for (double sigma : {0.5, 1.0, 3.0}) {
    const auto multi = build_objective_set(
        ObjectiveSpec::parse("quad:p=8,h=1,sigma=" + std::to_string(sigma)), 2, 5);
    const Vec z = Vec::LinSpaced(8, 0.0, 1.0);
    const Vec exact = multi.local_gradient(1, z);
    Vec mean = Vec::Zero(8);
    double total_var = 0.0;
    std::vector<Vec> draws;
    for (int k = 0; k < N; ++k) {
      RngStream rng = RngStream::oracle(3, 1, static_cast<std::uint32_t>(k), 0);
      draws.push_back(multi.stochastic_gradient(1, z, 1, rng));
      mean += draws.back();
    }
    mean /= N;
    for (const Vec& d : draws) total_var += (d - mean).squaredNorm();
    total_var /= (N - 1);
    CHECK(total_var <= sigma * sigma * 1.05);
    CHECK(total_var >= sigma * sigma * 0.95);
    const double band = 3.0 * sigma / std::sqrt(8.0) / std::sqrt(static_cast<double>(N));
    for (int j = 0; j < 8; ++j) CHECK(std::abs(mean(j) - exact(j)) <= band);
  }
}

TEST_CASE("quadratic gradient agrees with finite differences") {
  const auto set = build_objective_set(ObjectiveSpec::parse("quad:p=7,h=3,sigma=0"), 4, 21);
  RngStream pts(99, RngDomain::dataset, 0);
  for (int t = 0; t < 20; ++t) {
    Vec x(7);
    for (int j = 0; j < 7; ++j) x(j) = 4.0 * pts.normal();
    const int w = t % 4;
    const Vec fd = oracle::finite_difference([&](const Vec& z) { return set.local_value(w, z); }, x);
    const Vec g = set.local_gradient(w, x);
    CHECK((fd - g).norm() <= 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("logistic gradient agrees with finite differences") {
  for (int classes : {2, 4}) {
    const Dataset data = make_blobs(classes, 30, 3, 2.0, 8, 0);
    const auto part = partition_iid(data.size(), 3, 1);
    const auto set = LocalObjectiveSet::logistic(data, part, 1e-3);
    CHECK(set.dim() == (classes == 2 ? 4 : 16));
    RngStream pts(5, RngDomain::dataset, 1);
    for (int t = 0; t < 10; ++t) {
      Vec x(set.dim());
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = pts.normal();
      const Vec fd = oracle::finite_difference([&](const Vec& z) { return set.local_value(t % 3, z); }, x);
      CHECK((fd - set.local_gradient(t % 3, x)).norm() <= 1e-6);
    }
  }
}

TEST_CASE("logistic minibatch oracle") {
  const Dataset data = make_blobs(2, 20, 2, 1.0, 3, 0);
  const auto part = partition_iid(data.size(), 2, 0);
  const auto set = LocalObjectiveSet::logistic(data, part, 1e-4);
  const Vec x = Vec::LinSpaced(set.dim(), -0.5, 0.5);
  const Vec full = set.local_gradient(0, x);
  RngStream rng = RngStream::oracle(1, 0, 0, 0);
  CHECK((set.stochastic_gradient(0, x, 20, rng) - full).norm() == 0.0);
  CHECK((set.stochastic_gradient(0, x, 500, rng) - full).norm() == 0.0);
  CHECK_THROWS_AS(set.stochastic_gradient(0, x, 0, rng), std::invalid_argument);

  // Unbiased within a 3-sigma band per coordinate.
  const int N = 100000;
  Vec mean = Vec::Zero(set.dim());
  Vec sq = Vec::Zero(set.dim());
  for (int k = 0; k < N; ++k) {
    RngStream r = RngStream::oracle(2, 0, static_cast<std::uint32_t>(k), 0);
    const Vec g = set.stochastic_gradient(0, x, 3, r);
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= N;
  const Vec var = sq / N - mean.cwiseProduct(mean);
  for (Eigen::Index j = 0; j < x.size(); ++j)
    CHECK(std::abs(mean(j) - full(j)) <= 3.0 * std::sqrt(var(j) / N));
}

TEST_CASE("logistic smoothness bound") {
  Dataset d;
  d.features = Mat::Constant(6, 1, 2.0);
  d.labels = {0, 1, 0, 1, 1, 0};
  d.num_classes = 2;
  const auto set = LocalObjectiveSet::logistic(d, partition_iid(6, 2, 0), 0.0);
  CHECK(smoothness_constant(set) == doctest::Approx(1.0).epsilon(1e-14));

  // The bound dominates the curvature seen along random directions.
  const auto multi = LocalObjectiveSet::logistic(make_blobs(3, 40, 4, 1.5, 2, 0), partition_iid(120, 4, 0), 1e-4);
  RngStream rng(3, RngDomain::dataset, 2);
  for (int t = 0; t < 20; ++t) {
    Vec x(multi.dim()), u(multi.dim());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      x(j) = rng.normal();
      u(j) = rng.normal();
    }
    u.normalize();
    const double h = 1e-4;
    const double curv = (multi.local_gradient(t % 4, x + h * u) - multi.local_gradient(t % 4, x - h * u)).dot(u) / (2 * h);
    CHECK(curv <= smoothness_constant(multi) + 1e-8);
  }
}

TEST_CASE("label-shard partitioning examples") {
  const auto tiny = partition_by_label_shards({0, 0, 1, 1}, 2, 1, 2, 0);
  std::set<std::vector<std::size_t>> got;
  for (auto s : tiny.samples) {
    std::sort(s.begin(), s.end());
    got.insert(s);
  }
  CHECK(got == std::set<std::vector<std::size_t>>{{0, 1}, {2, 3}});

  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(i % 3);
  const auto small = partition_by_label_shards(labels, 3, 2, 2, 4);
  check_partition(small, 12, 3, 2, 2);
  for (const auto& s : small.samples) {
    std::set<int> distinct;
    for (auto idx : s) distinct.insert(labels[idx]);
    CHECK(distinct.size() <= 3);
  }

  CHECK_THROWS_AS(partition_by_label_shards(labels, 4, 2, 2, 0), std::invalid_argument);
}

TEST_CASE("label-shard partition invariants across seeds") {
  std::vector<int> labels;
  for (int i = 0; i < 50000; ++i) labels.push_back((i * 7919) % 10);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto part = partition_by_label_shards(labels, 125, 2, 200, seed);
    check_partition(part, labels.size(), 125, 2, 200);
    for (const auto& s : part.samples) {
      CHECK(s.size() == 400);
      std::set<int> distinct;
      for (auto idx : s) distinct.insert(labels[idx]);
      CHECK(distinct.size() <= 4);
    }
  }
  CHECK(partition_by_label_shards(labels, 125, 2, 200, 1).shards != partition_by_label_shards(labels, 125, 2, 200, 2).shards);
}

TEST_CASE("iid partition") {
  const auto part = partition_iid(103, 10, 3);
  std::set<std::size_t> seen;
  for (const auto& s : part.samples) {
    CHECK((s.size() == 10 || s.size() == 11));
    for (auto idx : s) CHECK(seen.insert(idx).second);
  }
  CHECK(seen.size() == 103);
  CHECK_THROWS_AS(partition_iid(3, 4, 0), std::invalid_argument);
}

TEST_CASE("synthetic blob federation with label shards") {
  const auto set = build_objective_set(ObjectiveSpec::parse("logreg:synthetic_blobs,partition=shards:2"), 50, 0);
  CHECK(set.workers() == 50);
  CHECK(set.kind() == LocalObjectiveSet::Kind::logistic_regression);
  CHECK(set.num_classes() == 10);
  CHECK(set.has_test_set());
  for (int w = 0; w < 50; ++w) {
    CHECK(set.local_size(w) == 120);
    std::set<int> distinct(set.local_labels()[w].begin(), set.local_labels()[w].end());
    CHECK(distinct.size() <= 4);
  }
  const double acc = set.test_accuracy(Vec::Zero(set.dim()));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("dataset files") {
  const auto good = temp_file("good.csv", "# comment\nf1,f2,label\n1.0,2.0,7\n-1,0.5,3\n2,2,7\n");
  const Dataset d = load_dataset(good.string());
  CHECK(d.size() == 3);
  CHECK(d.dim() == 2);
  CHECK(d.num_classes == 2);
  CHECK(d.labels == std::vector<int>{1, 0, 1});
  CHECK(d.features(1, 1) == 0.5);

  const auto ws = temp_file("ws.txt", "1 2 0\n3 4 1\n");
  CHECK(load_dataset(ws.string()).size() == 2);

  CHECK_THROWS_AS(load_dataset("/nonexistent/netfleet.csv"), std::runtime_error);
  const auto ragged = temp_file("ragged.csv", "1,2,0\n1,1\n");
  CHECK_THROWS_AS(load_dataset(ragged.string()), std::runtime_error);
  const auto empty = temp_file("empty.csv", "# nothing\n");
  CHECK_THROWS_AS(load_dataset(empty.string()), std::runtime_error);

  auto spec = ObjectiveSpec::parse("logreg:" + good.string() + ",partition=iid");
  const auto set = build_objective_set(spec, 3, 0);
  CHECK(set.workers() == 3);
  CHECK_FALSE(set.has_test_set());
  CHECK_THROWS_AS(build_objective_set(ObjectiveSpec::parse("logreg:/nonexistent.csv,partition=iid"), 2, 0),
                  std::runtime_error);
}
