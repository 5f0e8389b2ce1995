#include "netfleet/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace netfleet {

// ---------------------------------------------------------------------------
// datasets

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ';' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size() && numeric; ++i) numeric = parse_double(fields[i], row[i]);
    if (!numeric) {
      if (first_data_line) {  // header
        first_data_line = false;
        continue;
      }
      throw std::runtime_error(fmt::format("dataset: non-numeric field in {}:{}", path, lineno));
    }
    first_data_line = false;
    if (row.size() < 2)
      throw std::runtime_error(fmt::format("dataset: {}:{} needs at least one feature and a label", path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(fmt::format("dataset: {}:{} has {} columns, expected {}", path, lineno,
                                           row.size(), rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("dataset: '" + path + "' contains no samples");

  const std::size_t n = rows.size();
  const std::size_t d = rows.front().size() - 1;
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<long long> raw(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (!std::isfinite(rows[r][c]))
        throw std::runtime_error(fmt::format("dataset: non-finite feature in row {}", r + 1));
      data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    const double label = rows[r][d];
    if (label != std::floor(label)) throw std::runtime_error(fmt::format("dataset: label {} is not an integer", label));
    raw[r] = static_cast<long long>(label);
  }
  std::vector<long long> distinct = raw;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  data.num_classes = static_cast<int>(distinct.size());
  data.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r)
    data.labels[r] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), raw[r]) - distinct.begin());
  return data;
}

Dataset make_blobs(int classes, int per_class, int dim, double spread, std::uint64_t seed,
                   std::uint32_t split) {
  if (classes < 2 || per_class < 1 || dim < 1)
    throw std::invalid_argument("make_blobs: need classes >= 2, per_class >= 1, dim >= 1");
  RngStream centers_rng(seed, RngDomain::dataset, 0);
  Mat centers(classes, dim);
  for (int c = 0; c < classes; ++c)
    for (int j = 0; j < dim; ++j) centers(c, j) = spread * centers_rng.normal();

  RngStream rng(seed, RngDomain::dataset, 1 + split);
  Dataset data;
  data.num_classes = classes;
  const int n = classes * per_class;
  data.features.resize(n, dim + 1);
  data.labels.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const int c = r % classes;
    for (int j = 0; j < dim; ++j) data.features(r, j) = centers(c, j) + rng.normal();
    data.features(r, dim) = 1.0;
    data.labels[static_cast<std::size_t>(r)] = c;
  }
  return data;
}

// ---------------------------------------------------------------------------
// partitions

PartitionAssignment partition_by_label_shards(const std::vector<int>& labels, int m,
                                              int shards_per_worker, int shard_size,
                                              std::uint64_t seed) {
  if (m < 1 || shards_per_worker < 1 || shard_size < 1)
    throw std::invalid_argument("partition: m, shards_per_worker and shard_size must be positive");
  const std::size_t shards = static_cast<std::size_t>(m) * static_cast<std::size_t>(shards_per_worker);
  if (shards * static_cast<std::size_t>(shard_size) > labels.size())
    throw std::invalid_argument(fmt::format("partition: {} shards of {} samples need {} samples, have {}",
                                            shards, shard_size, shards * shard_size, labels.size()));

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  std::vector<int> shard_ids(shards);
  std::iota(shard_ids.begin(), shard_ids.end(), 0);
  RngStream rng(seed, RngDomain::partition, 1);
  for (std::size_t i = shards; i > 1; --i) std::swap(shard_ids[i - 1], shard_ids[rng.uniform_index(i)]);

  PartitionAssignment out;
  out.shard_size = shard_size;
  out.shards_per_worker = shards_per_worker;
  out.samples.resize(static_cast<std::size_t>(m));
  out.shards.resize(static_cast<std::size_t>(m));
  for (int w = 0; w < m; ++w) {
    for (int j = 0; j < shards_per_worker; ++j) {
      const int shard = shard_ids[static_cast<std::size_t>(w * shards_per_worker + j)];
      out.shards[w].push_back(shard);
      const std::size_t begin = static_cast<std::size_t>(shard) * static_cast<std::size_t>(shard_size);
      for (std::size_t r = begin; r < begin + static_cast<std::size_t>(shard_size); ++r)
        out.samples[w].push_back(order[r]);
    }
  }
  return out;
}

PartitionAssignment partition_iid(std::size_t n, int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("partition: m must be positive");
  if (n < static_cast<std::size_t>(m))
    throw std::invalid_argument(fmt::format("partition: {} samples cannot cover {} workers", n, m));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed, RngDomain::partition, 2);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  PartitionAssignment out;
  out.samples.resize(static_cast<std::size_t>(m));
  out.shards.resize(static_cast<std::size_t>(m));
  out.shards_per_worker = 1;
  out.shard_size = static_cast<int>(n / static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < n; ++r) out.samples[r * static_cast<std::size_t>(m) / n].push_back(order[r]);
  return out;
}

// ---------------------------------------------------------------------------
// descriptor

namespace {

int parse_int_field(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_double(value, v) || v != std::floor(v))
    throw std::invalid_argument("objective: '" + key + "' expects an integer, got '" + value + "'");
  return static_cast<int>(v);
}

double parse_real_field(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_double(value, v)) throw std::invalid_argument("objective: '" + key + "' expects a number, got '" + value + "'");
  return v;
}

}  // namespace

ObjectiveSpec ObjectiveSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("objective: descriptor '" + text + "' lacks a kind prefix (quad: or logreg:)");
  const std::string kind = text.substr(0, colon);
  std::vector<std::string> parts;
  {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
  }

  ObjectiveSpec spec;
  std::size_t first_kv = 0;
  if (kind == "quad") {
    spec.kind = Kind::quadratic;
  } else if (kind == "logreg") {
    spec.kind = Kind::logistic_regression;
    if (parts.empty() || parts.front().empty() || parts.front().find('=') != std::string::npos)
      throw std::invalid_argument("objective: logreg descriptor needs a dataset path first");
    spec.data_path = parts.front();
    first_kv = 1;
  } else {
    throw std::invalid_argument("objective: unknown kind '" + kind + "'");
  }

  for (std::size_t i = first_kv; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw std::invalid_argument("objective: expected key=value, got '" + parts[i] + "'");
    const std::string key = parts[i].substr(0, eq);
    const std::string value = parts[i].substr(eq + 1);
    if (spec.kind == Kind::quadratic) {
      if (key == "p") spec.p = parse_int_field(key, value);
      else if (key == "h") spec.h = parse_real_field(key, value);
      else if (key == "sigma") spec.sigma = parse_real_field(key, value);
      else throw std::invalid_argument("objective: unknown quad key '" + key + "'");
    } else {
      if (key == "partition") {
        if (value == "iid") spec.shards_per_worker = 0;
        else if (value.rfind("shards:", 0) == 0) spec.shards_per_worker = parse_int_field(key, value.substr(7));
        else throw std::invalid_argument("objective: partition must be iid or shards:<k>, got '" + value + "'");
      } else if (key == "test") spec.test_path = value;
      else if (key == "ridge") spec.ridge = parse_real_field(key, value);
      else if (key == "classes") spec.blob_classes = parse_int_field(key, value);
      else if (key == "per_class") spec.blob_per_class = parse_int_field(key, value);
      else if (key == "dim") spec.blob_dim = parse_int_field(key, value);
      else if (key == "spread") spec.blob_spread = parse_real_field(key, value);
      else throw std::invalid_argument("objective: unknown logreg key '" + key + "'");
    }
  }
  if (spec.kind == Kind::quadratic) {
    if (spec.p <= 0) throw std::invalid_argument(fmt::format("objective: p must be positive, got {}", spec.p));
    if (spec.h < 0.0 || spec.sigma < 0.0) throw std::invalid_argument("objective: h and sigma must be non-negative");
  } else {
    if (spec.shards_per_worker < 0) throw std::invalid_argument("objective: shards:<k> needs k >= 1");
    if (spec.ridge < 0.0) throw std::invalid_argument("objective: ridge must be non-negative");
  }
  return spec;
}

std::string ObjectiveSpec::to_string() const {
  if (kind == Kind::quadratic) return fmt::format("quad:p={},h={},sigma={}", p, h, sigma);
  std::string out = fmt::format("logreg:{},partition=", data_path);
  out += shards_per_worker == 0 ? std::string("iid") : fmt::format("shards:{}", shards_per_worker);
  if (!test_path.empty()) out += ",test=" + test_path;
  if (ridge != 1e-4) out += fmt::format(",ridge={}", ridge);
  if (data_path == "synthetic_blobs") {
    ObjectiveSpec defaults;
    if (blob_classes != defaults.blob_classes) out += fmt::format(",classes={}", blob_classes);
    if (blob_per_class != defaults.blob_per_class) out += fmt::format(",per_class={}", blob_per_class);
    if (blob_dim != defaults.blob_dim) out += fmt::format(",dim={}", blob_dim);
    if (blob_spread != defaults.blob_spread) out += fmt::format(",spread={}", blob_spread);
  }
  return out;
}

// ---------------------------------------------------------------------------
// objective set

LocalObjectiveSet LocalObjectiveSet::quadratic(std::vector<Mat> A, std::vector<Vec> minimizers,
                                               double sigma) {
  if (A.empty() || A.size() != minimizers.size())
    throw std::invalid_argument("quadratic objectives: need one Hessian and one minimizer per worker");
  if (sigma < 0.0) throw std::invalid_argument("quadratic objectives: sigma must be non-negative");
  LocalObjectiveSet set;
  set.kind_ = Kind::quadratic;
  set.m_ = static_cast<int>(A.size());
  set.p_ = static_cast<int>(minimizers.front().size());
  if (set.p_ <= 0) throw std::invalid_argument("quadratic objectives: dimension must be positive");
  set.sigma_ = sigma;
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].rows() != set.p_ || A[i].cols() != set.p_ || minimizers[i].size() != set.p_)
      throw std::invalid_argument("quadratic objectives: dimension mismatch at worker " + std::to_string(i));
    set.b_.push_back(-(A[i] * minimizers[i]));
  }
  set.A_ = std::move(A);
  set.c_ = std::move(minimizers);
  set.compute_smoothness();
  return set;
}

LocalObjectiveSet LocalObjectiveSet::logistic(const Dataset& train, const PartitionAssignment& partition,
                                              double ridge, std::optional<Dataset> test) {
  if (train.num_classes < 2) throw std::invalid_argument("logistic objectives: need at least two classes");
  LocalObjectiveSet set;
  set.kind_ = Kind::logistic_regression;
  set.m_ = static_cast<int>(partition.samples.size());
  set.ridge_ = ridge;
  set.classes_ = train.num_classes;
  set.features_ = train.dim();
  set.p_ = train.num_classes == 2 ? set.features_ : set.features_ * set.classes_;
  for (int w = 0; w < set.m_; ++w) {
    const auto& rows = partition.samples[static_cast<std::size_t>(w)];
    if (rows.empty()) throw std::invalid_argument(fmt::format("logistic objectives: worker {} owns no samples", w));
    Mat X(static_cast<Eigen::Index>(rows.size()), set.features_);
    std::vector<int> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      X.row(static_cast<Eigen::Index>(r)) = train.features.row(static_cast<Eigen::Index>(rows[r]));
      y[r] = train.labels[rows[r]];
    }
    if (!X.allFinite()) throw std::invalid_argument(fmt::format("logistic objectives: worker {} has non-finite features", w));
    set.X_.push_back(std::move(X));
    set.y_.push_back(std::move(y));
  }
  if (test && (test->dim() != set.features_))
    throw std::invalid_argument("logistic objectives: test set feature count differs from training set");
  set.test_ = std::move(test);
  set.compute_smoothness();
  return set;
}

void LocalObjectiveSet::compute_smoothness() {
  double best = 0.0;
  if (kind_ == Kind::quadratic) {
    for (const Mat& A : A_) {
      Eigen::SelfAdjointEigenSolver<Mat> eig(A, Eigen::EigenvaluesOnly);
      best = std::max(best, eig.eigenvalues().maxCoeff());
    }
  } else {
    // Hessian of the mean loss is bounded by c * X^T X / n with c = 1/4 for
    // the sigmoid and c = 1/2 for softmax.
    const double curvature = classes_ == 2 ? 0.25 : 0.5;
    for (const Mat& X : X_) {
      const Mat gram = X.transpose() * X / static_cast<double>(X.rows());
      Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
      best = std::max(best, curvature * eig.eigenvalues().maxCoeff());
    }
    best += ridge_;
  }
  smoothness_ = best;
}

std::size_t LocalObjectiveSet::local_size(int worker) const {
  return kind_ == Kind::logistic_regression ? y_.at(static_cast<std::size_t>(worker)).size() : 0;
}

namespace {

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double LocalObjectiveSet::local_value(int worker, const Vec& x) const {
  if (x.size() != p_) throw std::invalid_argument("objective: model dimension mismatch");
  const auto w = static_cast<std::size_t>(worker);
  if (kind_ == Kind::quadratic) {
    const Vec d = x - c_[w];
    return 0.5 * d.dot(A_[w] * d);
  }
  const Mat& X = X_[w];
  const auto& y = y_[w];
  double loss = 0.0;
  if (classes_ == 2) {
    const Vec z = X * x;
    for (Eigen::Index r = 0; r < z.size(); ++r) loss += log1pexp(z(r)) - y[static_cast<std::size_t>(r)] * z(r);
  } else {
    const Eigen::Map<const Mat> Wt(x.data(), features_, classes_);
    const Mat Z = X * Wt;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
      const double zmax = Z.row(r).maxCoeff();
      const double lse = zmax + std::log((Z.row(r).array() - zmax).exp().sum());
      loss += lse - Z(r, y[static_cast<std::size_t>(r)]);
    }
  }
  return loss / static_cast<double>(X.rows()) + 0.5 * ridge_ * x.squaredNorm();
}

Vec LocalObjectiveSet::logistic_gradient(const Mat& X, const std::vector<int>& y,
                                         const std::vector<std::size_t>* rows, const Vec& x) const {
  const Eigen::Index n = rows ? static_cast<Eigen::Index>(rows->size()) : X.rows();
  Mat batch;
  if (rows) {
    batch.resize(n, X.cols());
    for (Eigen::Index r = 0; r < n; ++r) batch.row(r) = X.row(static_cast<Eigen::Index>((*rows)[static_cast<std::size_t>(r)]));
  }
  const Mat& B = rows ? batch : X;
  auto label = [&](Eigen::Index r) {
    return y[rows ? (*rows)[static_cast<std::size_t>(r)] : static_cast<std::size_t>(r)];
  };

  Vec grad(p_);
  if (classes_ == 2) {
    Vec resid = B * x;
    for (Eigen::Index r = 0; r < n; ++r) resid(r) = sigmoid(resid(r)) - label(r);
    grad = B.transpose() * resid / static_cast<double>(n);
  } else {
    const Eigen::Map<const Mat> Wt(x.data(), features_, classes_);
    Mat P = B * Wt;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double zmax = P.row(r).maxCoeff();
      P.row(r) = (P.row(r).array() - zmax).exp();
      P.row(r) /= P.row(r).sum();
      P(r, label(r)) -= 1.0;
    }
    Eigen::Map<Mat> G(grad.data(), features_, classes_);
    G = B.transpose() * P / static_cast<double>(n);
  }
  grad += ridge_ * x;
  return grad;
}

Vec LocalObjectiveSet::local_gradient(int worker, const Vec& x) const {
  if (x.size() != p_) throw std::invalid_argument("objective: model dimension mismatch");
  const auto w = static_cast<std::size_t>(worker);
  if (kind_ == Kind::quadratic) return A_[w] * x + b_[w];
  return logistic_gradient(X_[w], y_[w], nullptr, x);
}

Vec LocalObjectiveSet::stochastic_gradient(int worker, const Vec& x, int batch_size, RngStream& rng) const {
  if (worker < 0 || worker >= m_) throw std::out_of_range(fmt::format("objective: worker {} out of range", worker));
  if (kind_ == Kind::quadratic) {
    Vec g = local_gradient(worker, x);
    if (sigma_ > 0.0) {
      const double sd = sigma_ / std::sqrt(static_cast<double>(p_));
      for (Eigen::Index j = 0; j < g.size(); ++j) g(j) += sd * rng.normal();
    }
    return g;
  }
  if (batch_size < 1) throw std::invalid_argument("objective: batch size must be >= 1");
  const auto w = static_cast<std::size_t>(worker);
  const std::size_t n = y_[w].size();
  if (n == 0) throw std::runtime_error(fmt::format("objective: worker {} has an empty local dataset", worker));
  if (static_cast<std::size_t>(batch_size) >= n) return local_gradient(worker, x);
  std::vector<std::size_t> rows(static_cast<std::size_t>(batch_size));
  for (auto& r : rows) r = rng.uniform_index(n);
  return logistic_gradient(X_[w], y_[w], &rows, x);
}

double LocalObjectiveSet::value(const Vec& x) const {
  double total = 0.0;
  for (int i = 0; i < m_; ++i) total += local_value(i, x);
  return total / m_;
}

Vec LocalObjectiveSet::full_gradient(const Vec& x) const {
  Vec total = Vec::Zero(p_);
  for (int i = 0; i < m_; ++i) total += local_gradient(i, x);
  return total / m_;
}

Vec LocalObjectiveSet::global_minimizer() const {
  if (kind_ != Kind::quadratic) throw std::logic_error("global_minimizer: only defined for quadratics");
  Mat H = Mat::Zero(p_, p_);
  Vec rhs = Vec::Zero(p_);
  for (int i = 0; i < m_; ++i) {
    H += A_[static_cast<std::size_t>(i)];
    rhs -= b_[static_cast<std::size_t>(i)];
  }
  return H.ldlt().solve(rhs);
}

double LocalObjectiveSet::accuracy(const Dataset& data, const Vec& x) const {
  if (kind_ != Kind::logistic_regression) throw std::logic_error("accuracy: only defined for logistic objectives");
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  if (classes_ == 2) {
    const Vec z = data.features * x;
    for (Eigen::Index r = 0; r < z.size(); ++r) correct += ((z(r) > 0.0 ? 1 : 0) == data.labels[static_cast<std::size_t>(r)]);
  } else {
    const Eigen::Map<const Mat> Wt(x.data(), features_, classes_);
    const Mat Z = data.features * Wt;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
      Eigen::Index best = 0;
      Z.row(r).maxCoeff(&best);
      correct += (best == data.labels[static_cast<std::size_t>(r)]);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double LocalObjectiveSet::test_accuracy(const Vec& x) const {
  if (!test_) throw std::logic_error("test_accuracy: no held-out set attached");
  return accuracy(*test_, x);
}

// ---------------------------------------------------------------------------

LocalObjectiveSet build_objective_set(const ObjectiveSpec& spec, int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("objective: worker count must be >= 1");
  if (spec.kind == ObjectiveSpec::Kind::quadratic) {
    if (spec.p <= 0) throw std::invalid_argument("objective: p must be positive");
    const int p = spec.p;
    std::vector<Mat> A;
    std::vector<Vec> c;
    for (int i = 0; i < m; ++i) {
      RngStream rng(seed, RngDomain::objective, static_cast<std::uint32_t>(i));
      Mat G(p, p);
      for (int r = 0; r < p; ++r)
        for (int k = 0; k < p; ++k) G(r, k) = rng.normal();
      const Mat Q = Eigen::HouseholderQR<Mat>(G).householderQ();
      Vec d(p);
      for (int j = 0; j < p; ++j) d(j) = 0.1 + 0.9 * rng.uniform();
      Mat Ai = Q * d.asDiagonal() * Q.transpose();
      Ai = 0.5 * (Ai + Ai.transpose()).eval();

      Vec dir(p);
      for (int j = 0; j < p; ++j) dir(j) = rng.normal();
      const double radius = spec.h * std::pow(rng.uniform(), 1.0 / p);
      Vec ci = dir.norm() > 0.0 ? Vec(dir.normalized() * radius) : Vec(Vec::Zero(p));
      A.push_back(std::move(Ai));
      c.push_back(std::move(ci));
    }
    return LocalObjectiveSet::quadratic(std::move(A), std::move(c), spec.sigma);
  }

  Dataset train;
  std::optional<Dataset> test;
  if (spec.data_path == "synthetic_blobs") {
    train = make_blobs(spec.blob_classes, spec.blob_per_class, spec.blob_dim, spec.blob_spread, seed, 0);
    test = make_blobs(spec.blob_classes, std::max(1, spec.blob_per_class / 3), spec.blob_dim, spec.blob_spread, seed, 1);
  } else {
    train = load_dataset(spec.data_path);
    if (!spec.test_path.empty()) test = load_dataset(spec.test_path);
  }
  PartitionAssignment partition;
  if (spec.shards_per_worker == 0) {
    partition = partition_iid(train.size(), m, seed);
  } else {
    const std::size_t shards = static_cast<std::size_t>(m) * static_cast<std::size_t>(spec.shards_per_worker);
    const std::size_t shard_size = train.size() / shards;
    if (shard_size == 0)
      throw std::invalid_argument(fmt::format("objective: {} samples cannot fill {} shards", train.size(), shards));
    partition = partition_by_label_shards(train.labels, m, spec.shards_per_worker, static_cast<int>(shard_size), seed);
  }
  return LocalObjectiveSet::logistic(train, partition, spec.ridge, std::move(test));
}

}  // namespace netfleet
