#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netfleet/rng.hpp"
#include "netfleet/stacked.hpp"

namespace netfleet {

/// Labelled samples, one row per sample.
struct Dataset {
  Mat features;
  std::vector<int> labels;  // 0 .. num_classes-1
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// Reads numeric delimited text (comma, semicolon or whitespace separated),
/// one sample per row with the label in the last column. A leading
/// non-numeric header row and lines starting with '#' are skipped. Labels are
/// remapped to 0..C-1 in ascending order of their original values.
Dataset load_dataset(const std::string& path);

/// Gaussian blobs: `classes` centers drawn N(0, spread^2) per coordinate,
/// `per_class` samples each with unit noise, plus a trailing constant-1 bias
/// feature. `split` selects independent draws (0 = train, 1 = test) around
/// the same centers.
Dataset make_blobs(int classes, int per_class, int dim, double spread, std::uint64_t seed,
                   std::uint32_t split);

struct PartitionAssignment {
  std::vector<std::vector<std::size_t>> samples;  // worker -> sample indices
  std::vector<std::vector<int>> shards;           // worker -> shard ids (empty for iid)
  int shard_size = 0;
  int shards_per_worker = 0;
};

/// Sorts samples by label, cuts them into contiguous shards of `shard_size`
/// and deals `shards_per_worker` random shards to each of `m` workers.
PartitionAssignment partition_by_label_shards(const std::vector<int>& labels, int m,
                                              int shards_per_worker, int shard_size,
                                              std::uint64_t seed);

/// Random equal split: a seeded permutation cut into m contiguous chunks.
PartitionAssignment partition_iid(std::size_t n, int m, std::uint64_t seed);

struct ObjectiveSpec {
  enum class Kind { quadratic, logistic_regression };
  Kind kind = Kind::quadratic;

  // quadratic
  int p = 10;
  double h = 1.0;
  double sigma = 0.0;

  // logistic regression
  std::string data_path;  // file path or "synthetic_blobs"
  std::string test_path;  // optional held-out file
  int shards_per_worker = 0;  // 0 means iid split
  double ridge = 1e-4;
  int blob_classes = 10;
  int blob_per_class = 600;
  int blob_dim = 10;
  double blob_spread = 1.0;

  /// "quad:p=<int>,h=<real>,sigma=<real>" or
  /// "logreg:<path>,partition=<iid|shards:k>[,test=<path>][,ridge=<real>]"
  /// with blob keys classes, per_class, dim and spread for synthetic_blobs.
  static ObjectiveSpec parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

/// The m local objectives f_i together with their gradient oracles.
class LocalObjectiveSet {
 public:
  enum class Kind { quadratic, logistic_regression };

  /// f_i(x) = 1/2 (x - c_i)^T A_i (x - c_i), oracle noise N(0, sigma^2/p I).
  static LocalObjectiveSet quadratic(std::vector<Mat> A, std::vector<Vec> minimizers,
                                     double sigma);

  /// Ridge-regularised logistic (two classes) or softmax regression.
  static LocalObjectiveSet logistic(const Dataset& train, const PartitionAssignment& partition,
                                    double ridge, std::optional<Dataset> test = std::nullopt);

  Kind kind() const { return kind_; }
  int workers() const { return m_; }
  int dim() const { return p_; }
  double sigma() const { return sigma_; }
  double ridge() const { return ridge_; }
  int num_classes() const { return classes_; }
  /// True when the oracle returns exact gradients for every batch size.
  bool deterministic() const { return kind_ == Kind::quadratic && sigma_ == 0.0; }

  double local_value(int worker, const Vec& x) const;
  Vec local_gradient(int worker, const Vec& x) const;
  Vec stochastic_gradient(int worker, const Vec& x, int batch_size, RngStream& rng) const;

  /// f(x) = (1/m) sum_i f_i(x).
  double value(const Vec& x) const;
  Vec full_gradient(const Vec& x) const;
  double smoothness() const { return smoothness_; }

  // quadratic payload
  const std::vector<Mat>& hessians() const { return A_; }
  const std::vector<Vec>& minimizers() const { return c_; }
  const std::vector<Vec>& linear_terms() const { return b_; }
  /// argmin f for quadratics; requires sum A_i positive definite.
  Vec global_minimizer() const;

  // logistic payload
  std::size_t local_size(int worker) const;
  const std::vector<std::vector<int>>& local_labels() const { return y_; }
  bool has_test_set() const { return test_.has_value(); }
  /// Classification accuracy in [0, 1] on the held-out set.
  double test_accuracy(const Vec& x) const;
  double accuracy(const Dataset& data, const Vec& x) const;

 private:
  LocalObjectiveSet() = default;
  Vec logistic_gradient(const Mat& X, const std::vector<int>& y, const std::vector<std::size_t>* rows,
                        const Vec& x) const;
  void compute_smoothness();

  Kind kind_ = Kind::quadratic;
  int m_ = 0;
  int p_ = 0;
  double sigma_ = 0.0;
  double ridge_ = 0.0;
  int classes_ = 0;
  int features_ = 0;
  double smoothness_ = 0.0;

  std::vector<Mat> A_;
  std::vector<Vec> c_;
  std::vector<Vec> b_;

  std::vector<Mat> X_;
  std::vector<std::vector<int>> y_;
  std::optional<Dataset> test_;
};

LocalObjectiveSet build_objective_set(const ObjectiveSpec& spec, int m, std::uint64_t seed);

inline Vec stochastic_gradient(const LocalObjectiveSet& objset, int worker, const Vec& x,
                               int batch_size, RngStream& rng) {
  return objset.stochastic_gradient(worker, x, batch_size, rng);
}

inline Vec global_full_gradient(const LocalObjectiveSet& objset, const Vec& x) {
  return objset.full_gradient(x);
}

inline double smoothness_constant(const LocalObjectiveSet& objset) { return objset.smoothness(); }

}  // namespace netfleet
