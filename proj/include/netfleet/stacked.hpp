#pragma once

#include <Eigen/Dense>

namespace netfleet {

/// Per-worker vectors stacked side by side: column i is worker i's block,
/// so a p-dimensional model on m workers is a p x m matrix.
template <class Scalar>
using Stacked = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using StackedVectors = Stacked<double>;
using Vec = Vector<double>;
using Mat = Eigen::MatrixXd;

/// Block average (1/m) sum_i X_i.
template <class Derived>
Vector<typename Derived::Scalar> block_mean(const Eigen::MatrixBase<Derived>& X) {
  return X.rowwise().mean();
}

/// X - 1 (x) mean(X), i.e. the centering operator Q applied to X.
template <class Derived>
Stacked<typename Derived::Scalar> centered(const Eigen::MatrixBase<Derived>& X) {
  return X.colwise() - block_mean(X);
}

/// ||Q X||^2 = sum_i ||X_i - mean||^2.
template <class Derived>
typename Derived::Scalar consensus_sq(const Eigen::MatrixBase<Derived>& X) {
  return centered(X).squaredNorm();
}

}  // namespace netfleet
