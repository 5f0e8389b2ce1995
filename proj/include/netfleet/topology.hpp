#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "netfleet/stacked.hpp"

namespace netfleet {

struct TopologySpec {
  enum class Kind { erdos_renyi, ring, complete, path };
  Kind kind = Kind::ring;
  double p_c = 0.5;  // erdos_renyi only

  /// Parses "er:<p_c>", "ring", "complete" or "path".
  static TopologySpec parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

struct NetworkTopology {
  int m = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted
  TopologySpec spec;
  std::uint64_t seed = 0;
  int attempts = 1;  // generator draws used (erdos_renyi)

  std::vector<std::vector<int>> adjacency() const;
  bool connected() const;
};

struct ConsensusMatrix {
  Mat weights;
  double lambda = 0.0;
  bool zero_diagonal = false;  // flagged, not rejected

  int size() const { return static_cast<int>(weights.rows()); }
};

/// Erdos-Renyi graphs are redrawn with sub-seed seed+attempt until connected,
/// giving up after `kMaxConnectAttempts` draws.
inline constexpr int kMaxConnectAttempts = 1000;

NetworkTopology build_topology(const TopologySpec& spec, int m, std::uint64_t seed);

/// Graph Laplacian D - A with unit edge weights.
Mat laplacian(const NetworkTopology& topology);

/// W = I - 2 L / (3 lambda_max(L)). A single worker gets W = [1], lambda = 0.
ConsensusMatrix consensus_matrix(const NetworkTopology& topology);

/// max(|lambda_2|, |lambda_m|) of a symmetric matrix; 0 for 1x1.
/// Throws std::invalid_argument if W is not symmetric to 1e-12.
double second_eigenvalue_magnitude(const Mat& W);

/// One gossip round: output block i is sum_j W_ij X_j.
template <class Scalar, class Derived>
Stacked<Scalar> gossip_mix(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& W,
                           const Eigen::MatrixBase<Derived>& X) {
  if (W.rows() != X.cols() || W.cols() != X.cols())
    throw std::invalid_argument("gossip_mix: W is " + std::to_string(W.rows()) + "x" +
                                std::to_string(W.cols()) + " but X has " +
                                std::to_string(X.cols()) + " blocks");
  return X * W.transpose();
}

inline StackedVectors gossip_mix(const ConsensusMatrix& W, const StackedVectors& X) {
  return gossip_mix<double>(W.weights, X);
}

}  // namespace netfleet
