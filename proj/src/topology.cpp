#include "netfleet/topology.hpp"

#include <algorithm>
#include <charconv>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

#include "netfleet/rng.hpp"

namespace netfleet {

TopologySpec TopologySpec::parse(const std::string& text) {
  TopologySpec spec;
  if (text == "ring") {
    spec.kind = Kind::ring;
  } else if (text == "complete") {
    spec.kind = Kind::complete;
  } else if (text == "path") {
    spec.kind = Kind::path;
  } else if (text.rfind("er:", 0) == 0) {
    spec.kind = Kind::erdos_renyi;
    const std::string value = text.substr(3);
    std::size_t used = 0;
    try {
      spec.p_c = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size())
      throw std::invalid_argument("topology: cannot parse edge probability in '" + text + "'");
    if (!(spec.p_c > 0.0 && spec.p_c <= 1.0))
      throw std::invalid_argument("topology: p_c must lie in (0, 1], got " + value);
  } else {
    throw std::invalid_argument("topology: unknown descriptor '" + text +
                                "' (expected er:<p_c>, ring, complete or path)");
  }
  return spec;
}

std::string TopologySpec::to_string() const {
  switch (kind) {
    case Kind::erdos_renyi: return fmt::format("er:{}", p_c);
    case Kind::ring: return "ring";
    case Kind::complete: return "complete";
    case Kind::path: return "path";
  }
  return "ring";
}

std::vector<std::vector<int>> NetworkTopology::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  return adj;
}

bool NetworkTopology::connected() const {
  if (m <= 1) return m == 1;
  const auto adj = adjacency();
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == m;
}

namespace {

std::vector<std::pair<int, int>> deterministic_edges(TopologySpec::Kind kind, int m) {
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case TopologySpec::Kind::complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      break;
    case TopologySpec::Kind::path:
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      break;
    case TopologySpec::Kind::ring:
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      if (m >= 3) edges.emplace_back(0, m - 1);
      break;
    case TopologySpec::Kind::erdos_renyi:
      break;
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

NetworkTopology build_topology(const TopologySpec& spec, int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument(fmt::format("topology: worker count must be >= 1, got {}", m));
  NetworkTopology topo;
  topo.m = m;
  topo.spec = spec;
  topo.seed = seed;

  if (spec.kind != TopologySpec::Kind::erdos_renyi) {
    topo.edges = deterministic_edges(spec.kind, m);
    return topo;
  }
  if (!(spec.p_c > 0.0 && spec.p_c <= 1.0))
    throw std::invalid_argument(fmt::format("topology: p_c must lie in (0, 1], got {}", spec.p_c));

  for (int attempt = 0; attempt < kMaxConnectAttempts; ++attempt) {
    RngStream rng(seed + static_cast<std::uint64_t>(attempt), RngDomain::topology);
    topo.edges.clear();
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        if (rng.uniform() < spec.p_c) topo.edges.emplace_back(i, j);
    topo.attempts = attempt + 1;
    if (topo.connected()) return topo;
  }
  throw std::runtime_error(fmt::format(
      "topology: no connected er:{} graph on {} workers after {} attempts; p_c is too small",
      spec.p_c, m, kMaxConnectAttempts));
}

Mat laplacian(const NetworkTopology& topology) {
  Mat L = Mat::Zero(topology.m, topology.m);
  for (const auto& [i, j] : topology.edges) {
    L(i, j) -= 1.0;
    L(j, i) -= 1.0;
    L(i, i) += 1.0;
    L(j, j) += 1.0;
  }
  return L;
}

ConsensusMatrix consensus_matrix(const NetworkTopology& topology) {
  if (!topology.connected())
    throw std::invalid_argument("consensus_matrix: topology is not connected");
  ConsensusMatrix W;
  const int m = topology.m;
  if (m == 1) {
    W.weights = Mat::Ones(1, 1);
    W.lambda = 0.0;
    return W;
  }
  const Mat L = laplacian(topology);
  Eigen::SelfAdjointEigenSolver<Mat> eig(L, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double scale = 2.0 / (3.0 * lmax);
  // Elementwise so that W(i,j) == W(j,i) holds bit for bit.
  W.weights = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) W.weights(i, j) = (i == j ? 1.0 : 0.0) - scale * L(i, j);
  W.zero_diagonal = (W.weights.diagonal().array() <= 0.0).any();
  W.lambda = second_eigenvalue_magnitude(W.weights);
  return W;
}

double second_eigenvalue_magnitude(const Mat& W) {
  if (W.rows() != W.cols()) throw std::invalid_argument("second_eigenvalue_magnitude: W is not square");
  const auto m = W.rows();
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("second_eigenvalue_magnitude: W is not symmetric");
  if (m <= 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> eig(W, Eigen::EigenvaluesOnly);
  const Vec& ev = eig.eigenvalues();  // ascending
  return std::max(std::abs(ev(m - 2)), std::abs(ev(0)));
}

}  // namespace netfleet
