#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "netfleet/objectives.hpp"
#include "netfleet/stacked.hpp"
#include "netfleet/topology.hpp"

namespace netfleet {

struct StationarityMeasure {
  double grad_norm_sq = 0.0;   // ||grad f(xbar)||^2
  double consensus_err = 0.0;  // (1/m) sum_i ||x_i - xbar||^2
  double metric = 0.0;         // grad_norm_sq + L^2 * consensus_err
};

StationarityMeasure stationarity_metric(const LocalObjectiveSet& objset, const StackedVectors& x);

struct PotentialParams {
  double C1 = 0.0;
  double lambda = 0.0;
  int K = 1;
  double eta = 0.0;

  /// C1 = 6 (1 + lambda K - lambda) K / (1 - lambda)^2.
  static PotentialParams make(double lambda, int K, double eta);
};

/// f(xbar) + 1/(m^2 K) sum_i (||x_i - xbar||^2 + C1 eta^2 ||y_i - ybar||^2).
double potential_value(const LocalObjectiveSet& objset, const StackedVectors& x,
                       const StackedVectors& y, const PotentialParams& params);
/// Potential with the tracker penalty dropped, for algorithms without y.
double potential_value(const LocalObjectiveSet& objset, const StackedVectors& x,
                       const PotentialParams& params);

struct StepSizeCertificate {
  static constexpr std::array<std::string_view, 8> names{"t_smooth", "t1", "t2", "t3",
                                                          "t5",       "t6", "t7", "t8"};
  std::array<double, 8> terms{};
  double eta_max = 0.0;
  std::string_view argmin;
};

/// Largest admissible constant step size for NET-FLEET convergence, as the
/// minimum of eight closed-form terms (ties resolve to the earlier term).
StepSizeCertificate step_size_certificate(double L, double lambda, int m, int K);

struct Schedule {
  int K = 1;
  double eta = 0.0;
  bool side_condition = true;  // S K >= m^{1/3}
};

/// K = max(1, round(S^{1/3} / m)), eta = c_eta sqrt(m / (S K)).
Schedule speedup_schedule(int S, int m, double c_eta);

/// Iterates of one outer round: entries 0..K hold (x, y, g) at (s, k); entry
/// K is also the start of round s+1.
struct RoundHistory {
  int s = 0;
  double eta = 0.0;
  std::vector<StackedVectors> x;
  std::vector<StackedVectors> y;
  std::vector<StackedVectors> g;

  int K() const { return static_cast<int>(x.size()) - 1; }
};

struct AuditLine {
  int s = 0;
  std::string check;
  bool pass = true;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AuditReport {
  std::vector<AuditLine> lines;
  std::vector<int> violated_rounds;  // ascending, unique

  bool passed() const { return violated_rounds.empty(); }
  /// One line per check per round: "s=<s> <check> PASS|FAIL lhs=<..> rhs=<..>".
  std::string to_text() const;
};

inline constexpr double kAuditSlack = 1e-8;
inline constexpr double kTrackingTol = 1e-9;
inline constexpr double kRecursionTol = 1e-10;

/// Checks one recorded round against the descent inequality for f(xbar), the
/// two consensus-error bounds for x and y, the per-gossip contraction, the
/// identity ybar = gbar and the recursion xbar' = xbar - eta ybar.
std::vector<AuditLine> audit_round(const RoundHistory& round, const ConsensusMatrix& W,
                                   const LocalObjectiveSet& objset);

/// Audits a whole deterministic run. Throws std::invalid_argument when the
/// oracle is stochastic, since the inequalities bound expectations.
AuditReport lemma_audit(const std::vector<RoundHistory>& rounds, const ConsensusMatrix& W,
                        const LocalObjectiveSet& objset);

/// Incremental form of lemma_audit for streaming runs.
class LemmaAuditor {
 public:
  LemmaAuditor(const ConsensusMatrix& W, const LocalObjectiveSet& objset);
  void add(const RoundHistory& round);
  const AuditReport& report() const { return report_; }

 private:
  const ConsensusMatrix& W_;
  const LocalObjectiveSet& objset_;
  AuditReport report_;
};

}  // namespace netfleet
