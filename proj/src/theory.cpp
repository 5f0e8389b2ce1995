#include "netfleet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace netfleet {

StationarityMeasure stationarity_metric(const LocalObjectiveSet& objset, const StackedVectors& x) {
  const double L = objset.smoothness();
  const double m = static_cast<double>(x.cols());
  StationarityMeasure out;
  out.grad_norm_sq = objset.full_gradient(block_mean(x)).squaredNorm();
  out.consensus_err = consensus_sq(x) / m;
  out.metric = out.grad_norm_sq + L * L * out.consensus_err;
  return out;
}

PotentialParams PotentialParams::make(double lambda, int K, double eta) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("potential: lambda must lie in [0, 1)");
  if (K < 1) throw std::invalid_argument("potential: K must be >= 1");
  PotentialParams p;
  p.lambda = lambda;
  p.K = K;
  p.eta = eta;
  const double one_minus = 1.0 - lambda;
  p.C1 = 6.0 * (1.0 + lambda * K - lambda) * K / (one_minus * one_minus);
  return p;
}

double potential_value(const LocalObjectiveSet& objset, const StackedVectors& x, const StackedVectors& y,
                       const PotentialParams& params) {
  const double m = static_cast<double>(x.cols());
  const double penalty = consensus_sq(x) + params.C1 * params.eta * params.eta * consensus_sq(y);
  return objset.value(block_mean(x)) + penalty / (m * m * params.K);
}

double potential_value(const LocalObjectiveSet& objset, const StackedVectors& x, const PotentialParams& params) {
  const double m = static_cast<double>(x.cols());
  return objset.value(block_mean(x)) + consensus_sq(x) / (m * m * params.K);
}

StepSizeCertificate step_size_certificate(double L, double lambda, int m, int K) {
  if (!(L > 0.0)) throw std::invalid_argument("step-size certificate: L must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("step-size certificate: lambda must be non-negative");
  if (lambda >= 1.0)
    throw std::invalid_argument("step-size certificate: lambda >= 1 (disconnected or malformed consensus matrix)");
  if (m < 1 || K < 1) throw std::invalid_argument("step-size certificate: m and K must be >= 1");

  const double md = m, Kd = K, gap = 1.0 - lambda;
  const double spread = 1.0 + lambda * Kd - lambda;  // 1 + lambda (K - 1)
  StepSizeCertificate cert;
  cert.terms = {
      1.0 / (3.0 * L),
      1.0 / (md * L * L * Kd * Kd),
      gap / std::sqrt(12.0 * spread * Kd * L * L),
      std::sqrt(gap / (24.0 * L * L * Kd * Kd)),
      std::sqrt(md * gap * gap / (144.0 * L * Kd * Kd)),
      gap / (3.0 * spread * md * Kd * L * L),
      gap * gap * gap * md * Kd / 144.0,
      gap * gap * spread * md / (144.0 * Kd),
  };
  const auto it = std::min_element(cert.terms.begin(), cert.terms.end());
  cert.eta_max = *it;
  cert.argmin = StepSizeCertificate::names[static_cast<std::size_t>(it - cert.terms.begin())];
  return cert;
}

Schedule speedup_schedule(int S, int m, double c_eta) {
  if (S < 1 || m < 1) throw std::invalid_argument("schedule: S and m must be >= 1");
  if (!(c_eta > 0.0)) throw std::invalid_argument("schedule: c_eta must be positive");
  Schedule out;
  out.K = std::max(1, static_cast<int>(std::lround(std::cbrt(static_cast<double>(S)) / m)));
  out.eta = c_eta * std::sqrt(static_cast<double>(m) / (static_cast<double>(S) * out.K));
  out.side_condition = static_cast<double>(S) * out.K >= std::cbrt(static_cast<double>(m));
  return out;
}

// ---------------------------------------------------------------------------
// audit

std::string AuditReport::to_text() const {
  std::string out;
  for (const auto& line : lines)
    out += fmt::format("s={} {} {} lhs={:.9e} rhs={:.9e}\n", line.s, line.check, line.pass ? "PASS" : "FAIL",
                       line.lhs, line.rhs);
  out += violated_rounds.empty() ? "audit: all rounds passed\n"
                                 : fmt::format("audit: {} violated round(s)\n", violated_rounds.size());
  return out;
}

std::vector<AuditLine> audit_round(const RoundHistory& round, const ConsensusMatrix& W,
                                   const LocalObjectiveSet& objset) {
  const int K = round.K();
  if (K < 1 || round.y.size() != round.x.size() || round.g.size() != round.x.size())
    throw std::invalid_argument("audit: round history must hold K+1 snapshots of x, y and g");
  const double L = objset.smoothness();
  const double lambda = W.lambda;
  const double eta = round.eta;
  const double m = static_cast<double>(round.x.front().cols());
  const double Kd = K;
  const double gap = 1.0 - lambda;
  const double spread = 1.0 + lambda * (Kd - 1.0);

  std::vector<AuditLine> out;
  auto push = [&](std::string check, double lhs, double rhs, double slack) {
    out.push_back({round.s, std::move(check), lhs <= rhs + slack, lhs, rhs});
  };

  double sum_grad_xbar = 0.0, sum_grad_avg = 0.0, sum_gbar = 0.0;
  double sum_qx = 0.0, sum_qy = 0.0, sum_ybar = 0.0;
  double tracking = 0.0, recursion = 0.0;
  for (int k = 0; k <= K; ++k) {
    const auto& x = round.x[static_cast<std::size_t>(k)];
    const auto& y = round.y[static_cast<std::size_t>(k)];
    const auto& g = round.g[static_cast<std::size_t>(k)];
    const Vec ybar = block_mean(y);
    const Vec gbar = block_mean(g);
    tracking = std::max(tracking, (ybar - gbar).cwiseAbs().maxCoeff());
    if (k == K) break;

    const Vec xbar = block_mean(x);
    Vec grad_avg = Vec::Zero(x.rows());
    for (int i = 0; i < x.cols(); ++i) grad_avg += objset.local_gradient(i, x.col(i));
    grad_avg /= m;
    sum_grad_xbar += objset.full_gradient(xbar).squaredNorm();
    sum_grad_avg += grad_avg.squaredNorm();
    sum_gbar += gbar.squaredNorm();
    sum_qx += consensus_sq(x);
    sum_qy += consensus_sq(y);
    sum_ybar += ybar.squaredNorm();

    const Vec next_xbar = block_mean(round.x[static_cast<std::size_t>(k + 1)]);
    recursion = std::max(recursion, (next_xbar - (xbar - eta * ybar)).cwiseAbs().maxCoeff());
  }

  const auto& x0 = round.x.front();
  const auto& y0 = round.y.front();
  const double qx0 = consensus_sq(x0);
  const double qy0 = consensus_sq(y0);

  // Descent of f(xbar) across the round.
  const double descent_lhs = objset.value(block_mean(round.x.back())) - objset.value(block_mean(x0));
  const double descent_rhs = -0.5 * eta * sum_grad_xbar - 0.5 * eta * sum_grad_avg +
                             0.5 * L * eta * eta * sum_gbar + L * L * eta / (2.0 * m) * sum_qx;
  push("descent", descent_lhs, descent_rhs, kAuditSlack);

  push("consensus_x", sum_qx, spread * qx0 + eta * eta * Kd * Kd / gap * sum_qy, kAuditSlack);

  const double qy_rhs = spread * qy0 + 24.0 * Kd * L * L / gap * qx0 +
                        12.0 * eta * eta * Kd * Kd * L * L / gap * sum_qy +
                        12.0 * m * eta * eta * Kd * Kd * L * L / gap * sum_ybar;
  push("consensus_y", sum_qy, qy_rhs, kAuditSlack);

  push("contraction_x", consensus_sq(gossip_mix(W, x0)), lambda * lambda * qx0, kAuditSlack);
  push("contraction_y", consensus_sq(gossip_mix(W, y0)), lambda * lambda * qy0, kAuditSlack);

  push("tracking", tracking, kTrackingTol, 0.0);
  push("xbar_recursion", recursion, kRecursionTol, 0.0);
  return out;
}

LemmaAuditor::LemmaAuditor(const ConsensusMatrix& W, const LocalObjectiveSet& objset) : W_(W), objset_(objset) {
  if (!objset.deterministic())
    throw std::invalid_argument("audit: refused on a stochastic oracle; the bounds hold for expectations only");
}

void LemmaAuditor::add(const RoundHistory& round) {
  auto lines = audit_round(round, W_, objset_);
  const bool failed = std::any_of(lines.begin(), lines.end(), [](const AuditLine& l) { return !l.pass; });
  if (failed && (report_.violated_rounds.empty() || report_.violated_rounds.back() != round.s))
    report_.violated_rounds.push_back(round.s);
  for (auto& line : lines) report_.lines.push_back(std::move(line));
}

AuditReport lemma_audit(const std::vector<RoundHistory>& rounds, const ConsensusMatrix& W,
                        const LocalObjectiveSet& objset) {
  LemmaAuditor auditor(W, objset);
  for (const auto& round : rounds) auditor.add(round);
  return auditor.report();
}

}  // namespace netfleet
