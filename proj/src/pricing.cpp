#include "jointprice/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jointprice/error.hpp"

namespace jointprice {

namespace {

// Slack used when a caller passes a loading that was itself computed, e.g.
// psi_min from competitiveness_region.
constexpr double kLoadingSlack = 1e-12;

void require_positive_finite(double value, const char* what) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

BusinessLine::BusinessLine(std::string label, double pi, double sigma)
    : label_(std::move(label)), pi_(pi), sigma_(sigma) {
  require_positive_finite(pi_, "pi");
  require_positive_finite(sigma_, "sigma");
}

BusinessLine BusinessLine::scaled(double factor) const {
  require_positive_finite(factor, "scale factor");
  return BusinessLine(label_, pi_ * factor, sigma_ * factor);
}

RiskSpec::RiskSpec(double zeta, double gamma) : zeta_(zeta), gamma_(gamma) {
  if (!(zeta_ > 0.0 && zeta_ < 1.0)) {
    throw DomainError("zeta must lie in (0, 1)");
  }
  require_positive_finite(gamma_, "gamma");
}

LinePair::LinePair(BusinessLine first, BusinessLine second, double rho)
    : a_(std::move(first)), b_line_(std::move(second)), rho_(rho), swapped_(false) {
  if (!std::isfinite(rho_) || rho_ < -1.0 || rho_ >= 1.0) {
    throw DomainError("rho must lie in [-1, 1)");
  }
  if (b_line_.risk_ratio() < a_.risk_ratio()) {
    std::swap(a_, b_line_);
    swapped_ = true;
  }
  b_ = std::max(1.0, (b_line_.sigma() * a_.pi()) / (a_.sigma() * b_line_.pi()));
  // (b - rho)^2 + (1 - rho^2) == 1 + b^2 - 2 b rho, written as a sum of
  // non-negative terms.
  lambda1_ = (b_ - rho_) * (b_ - rho_) + (1.0 - rho_ * rho_);
  lambda2_ = 1.0 - b_ * rho_;
}

double standalone_loading(const BusinessLine& line, const RiskSpec& risk) {
  return risk.zeta() * risk.gamma() * line.sigma() / line.pi();
}

double payout_weight(const LinePair& pair, double n) {
  const double pa = pair.line_a().pi();
  const double pb = pair.line_b().pi();
  return n * pb / ((1.0 - n) * pa + n * pb);
}

double policy_proportion(const LinePair& pair, double weight) {
  const double pa = pair.line_a().pi();
  const double pb = pair.line_b().pi();
  return weight * pa / (weight * pa + (1.0 - weight) * pb);
}

double joint_loading(const LinePair& pair, const RiskSpec& risk, double n) {
  if (!(n >= 0.0 && n <= 1.0)) {
    throw DomainError("portfolio proportion n must lie in [0, 1]");
  }
  if (n == 1.0) {
    return standalone_loading(pair.line_b(), risk);
  }
  const double psi_a = standalone_loading(pair.line_a(), risk);
  const double w = payout_weight(pair, n);
  const double b = pair.b();
  // Variance of the payout-weighted portfolio per unit of psi_A^2; equal to
  // lambda1 w^2 - 2 lambda2 w + 1.
  const double v = (1.0 - w) * (1.0 - w) + b * b * w * w + 2.0 * b * pair.rho() * w * (1.0 - w);
  return psi_a * std::sqrt(std::max(0.0, v));
}

CompetitivenessReport competitiveness_region(const LinePair& pair, const RiskSpec& risk) {
  CompetitivenessReport report;
  report.psi_a = standalone_loading(pair.line_a(), risk);
  report.psi_b = standalone_loading(pair.line_b(), risk);
  report.psi_max = report.psi_b;
  report.exists = pair.has_competitiveness_region();
  if (!report.exists) {
    report.n_min = 0.0;
    report.psi_min = report.psi_a;
    return report;
  }
  const double b = pair.b();
  const double rho = pair.rho();
  const double l1 = pair.lambda1();
  const double l2 = pair.lambda2();
  const double pa = pair.line_a().pi();
  const double pb = pair.line_b().pi();
  // lambda1 - lambda2 = b (b - rho); lambda1 - lambda2^2 = b^2 (1 - rho^2).
  report.n_min = l2 * pa / (l2 * pa + b * (b - rho) * pb);
  report.psi_min = report.psi_a * std::sqrt(b * b * (1.0 - rho * rho) / l1);
  report.n_ct = critical_threshold(pair);
  return report;
}

double critical_threshold(const LinePair& pair) {
  if (!pair.has_competitiveness_region()) {
    throw DomainError("critical threshold requires b * rho < 1");
  }
  const double b = pair.b();
  const double l2 = pair.lambda2();
  const double pa = pair.line_a().pi();
  const double pb = pair.line_b().pi();
  // lambda1 - 2 lambda2 = b^2 - 1
  return 2.0 * l2 * pa / (2.0 * l2 * pa + (b - 1.0) * (b + 1.0) * pb);
}

MonitoringInterval monitoring_interval(const LinePair& pair, const RiskSpec& risk,
                                       double psi_star) {
  const CompetitivenessReport region = competitiveness_region(pair, risk);
  if (!std::isfinite(psi_star)) {
    throw DomainError("psi_star must be finite");
  }
  if (psi_star < region.psi_min * (1.0 - kLoadingSlack)) {
    throw NoRealRoots("psi_star is below the minimum joint loading psi_min");
  }
  if (psi_star > region.psi_b * (1.0 + kLoadingSlack)) {
    throw DomainError("psi_star exceeds the stand-alone loading of the riskier line");
  }
  psi_star = std::clamp(psi_star, region.psi_min, region.psi_b);

  const double l1 = pair.lambda1();
  const double l2 = pair.lambda2();
  const double ratio = psi_star / region.psi_a;
  const double r2 = ratio * ratio;
  // Roots of lambda1 w^2 - 2 lambda2 w + (1 - r2) = 0. The quarter
  // discriminant lambda1 r2 - b^2 (1 - rho^2) is lambda1 (r - r_min)(r + r_min);
  // taking r - r_min from psi_star - psi_min avoids cancellation near the
  // double root.
  const double above_min = (psi_star - region.psi_min) / region.psi_a;
  const double ratio_min = region.psi_min / region.psi_a;
  const double disc = std::max(0.0, l1 * above_min * (ratio + ratio_min));
  const double root = std::sqrt(disc);
  const double constant = 1.0 - r2;

  double w_lower;
  double w_upper;
  if (l2 >= 0.0) {
    w_upper = (l2 + root) / l1;
    w_lower = w_upper > 0.0 ? constant / (l1 * w_upper) : 0.0;
  } else {
    w_lower = (l2 - root) / l1;
    w_upper = constant / (l1 * w_lower);
  }
  w_lower = std::clamp(w_lower, 0.0, 1.0);
  w_upper = std::clamp(w_upper, 0.0, 1.0);

  MonitoringInterval interval;
  interval.n_lower = policy_proportion(pair, w_lower);
  interval.n_upper = psi_star >= region.psi_b ? 1.0 : policy_proportion(pair, w_upper);
  return interval;
}

double risk_reduction_gap(const LinePair& pair, const RiskSpec& risk, double count_a,
                          double count_b) {
  return risk_reduction_gap(pair.line_a(), pair.line_b(), pair.rho(), risk, count_a, count_b);
}

double risk_reduction_gap(const BusinessLine& a, const BusinessLine& b, double rho,
                          const RiskSpec& risk, double count_a, double count_b) {
  require_positive_finite(count_a, "count_a");
  require_positive_finite(count_b, "count_b");
  if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
    throw DomainError("rho must lie in [-1, 1]");
  }
  const double sa = count_a * a.sigma();
  const double sb = count_b * b.sigma();
  const double separate = sa + sb;
  const double pooled = std::sqrt(std::max(0.0, sa * sa + sb * sb + 2.0 * rho * sa * sb));
  // separate^2 - pooled^2 = 2 sa sb (1 - rho), divided through to avoid
  // cancellation when rho is close to 1.
  const double gap = 2.0 * sa * sb * (1.0 - rho) / (separate + pooled);
  return (1.0 - risk.zeta()) * risk.gamma() * gap;
}

}  // namespace jointprice
