#pragma once

#include <optional>
#include <string>

namespace jointprice {

/// Per-policy liability summary of one business line: expected present value
/// (pure premium) and standard deviation of the present value.
class BusinessLine {
 public:
  BusinessLine(std::string label, double pi, double sigma);

  const std::string& label() const noexcept { return label_; }
  double pi() const noexcept { return pi_; }
  double sigma() const noexcept { return sigma_; }
  /// Standard deviation per unit of expected payout.
  double risk_ratio() const noexcept { return sigma_ / pi_; }

  /// Same line with benefits multiplied by `factor` (pi and sigma both scale).
  BusinessLine scaled(double factor) const;

 private:
  std::string label_;
  double pi_;
  double sigma_;
};

/// Risk reduction factor zeta in (0,1) and mean-standard-deviation weight gamma > 0.
class RiskSpec {
 public:
  RiskSpec(double zeta, double gamma);

  double zeta() const noexcept { return zeta_; }
  double gamma() const noexcept { return gamma_; }

 private:
  double zeta_;
  double gamma_;
};

/**
 * Two business lines and the correlation of their per-policy present values.
 *
 * The constructor orders the lines so that line B carries the higher
 * standard deviation per unit of expected payout, which makes
 * b = (sigma_B pi_A) / (sigma_A pi_B) >= 1. `swapped()` records whether the
 * caller's first argument ended up as line B.
 *
 * With rho < 1 and b >= 1, lambda1 = 1 + b^2 - 2 b rho is strictly positive.
 */
class LinePair {
 public:
  LinePair(BusinessLine first, BusinessLine second, double rho);

  const BusinessLine& line_a() const noexcept { return a_; }
  const BusinessLine& line_b() const noexcept { return b_line_; }
  double rho() const noexcept { return rho_; }
  double b() const noexcept { return b_; }
  double lambda1() const noexcept { return lambda1_; }
  double lambda2() const noexcept { return lambda2_; }
  bool swapped() const noexcept { return swapped_; }
  /// True when b * rho < 1 (strict).
  bool has_competitiveness_region() const noexcept { return b_ * rho_ < 1.0; }

 private:
  BusinessLine a_;
  BusinessLine b_line_;
  double rho_;
  double b_;
  double lambda1_;
  double lambda2_;
  bool swapped_;
};

struct CompetitivenessReport {
  bool exists = false;
  double n_min = 0.0;
  double psi_min = 0.0;
  double psi_a = 0.0;
  double psi_b = 0.0;
  /// psi(1); equal to psi_b.
  double psi_max = 0.0;
  /// Critical threshold; empty when no competitiveness region exists.
  std::optional<double> n_ct;
};

struct MonitoringInterval {
  double n_lower = 0.0;
  double n_upper = 0.0;
  double length() const noexcept { return n_upper - n_lower; }
};

/// zeta * gamma * sigma / pi.
double standalone_loading(const BusinessLine& line, const RiskSpec& risk);

/// Expected-payout weight of line B in a portfolio whose proportion of
/// B policies is `n`: n pi_B / ((1 - n) pi_A + n pi_B).
double payout_weight(const LinePair& pair, double n);

/// Inverse of payout_weight.
double policy_proportion(const LinePair& pair, double weight);

/**
 * Required joint loading psi(n) for a portfolio with a proportion `n` of
 * line-B policies. psi(0) = psi_A and psi(1) = psi_B.
 *
 * Throws DomainError when n is outside [0, 1].
 */
double joint_loading(const LinePair& pair, const RiskSpec& risk, double n);

/// Minimum joint loading and its location; n_min = 0 and psi_min = psi_A when
/// b rho >= 1.
CompetitivenessReport competitiveness_region(const LinePair& pair, const RiskSpec& risk);

/**
 * Proportion of line-B policies beyond which psi(n) exceeds psi_A, i.e. the
 * safer line starts subsidising the riskier one. Returns 1 when b = 1.
 *
 * Throws DomainError when b rho >= 1.
 */
double critical_threshold(const LinePair& pair);

/**
 * Range of proportions [n_l, n_u] over which psi(n) <= psi_star.
 *
 * Throws NoRealRoots when psi_star < psi_min and DomainError when
 * psi_star > psi_B. When psi_star > psi_A the lower root leaves [0, 1] and
 * n_l is clamped to 0.
 */
MonitoringInterval monitoring_interval(const LinePair& pair, const RiskSpec& risk,
                                       double psi_star);

/// (1 - zeta) gamma (N_A sigma_A + N_B sigma_B - sigma_ptf): the drop in
/// measured portfolio risk from pooling. Counts must be positive.
double risk_reduction_gap(const LinePair& pair, const RiskSpec& risk, double count_a,
                          double count_b);

/// Overload accepting any rho in [-1, 1], including perfect correlation.
double risk_reduction_gap(const BusinessLine& a, const BusinessLine& b, double rho,
                          const RiskSpec& risk, double count_a, double count_b);

}  // namespace jointprice
