#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointprice/pricing.hpp"

namespace jointprice {

/**
 * Market structure faced by the joint pricer: total demand, number of
 * providers and policyholder reaction factor per line. Fields refer to the
 * lines of a LinePair after ordering (line A is the safer one).
 */
class MarketSpec {
 public:
  MarketSpec(double demand_a, double demand_b, int insurers_a, int insurers_b,
             double reaction_a, double reaction_b);

  /// Splits `total` demand so that line B receives the share `demand_share`.
  static MarketSpec from_share(double total, double demand_share, int insurers_a,
                               int insurers_b, double reaction_a, double reaction_b);

  double demand_a() const noexcept { return demand_a_; }
  double demand_b() const noexcept { return demand_b_; }
  int insurers_a() const noexcept { return insurers_a_; }
  int insurers_b() const noexcept { return insurers_b_; }
  double reaction_a() const noexcept { return reaction_a_; }
  double reaction_b() const noexcept { return reaction_b_; }
  /// w^d = N^T_B / (N^T_A + N^T_B).
  double demand_share() const noexcept { return demand_b_ / (demand_a_ + demand_b_); }

  /// Exchanges the roles of the two lines; used when LinePair reordered them.
  MarketSpec swapped() const;

 private:
  double demand_a_;
  double demand_b_;
  int insurers_a_;
  int insurers_b_;
  double reaction_a_;
  double reaction_b_;
};

enum class DemandModel { Logistic, Linearized };

std::string_view to_string(DemandModel model);
DemandModel parse_demand_model(std::string_view text);

/// Policies sold by the joint pricer on one line when its price differs from
/// the stand-alone price by the relative discount `discount`. Both variants
/// give total / competitors at zero discount; the linearized variant is
/// clamped at zero.
double demand(DemandModel model, double total, int competitors, double reaction,
              double discount);

enum class SolveMethod { FixedPoint, Bisection };

struct EquilibriumResult {
  double psi_star = 0.0;
  double n_star = 0.0;
  double count_a = 0.0;
  double count_b = 0.0;
  double discount_a = 0.0;
  double discount_b = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  SolveMethod method = SolveMethod::FixedPoint;
  /// The residual scan found more than one sign change; psi_star is the smallest root.
  bool multiple_roots = false;
  /// Linearized demand hit its lower bound of zero on some line.
  bool demand_clamped = false;
};

struct EquilibriumOptions {
  double damping = 0.5;
  int max_iterations = 10000;
  double tolerance = 1e-10;
  int scan_points = 1024;
};

/// Joint loading implied by the policy counts the market delivers at the
/// trial loading `psi`; the equilibrium is a fixed point of this map.
double equilibrium_map(const LinePair& pair, const RiskSpec& risk, const MarketSpec& market,
                       DemandModel model, double psi);

/**
 * Solves psi* = psi(n*(psi*)) on [psi_min, psi_B] by damped fixed-point
 * iteration started at psi_A, falling back to a scanned bisection when the
 * iteration stops contracting.
 *
 * Throws NoConvergence or InfeasibleDemand.
 */
EquilibriumResult solve_equilibrium(const LinePair& pair, const RiskSpec& risk,
                                    const MarketSpec& market, DemandModel model,
                                    const EquilibriumOptions& options = {});

/// Both closed forms of the collected-premium difference under linearized demand.
struct PremiumDifferenceForms {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
  double n_bar = 0.0;
  double theta_form = 0.0;
  double n_bar_form = 0.0;
};

PremiumDifferenceForms premium_difference_forms(const LinePair& pair, const RiskSpec& risk,
                                                const MarketSpec& market, double psi_star);

/// D_ptf at loading psi_star under linearized demand (quadratic form in 1 + psi_star).
double premium_difference(const LinePair& pair, const RiskSpec& risk, const MarketSpec& market,
                          double psi_star);

/// Premiums collected per provider under stand-alone pricing:
/// N^T_A/k_A P^sa_A + N^T_B/k_B P^sa_B.
double standalone_premium_total(const LinePair& pair, const RiskSpec& risk,
                                const MarketSpec& market);

/// D_ptf from its definition, using the counts of a solved equilibrium.
double collected_premium_difference(const LinePair& pair, const RiskSpec& risk,
                                    const MarketSpec& market, const EquilibriumResult& eq);

/// Demand- and loading-weighted share of line B; throws DomainError when b rho >= 1.
double eta(const LinePair& pair, const RiskSpec& risk, const MarketSpec& market);

/// Demand share of line B at which the equilibrium loading equals psi_A.
/// Returns 1 when b = 1; throws DomainError when b rho >= 1.
double demand_critical_threshold(const LinePair& pair, const RiskSpec& risk,
                                 const MarketSpec& market);

enum class Verdict { JointFavored, SeparateFavored, Indeterminate };
enum class DecisionRule { Sufficient, Banded };
/// Position of the demand share relative to w_ct.
enum class DemandRegime { BelowThreshold, AtThreshold, AboveThreshold };

std::string_view to_string(Verdict verdict);
std::string_view to_string(DecisionRule rule);
std::string_view to_string(DemandRegime regime);

struct ConditionCheck {
  std::string name;
  bool satisfied = false;
};

struct PricingDecision {
  Verdict verdict = Verdict::Indeterminate;
  DecisionRule rule = DecisionRule::Sufficient;
  DemandRegime regime = DemandRegime::BelowThreshold;
  std::vector<ConditionCheck> conditions_checked;
  double eta = 0.0;
  double w_ct = 0.0;
  /// Sign evidence attached to indeterminate verdicts: D_ptf at the solved
  /// (linearized) equilibrium.
  std::optional<double> advisory_d_ptf;
};

/// Sufficient conditions on the reaction factors for joint or separate pricing.
PricingDecision decide_sufficient(const LinePair& pair, const RiskSpec& risk,
                                const MarketSpec& market);

/// Simpler bands implied by decide_sufficient; decisive only when it is.
PricingDecision decide_banded(const LinePair& pair, const RiskSpec& risk,
                                 const MarketSpec& market);

struct SweepPoint {
  double demand_share = 0.0;
  double psi_star = 0.0;
  double relative_d_ptf = 0.0;
  bool ok = false;
  std::string status;
};

/// Relative collected-premium difference along a grid of demand shares with
/// `total` policyholders split between the lines. Solver failures are
/// reported per point.
std::vector<SweepPoint> sweep_demand_share(const LinePair& pair, const RiskSpec& risk,
                                           const MarketSpec& market_template, DemandModel model,
                                           std::span<const double> grid, double total);

}  // namespace jointprice
