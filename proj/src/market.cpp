#include "jointprice/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jointprice/error.hpp"

namespace jointprice {

namespace {

// Relative tolerance for treating w^d as equal to w_ct.
constexpr double kThresholdTolerance = 1e-12;
// Consecutive non-contracting steps before the fixed-point loop gives up.
constexpr int kStallLimit = 8;

double share_of_others(int insurers) { return (insurers - 1.0) / insurers; }

struct Counts {
  double a = 0.0;
  double b = 0.0;
  double discount_a = 0.0;
  double discount_b = 0.0;
  bool clamped = false;
};

Counts counts_at(const CompetitivenessReport& region, const MarketSpec& market,
                 DemandModel model, double psi) {
  Counts c;
  c.discount_a = (1.0 + psi) / (1.0 + region.psi_a) - 1.0;
  c.discount_b = (1.0 + psi) / (1.0 + region.psi_b) - 1.0;
  c.a = demand(model, market.demand_a(), market.insurers_a(), market.reaction_a(), c.discount_a);
  c.b = demand(model, market.demand_b(), market.insurers_b(), market.reaction_b(), c.discount_b);
  c.clamped = model == DemandModel::Linearized && (c.a == 0.0 || c.b == 0.0);
  return c;
}

double proportion_of_b(const Counts& c) {
  if (!(c.a + c.b > 0.0)) {
    throw InfeasibleDemand("demand model yields no policies on either line");
  }
  return c.b / (c.a + c.b);
}

double map_at(const LinePair& pair, const RiskSpec& risk, const CompetitivenessReport& region,
              const MarketSpec& market, DemandModel model, double psi) {
  const double n = proportion_of_b(counts_at(region, market, model, psi));
  return joint_loading(pair, risk, n);
}

DemandRegime regime_of(double share, double w_ct) {
  if (std::abs(share - w_ct) <= kThresholdTolerance * std::max(1.0, w_ct)) {
    return DemandRegime::AtThreshold;
  }
  return share < w_ct ? DemandRegime::BelowThreshold : DemandRegime::AboveThreshold;
}

// eta and w_ct with the no-region convention: psi* >= psi_A for every demand
// share, so every share sits above the threshold.
struct ThresholdInfo {
  double eta = 1.0;
  double w_ct = 0.0;
};

ThresholdInfo threshold_info(const LinePair& pair, const RiskSpec& risk,
                             const MarketSpec& market) {
  if (!pair.has_competitiveness_region()) {
    return {};
  }
  return {eta(pair, risk, market), demand_critical_threshold(pair, risk, market)};
}

void finish(PricingDecision& decision, bool joint, bool separate, const LinePair& pair,
            const RiskSpec& risk, const MarketSpec& market) {
  if (joint) {
    decision.verdict = Verdict::JointFavored;
  } else if (separate) {
    decision.verdict = Verdict::SeparateFavored;
  } else {
    decision.verdict = Verdict::Indeterminate;
    try {
      const EquilibriumResult eq = solve_equilibrium(pair, risk, market, DemandModel::Linearized);
      decision.advisory_d_ptf = premium_difference(pair, risk, market, eq.psi_star);
    } catch (const ComputationError&) {
      decision.advisory_d_ptf.reset();
    }
  }
}

}  // namespace

MarketSpec::MarketSpec(double demand_a, double demand_b, int insurers_a, int insurers_b,
                       double reaction_a, double reaction_b)
    : demand_a_(demand_a),
      demand_b_(demand_b),
      insurers_a_(insurers_a),
      insurers_b_(insurers_b),
      reaction_a_(reaction_a),
      reaction_b_(reaction_b) {
  if (insurers_a_ < 2 || insurers_b_ < 2) {
    throw DomainError("each line needs at least two insurers");
  }
  if (!std::isfinite(demand_a_) || !std::isfinite(demand_b_) || demand_a_ <= insurers_a_ ||
      demand_b_ <= insurers_b_) {
    throw DomainError("total demand must exceed the number of insurers on each line");
  }
  if (!std::isfinite(reaction_a_) || !std::isfinite(reaction_b_) || reaction_a_ <= 0.0 ||
      reaction_b_ <= 0.0) {
    throw DomainError("reaction factors must be positive");
  }
}

MarketSpec MarketSpec::from_share(double total, double demand_share, int insurers_a,
                                  int insurers_b, double reaction_a, double reaction_b) {
  if (!(demand_share > 0.0 && demand_share < 1.0)) {
    throw DomainError("demand share must lie in (0, 1)");
  }
  return MarketSpec((1.0 - demand_share) * total, demand_share * total, insurers_a, insurers_b,
                    reaction_a, reaction_b);
}

MarketSpec MarketSpec::swapped() const {
  return MarketSpec(demand_b_, demand_a_, insurers_b_, insurers_a_, reaction_b_, reaction_a_);
}

std::string_view to_string(DemandModel model) {
  return model == DemandModel::Logistic ? "logistic" : "linear";
}

DemandModel parse_demand_model(std::string_view text) {
  if (text == "logistic") return DemandModel::Logistic;
  if (text == "linear" || text == "linearized") return DemandModel::Linearized;
  throw DomainError("unknown demand model '" + std::string(text) + "'");
}

double demand(DemandModel model, double total, int competitors, double reaction,
              double discount) {
  if (!(total > 0.0) || competitors < 2 || !(reaction > 0.0)) {
    throw DomainError("demand requires total > 0, competitors >= 2 and reaction > 0");
  }
  if (model == DemandModel::Logistic) {
    // N^T (1 - (k-1)/(k-1+exp(-q c))) rearranged so that neither tail overflows.
    return total / (1.0 + (competitors - 1.0) * std::exp(reaction * discount));
  }
  const double count =
      total / competitors * (1.0 - share_of_others(competitors) * reaction * discount);
  return std::max(0.0, count);
}

double equilibrium_map(const LinePair& pair, const RiskSpec& risk, const MarketSpec& market,
                       DemandModel model, double psi) {
  return map_at(pair, risk, competitiveness_region(pair, risk), market, model, psi);
}

EquilibriumResult solve_equilibrium(const LinePair& pair, const RiskSpec& risk,
                                    const MarketSpec& market, DemandModel model,
                                    const EquilibriumOptions& options) {
  const CompetitivenessReport region = competitiveness_region(pair, risk);
  const double lo = region.psi_min;
  const double hi = region.psi_b;
  auto map = [&](double psi) { return map_at(pair, risk, region, market, model, psi); };
  auto tolerance = [&](double psi) { return options.tolerance * (1.0 + std::abs(psi)); };

  EquilibriumResult result;
  double psi = region.psi_a;
  double residual = psi - map(psi);
  double best = std::abs(residual);
  int stalled = 0;
  int iteration = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    if (std::abs(residual) <= tolerance(psi)) {
      result.converged = true;
      break;
    }
    psi = std::clamp(psi - options.damping * residual, lo, hi);
    residual = psi - map(psi);
    if (std::abs(residual) < best) {
      best = std::abs(residual);
      stalled = 0;
    } else if (++stalled >= kStallLimit) {
      break;
    }
  }
  result.iterations = iteration;
  result.method = SolveMethod::FixedPoint;

  if (!result.converged) {
    // The residual is <= 0 at psi_min and >= 0 at psi_B, so a root is
    // bracketed; scan for the first sign change and bisect it.
    const int points = std::max(2, options.scan_points);
    double prev_x = lo;
    double prev_r = lo - map(lo);
    double bracket_lo = lo;
    double bracket_hi = hi;
    int sign_changes = 0;
    if (prev_r >= 0.0) {
      bracket_hi = lo;
      sign_changes = 1;
    }
    for (int i = 1; i <= points; ++i) {
      const double x = i == points ? hi : lo + (hi - lo) * i / points;
      const double r = x - map(x);
      if (prev_r < 0.0 && r >= 0.0) {
        if (sign_changes == 0) {
          bracket_lo = prev_x;
          bracket_hi = x;
        }
        ++sign_changes;
      } else if (prev_r >= 0.0 && r < 0.0) {
        ++sign_changes;
      }
      prev_x = x;
      prev_r = r;
    }
    result.multiple_roots = sign_changes > 1;
    result.method = SolveMethod::Bisection;

    double a = bracket_lo;
    double b = bracket_hi;
    psi = b;
    residual = psi - map(psi);
    int steps = 0;
    while (std::abs(residual) > tolerance(psi) && steps < 200) {
      const double mid = 0.5 * (a + b);
      const double r = mid - map(mid);
      if (r < 0.0) {
        a = mid;
      } else {
        b = mid;
      }
      psi = mid;
      residual = r;
      ++steps;
      if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b)) break;
    }
    result.iterations += points + 1 + steps;
    result.converged = std::abs(residual) <= tolerance(psi);
    if (!result.converged) {
      throw NoConvergence("equilibrium loading did not converge; last residual " +
                              std::to_string(residual),
                          residual);
    }
  }

  const Counts counts = counts_at(region, market, model, psi);
  result.psi_star = psi;
  result.residual = residual;
  result.count_a = counts.a;
  result.count_b = counts.b;
  result.discount_a = counts.discount_a;
  result.discount_b = counts.discount_b;
  result.n_star = proportion_of_b(counts);
  result.demand_clamped = counts.clamped;
  return result;
}

PremiumDifferenceForms premium_difference_forms(const LinePair& pair, const RiskSpec& risk,
                                                const MarketSpec& market, double psi_star) {
  const double psi_a = standalone_loading(pair.line_a(), risk);
  const double psi_b = standalone_loading(pair.line_b(), risk);
  const double base_a = market.demand_a() / market.insurers_a() * pair.line_a().pi();
  const double base_b = market.demand_b() / market.insurers_b() * pair.line_b().pi();
  const double ka = share_of_others(market.insurers_a());
  const double kb = share_of_others(market.insurers_b());
  const double qa = market.reaction_a();
  const double qb = market.reaction_b();
  const double x = 1.0 + psi_star;

  PremiumDifferenceForms f;
  f.theta1 = qa * base_a * ka / (1.0 + psi_a) + qb * base_b * kb / (1.0 + psi_b);
  f.theta2 = (qa * base_a * ka + qb * base_b * kb) + (base_a + base_b);
  f.theta3 = base_a * (1.0 + psi_a) + base_b * (1.0 + psi_b);
  f.theta_form = -f.theta1 * x * x + f.theta2 * x - f.theta3;

  f.n_bar = base_b / (base_a + base_b);
  const double gap_a = psi_a - psi_star;
  const double gap_b = psi_b - psi_star;
  const double scaled = qa * ka * x / (1.0 + psi_a) * (1.0 - f.n_bar) * gap_a +
                        qb * kb * x / (1.0 + psi_b) * f.n_bar * gap_b -
                        ((1.0 - f.n_bar) * gap_a + f.n_bar * gap_b);
  f.n_bar_form = scaled * (base_a + base_b);
  return f;
}

double premium_difference(const LinePair& pair, const RiskSpec& risk, const MarketSpec& market,
                          double psi_star) {
  return premium_difference_forms(pair, risk, market, psi_star).theta_form;
}

double standalone_premium_total(const LinePair& pair, const RiskSpec& risk,
                                const MarketSpec& market) {
  const double psi_a = standalone_loading(pair.line_a(), risk);
  const double psi_b = standalone_loading(pair.line_b(), risk);
  return market.demand_a() / market.insurers_a() * pair.line_a().pi() * (1.0 + psi_a) +
         market.demand_b() / market.insurers_b() * pair.line_b().pi() * (1.0 + psi_b);
}

double collected_premium_difference(const LinePair& pair, const RiskSpec& risk,
                                    const MarketSpec& market, const EquilibriumResult& eq) {
  const double x = 1.0 + eq.psi_star;
  const double joint = eq.count_a * x * pair.line_a().pi() + eq.count_b * x * pair.line_b().pi();
  return joint - standalone_premium_total(pair, risk, market);
}

double eta(const LinePair& pair, const RiskSpec& risk, const MarketSpec& market) {
  if (!pair.has_competitiveness_region()) {
    throw DomainError("eta requires b * rho < 1");
  }
  const CompetitivenessReport region = competitiveness_region(pair, risk);
  const double wa = market.demand_a() / market.insurers_a() * pair.line_a().pi() *
                    (region.psi_a - region.psi_min);
  const double wb = market.demand_b() / market.insurers_b() * pair.line_b().pi() *
                    (region.psi_b - region.psi_min);
  return wb / (wa + wb);
}

double demand_critical_threshold(const LinePair& pair, const RiskSpec& risk,
                                 const MarketSpec& market) {
  const double n_ct = critical_threshold(pair);
  const double psi_a = standalone_loading(pair.line_a(), risk);
  const double psi_b = standalone_loading(pair.line_b(), risk);
  const int ka = market.insurers_a();
  const int kb = market.insurers_b();
  // Demand uplift on line B when the joint pricer charges psi_A.
  const double uplift =
      1.0 + share_of_others(kb) * (psi_b - psi_a) / (1.0 + psi_b) * market.reaction_b();
  return n_ct / (n_ct + (1.0 - n_ct) * uplift * static_cast<double>(ka) / kb);
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::JointFavored: return "JointFavored";
    case Verdict::SeparateFavored: return "SeparateFavored";
    case Verdict::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

std::string_view to_string(DecisionRule rule) {
  return rule == DecisionRule::Sufficient ? "sufficient" : "banded";
}

std::string_view to_string(DemandRegime regime) {
  switch (regime) {
    case DemandRegime::BelowThreshold: return "below";
    case DemandRegime::AtThreshold: return "at";
    case DemandRegime::AboveThreshold: return "above";
  }
  return "below";
}

PricingDecision decide_sufficient(const LinePair& pair, const RiskSpec& risk,
                                const MarketSpec& market) {
  const CompetitivenessReport region = competitiveness_region(pair, risk);
  const ThresholdInfo info = threshold_info(pair, risk, market);
  const double psi_a = region.psi_a;
  const double psi_b = region.psi_b;
  const double psi_min = region.psi_min;
  const double ka = share_of_others(market.insurers_a());
  const double kb = share_of_others(market.insurers_b());
  const double qa = market.reaction_a();
  const double qb = market.reaction_b();

  PricingDecision d;
  d.rule = DecisionRule::Sufficient;
  d.eta = info.eta;
  d.w_ct = info.w_ct;
  d.regime = regime_of(market.demand_share(), info.w_ct);

  const bool t1 = qb > (1.0 / kb) * (1.0 + psi_b) / (1.0 + psi_a);
  const bool t3 = qb < 1.0 / kb;
  d.conditions_checked.push_back({"joint: q_B > k_B/(k_B-1) (1+psi_B)/(1+psi_A)", t1});
  d.conditions_checked.push_back({"separate: q_B < k_B/(k_B-1)", t3});

  bool joint = false;
  bool separate = false;
  switch (d.regime) {
    case DemandRegime::BelowThreshold: {
      const double mix = (1.0 - info.eta) * qa * ka * (1.0 + psi_min) / (1.0 + psi_a) +
                         info.eta * qb * kb * (1.0 + psi_min) / (1.0 + psi_b);
      const bool t2 = mix > 1.0;
      const bool t4 = qa < 1.0 / ka;
      d.conditions_checked.push_back({"joint, w_d < w_ct: eta-weighted reaction > 1", t2});
      d.conditions_checked.push_back({"separate, w_d < w_ct: q_A < k_A/(k_A-1)", t4});
      joint = t1 && t2;
      separate = t3 && t4;
      break;
    }
    case DemandRegime::AtThreshold:
      joint = t1;
      separate = t3;
      break;
    case DemandRegime::AboveThreshold: {
      const bool t2 = qa < (1.0 / ka) * (1.0 + psi_a) / (1.0 + psi_b);
      const bool t4 = qa > 1.0 / ka;
      d.conditions_checked.push_back(
          {"joint, w_d > w_ct: q_A < k_A/(k_A-1) (1+psi_A)/(1+psi_B)", t2});
      d.conditions_checked.push_back({"separate, w_d > w_ct: q_A > k_A/(k_A-1)", t4});
      joint = t1 && t2;
      separate = t3 && t4;
      break;
    }
  }
  finish(d, joint, separate, pair, risk, market);
  return d;
}

PricingDecision decide_banded(const LinePair& pair, const RiskSpec& risk,
                                 const MarketSpec& market) {
  const CompetitivenessReport region = competitiveness_region(pair, risk);
  const ThresholdInfo info = threshold_info(pair, risk, market);
  const double psi_a = region.psi_a;
  const double psi_b = region.psi_b;
  const double psi_min = region.psi_min;
  const double qa = market.reaction_a();
  const double qb = market.reaction_b();

  PricingDecision d;
  d.rule = DecisionRule::Banded;
  d.eta = info.eta;
  d.w_ct = info.w_ct;
  d.regime = regime_of(market.demand_share(), info.w_ct);

  const bool jb = qb > 2.0 * (1.0 + psi_b) / (1.0 + psi_min);
  const bool sb = qb < 1.0;
  d.conditions_checked.push_back({"joint: q_B > 2 (1+psi_B)/(1+psi_min)", jb});
  d.conditions_checked.push_back({"separate: q_B < 1", sb});

  bool joint = false;
  bool separate = false;
  switch (d.regime) {
    case DemandRegime::BelowThreshold: {
      const bool ja = qa > 2.0 * (1.0 + psi_a) / (1.0 + psi_min);
      const bool sa = qa < 1.0;
      d.conditions_checked.push_back({"joint, w_d < w_ct: q_A > 2 (1+psi_A)/(1+psi_min)", ja});
      d.conditions_checked.push_back({"separate, w_d < w_ct: q_A < 1", sa});
      joint = jb && ja;
      separate = sb && sa;
      break;
    }
    case DemandRegime::AtThreshold:
      joint = jb;
      separate = sb;
      break;
    case DemandRegime::AboveThreshold: {
      const bool ja = qa < (1.0 + psi_a) / (1.0 + psi_b);
      const bool sa = qa > 2.0;
      d.conditions_checked.push_back({"joint, w_d > w_ct: q_A < (1+psi_A)/(1+psi_B)", ja});
      d.conditions_checked.push_back({"separate, w_d > w_ct: q_A > 2", sa});
      joint = jb && ja;
      separate = sb && sa;
      break;
    }
  }
  finish(d, joint, separate, pair, risk, market);
  return d;
}

std::vector<SweepPoint> sweep_demand_share(const LinePair& pair, const RiskSpec& risk,
                                           const MarketSpec& market_template, DemandModel model,
                                           std::span<const double> grid, double total) {
  std::vector<SweepPoint> points;
  points.reserve(grid.size());
  for (const double share : grid) {
    SweepPoint p;
    p.demand_share = share;
    try {
      const MarketSpec market = MarketSpec::from_share(
          total, share, market_template.insurers_a(), market_template.insurers_b(),
          market_template.reaction_a(), market_template.reaction_b());
      const EquilibriumResult eq = solve_equilibrium(pair, risk, market, model);
      p.psi_star = eq.psi_star;
      p.relative_d_ptf = collected_premium_difference(pair, risk, market, eq) /
                         standalone_premium_total(pair, risk, market);
      p.ok = true;
      p.status = eq.multiple_roots ? "ok-multiple-roots" : (eq.demand_clamped ? "ok-clamped" : "ok");
    } catch (const Error& e) {
      p.ok = false;
      p.status = e.what();
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace jointprice
