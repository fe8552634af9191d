#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace jointprice {

enum class Population { A = 0, B = 1 };

/// Central death rates m[x, t] for a contiguous block of ages (rows) and
/// calendar years (columns).
struct MortalityDataset {
  std::string population_id;
  int first_age = 0;
  int first_year = 0;
  Eigen::MatrixXd central_rates;

  int age_count() const { return static_cast<int>(central_rates.rows()); }
  int year_count() const { return static_cast<int>(central_rates.cols()); }
  int last_age() const { return first_age + age_count() - 1; }
  int last_year() const { return first_year + year_count() - 1; }

  /// Throws DomainError on empty, non-finite or non-positive rates.
  void validate() const;
};

/// Age-by-year CSV: header "age,<year>,<year>,...", then one row per age.
MortalityDataset read_mortality_csv(const std::filesystem::path& path, std::string population_id);
void write_mortality_csv(const MortalityDataset& data, const std::filesystem::path& path);

struct PopulationFactors {
  Eigen::VectorXd alpha;  // per age
  Eigen::VectorXd beta;   // per age, population-specific loading
  Eigen::VectorXd kappa;  // per year, population-specific index
};

/**
 * Two-population Li-Lee model
 *
 *   log m_i(x, t) = alpha_i(x) + beta_i(x) kappa_i(t) + beta(x) kappa(t)
 *
 * with sum(beta) = 1 and sum(kappa) = 0 for the common and for each
 * population-specific factor. The three period indices follow a correlated
 * random walk with drift; the order in `drift` and `covariance` is
 * (kappa_A, kappa_B, kappa).
 */
struct LiLeeParams {
  int first_age = 0;
  int first_year = 0;
  std::array<PopulationFactors, 2> populations;
  Eigen::VectorXd beta_common;
  Eigen::VectorXd kappa_common;
  Eigen::Vector3d drift = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  /// Population-specific drifts set to zero by the fit (not significant).
  std::array<bool, 2> specific_drift_zeroed{false, false};

  const PopulationFactors& population(Population p) const {
    return populations[static_cast<std::size_t>(p)];
  }
  PopulationFactors& population(Population p) { return populations[static_cast<std::size_t>(p)]; }
  int age_count() const { return static_cast<int>(beta_common.size()); }
  int year_count() const { return static_cast<int>(kappa_common.size()); }
  int last_age() const { return first_age + age_count() - 1; }
  int last_year() const { return first_year + year_count() - 1; }

  /// log m for a given age row and index values.
  double log_rate(Population p, int age_index, double kappa_specific, double kappa_common) const;
};

struct FitOptions {
  /// Keep a population-specific drift only when |mean difference| exceeds
  /// this many standard errors.
  double specific_drift_z = 2.0;
  bool test_specific_drift = true;
};

/**
 * Fits the model by singular value decomposition on the common year range.
 *
 * Throws DataMismatch when age ranges differ or years do not overlap, and
 * DegenerateFactor when a factor matrix is numerically zero.
 */
LiLeeParams fit_li_lee(const MortalityDataset& data_a, const MortalityDataset& data_b,
                       const FitOptions& options = {});

/// Rates exp(alpha_i + beta_i kappa_i + beta kappa) over the fitted grid, with
/// optional i.i.d. Gaussian noise on log rates.
MortalityDataset synthesize_dataset(const LiLeeParams& params, Population population,
                                    double log_noise_sd = 0.0, std::uint64_t seed = 0);

enum class ProductKind { TermAnnuity, TermAssurance };

struct ProductSpec {
  ProductKind kind = ProductKind::TermAnnuity;
  Population population = Population::A;
  int entry_age = 60;
  int term = 30;
  double benefit = 1.0;
  /// Annual discount factor v; cash flow at the end of year k is discounted by v^k.
  double discount_factor = 1.0 / 1.02;

  void validate() const;
};

class ScenarioSet;

/// Lightweight view of one simulated scenario.
class Scenario {
 public:
  Scenario(const ScenarioSet& set, std::size_t index) : set_(&set), index_(index) {}

  std::size_t index() const { return index_; }
  /// kappa value (series 0 = kappa_A, 1 = kappa_B, 2 = common) after `step`
  /// projection years; step 0 is the last fitted year.
  double kappa(int series, int step) const;
  /// One-year survival probability of a life aged `age` during projection year `step` (1-based).
  double survival(Population p, int age, int step) const;
  /// One-year survival probabilities for a cohort entering at `entry_age`,
  /// policy years 1..term.
  std::vector<double> survival_path(Population p, int entry_age, int term) const;

 private:
  const ScenarioSet* set_;
  std::size_t index_;
};

/// Simulated kappa paths; survival probabilities are derived on demand.
class ScenarioSet {
 public:
  ScenarioSet(LiLeeParams params, int horizon, std::size_t count, std::uint64_t seed);

  const LiLeeParams& params() const { return params_; }
  int horizon() const { return horizon_; }
  std::size_t size() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  Scenario operator[](std::size_t i) const { return Scenario(*this, i); }

  double kappa(std::size_t scenario, int series, int step) const;

 private:
  friend ScenarioSet simulate_scenarios(const LiLeeParams&, int, std::size_t, std::uint64_t);

  LiLeeParams params_;
  int horizon_;
  std::size_t count_;
  std::uint64_t seed_;
  // [scenario][step 1..horizon][series], steps stored from index 0.
  std::vector<double> kappa_;
};

/// Projects the three period indices as a correlated Gaussian random walk from
/// the last fitted year. Each scenario draws from its own stream seeded by
/// (seed, scenario index), so results do not depend on evaluation order.
ScenarioSet simulate_scenarios(const LiLeeParams& params, int horizon, std::size_t n_sims,
                               std::uint64_t seed);

/// Present value at issue from one-year survival probabilities of policy years 1..term.
double present_value(std::span<const double> one_year_survival, const ProductSpec& spec);
double present_value(const Scenario& scenario, const ProductSpec& spec);
std::vector<double> present_values(const ScenarioSet& scenarios, const ProductSpec& spec);

struct SimulationSummary {
  double pi_a = 0.0;
  double sigma_a = 0.0;
  double pi_b = 0.0;
  double sigma_b = 0.0;
  double rho = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

/// Sample means, standard deviations (n - 1) and Pearson correlation of paired samples.
SimulationSummary summarize(std::span<const double> values_a, std::span<const double> values_b,
                            std::uint64_t seed = 0);

/// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double level);

/// Evenly spaced proportions 0, 1/(points-1), ..., 1.
std::vector<double> proportion_grid(int points);

struct VarLoadingPoint {
  double n = 0.0;
  double psi_var = 0.0;
};

/// Value-at-risk joint loading zeta (VaR_p[Y_n] - 1), where Y_n is the
/// portfolio payout per unit of pure premium with a proportion n of B policies.
std::vector<VarLoadingPoint> var_loading_curve(std::span<const double> values_a,
                                               std::span<const double> values_b, double zeta,
                                               double var_level, int n_grid);

/// MSD weight gamma minimising the largest gap between the MSD and
/// value-at-risk joint loadings over the grid of proportions.
double calibrate_gamma(std::span<const double> values_a, std::span<const double> values_b,
                       double zeta, double var_level, int n_grid);

}  // namespace jointprice
