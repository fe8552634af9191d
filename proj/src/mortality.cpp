#include "jointprice/mortality.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "csv.hpp"
#include "jointprice/error.hpp"
#include "jointprice/format.hpp"

namespace jointprice {

namespace {

struct RankOne {
  Eigen::VectorXd beta;
  Eigen::VectorXd kappa;
};

// Leading singular pair of `m`, scaled so that beta sums to one. The rows of
// `m` are centred, so kappa sums to zero up to rounding; the mean is removed
// and returned so the caller can fold it into alpha.
RankOne leading_factor(const Eigen::MatrixXd& m, double scale, const char* what,
                       Eigen::VectorXd& alpha_shift) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  if (!(s > 1e-12 * std::max(1.0, scale))) {
    throw DegenerateFactor(std::string(what) + " matrix is numerically zero");
  }
  Eigen::VectorXd u = svd.matrixU().col(0);
  Eigen::VectorXd v = svd.matrixV().col(0);
  const double total = u.sum();
  if (std::abs(total) < 1e-8 * u.cwiseAbs().sum()) {
    throw DegenerateFactor(std::string(what) + " age loadings sum to zero");
  }
  RankOne f;
  f.beta = u / total;
  f.kappa = v * (s * total);
  const double mean = f.kappa.mean();
  f.kappa.array() -= mean;
  alpha_shift = f.beta * mean;
  return f;
}

Eigen::Vector3d column_mean(const Eigen::MatrixXd& m) { return m.colwise().mean().transpose(); }

std::mt19937_64 scenario_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void require_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataMismatch("samples must be paired (equal sizes)");
  }
  if (a.size() < 2) {
    throw DegenerateData("at least two samples are required");
  }
}

struct PortfolioStats {
  double sd = 0.0;
  double var_gap = 0.0;  // VaR_p[Y] - 1
};

PortfolioStats portfolio_stats(std::span<const double> a, std::span<const double> b,
                               double pi_a, double pi_b, double n, double level) {
  const double denom = (1.0 - n) * pi_a + n * pi_b;
  std::vector<double> y(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    y[j] = ((1.0 - n) * a[j] + n * b[j]) / denom;
  }
  const double m = mean_of(y);
  double ss = 0.0;
  for (double v : y) ss += (v - m) * (v - m);
  PortfolioStats st;
  st.sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
  if (!(st.sd > 1e-14 * std::abs(m))) {
    throw DegenerateData("portfolio sample variance is numerically zero");
  }
  st.var_gap = empirical_quantile(std::move(y), level) - 1.0;
  return st;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("value-at-risk level must lie in (0, 1)");
  }
}

}  // namespace

void MortalityDataset::validate() const {
  if (central_rates.size() == 0) {
    throw DomainError("mortality dataset '" + population_id + "' is empty");
  }
  if (!central_rates.allFinite() || (central_rates.array() <= 0.0).any()) {
    throw DomainError("mortality dataset '" + population_id +
                      "' has non-positive or non-finite rates");
  }
}

MortalityDataset read_mortality_csv(const std::filesystem::path& path, std::string population_id) {
  std::ifstream in(path);
  if (!in) {
    throw DomainError("cannot open mortality file " + path.string());
  }
  MortalityDataset data;
  data.population_id = std::move(population_id);
  std::string line;
  std::size_t line_no = 0;
  std::vector<int> years;
  std::vector<int> ages;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line, line_no);
    if (years.empty()) {
      for (std::size_t c = 1; c < cells.size(); ++c) {
        years.push_back(detail::parse_int(cells[c], line_no, c + 1));
      }
      if (years.empty()) throw MalformedRow("header row has no year columns", line_no, 1);
      continue;
    }
    if (cells.size() != years.size() + 1) {
      throw MalformedRow("expected " + std::to_string(years.size() + 1) + " columns", line_no,
                         cells.size());
    }
    ages.push_back(detail::parse_int(cells[0], line_no, 1));
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      row.push_back(detail::parse_double(cells[c], line_no, c + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw DomainError("mortality file " + path.string() + " has no data rows");
  }
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] != years[i - 1] + 1) throw DomainError("years must be contiguous and increasing");
  }
  for (std::size_t i = 1; i < ages.size(); ++i) {
    if (ages[i] != ages[i - 1] + 1) throw DomainError("ages must be contiguous and increasing");
  }
  data.first_age = ages.front();
  data.first_year = years.front();
  data.central_rates.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(years.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < years.size(); ++c) {
      data.central_rates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  data.validate();
  return data;
}

void write_mortality_csv(const MortalityDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  out << "age";
  for (int t = 0; t < data.year_count(); ++t) out << ',' << data.first_year + t;
  out << '\n';
  for (int x = 0; x < data.age_count(); ++x) {
    out << data.first_age + x;
    for (int t = 0; t < data.year_count(); ++t) out << ',' << format_double(data.central_rates(x, t));
    out << '\n';
  }
}

double LiLeeParams::log_rate(Population p, int age_index, double kappa_specific,
                             double kappa_common_value) const {
  const PopulationFactors& f = population(p);
  return f.alpha(age_index) + f.beta(age_index) * kappa_specific +
         beta_common(age_index) * kappa_common_value;
}

LiLeeParams fit_li_lee(const MortalityDataset& data_a, const MortalityDataset& data_b,
                       const FitOptions& options) {
  data_a.validate();
  data_b.validate();
  if (data_a.first_age != data_b.first_age || data_a.age_count() != data_b.age_count()) {
    throw DataMismatch("populations must cover the same ages");
  }
  const int y0 = std::max(data_a.first_year, data_b.first_year);
  const int y1 = std::min(data_a.last_year(), data_b.last_year());
  const int years = y1 - y0 + 1;
  if (years < 3) {
    throw DataMismatch("populations need at least three overlapping years");
  }
  const int ages = data_a.age_count();

  std::array<Eigen::MatrixXd, 2> centred;
  LiLeeParams params;
  params.first_age = data_a.first_age;
  params.first_year = y0;
  double scale = 0.0;
  const std::array<const MortalityDataset*, 2> inputs{&data_a, &data_b};
  for (std::size_t i = 0; i < 2; ++i) {
    const Eigen::MatrixXd log_m =
        inputs[i]->central_rates.block(0, y0 - inputs[i]->first_year, ages, years).array().log();
    params.populations[i].alpha = log_m.rowwise().mean();
    centred[i] = log_m.colwise() - params.populations[i].alpha;
    scale = std::max(scale, log_m.norm());
  }

  Eigen::VectorXd shift;
  const RankOne common = leading_factor(0.5 * (centred[0] + centred[1]), scale, "common", shift);
  params.beta_common = common.beta;
  params.kappa_common = common.kappa;
  for (std::size_t i = 0; i < 2; ++i) params.populations[i].alpha += shift;

  for (std::size_t i = 0; i < 2; ++i) {
    const Eigen::MatrixXd residual = centred[i] - common.beta * common.kappa.transpose();
    const RankOne specific = leading_factor(residual, scale, "population-specific residual", shift);
    params.populations[i].beta = specific.beta;
    params.populations[i].kappa = specific.kappa;
    params.populations[i].alpha += shift;
  }

  Eigen::MatrixXd diffs(years - 1, 3);
  for (int t = 1; t < years; ++t) {
    diffs(t - 1, 0) = params.populations[0].kappa(t) - params.populations[0].kappa(t - 1);
    diffs(t - 1, 1) = params.populations[1].kappa(t) - params.populations[1].kappa(t - 1);
    diffs(t - 1, 2) = params.kappa_common(t) - params.kappa_common(t - 1);
  }
  params.drift = column_mean(diffs);
  const Eigen::MatrixXd dev = diffs.rowwise() - params.drift.transpose();
  const double dof = std::max(1, years - 2);
  params.covariance = (dev.transpose() * dev) / dof;

  if (options.test_specific_drift) {
    const double m = years - 1;
    for (std::size_t i = 0; i < 2; ++i) {
      const double se = std::sqrt(params.covariance(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(i)) / m);
      if (std::abs(params.drift(static_cast<Eigen::Index>(i))) < options.specific_drift_z * se) {
        params.drift(static_cast<Eigen::Index>(i)) = 0.0;
        params.specific_drift_zeroed[i] = true;
      }
    }
  }
  return params;
}

MortalityDataset synthesize_dataset(const LiLeeParams& params, Population population,
                                    double log_noise_sd, std::uint64_t seed) {
  MortalityDataset data;
  data.population_id = population == Population::A ? "A" : "B";
  data.first_age = params.first_age;
  data.first_year = params.first_year;
  data.central_rates.resize(params.age_count(), params.year_count());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const PopulationFactors& f = params.population(population);
  for (int t = 0; t < params.year_count(); ++t) {
    for (int x = 0; x < params.age_count(); ++x) {
      double log_m = params.log_rate(population, x, f.kappa(t), params.kappa_common(t));
      if (log_noise_sd > 0.0) log_m += log_noise_sd * noise(rng);
      data.central_rates(x, t) = std::exp(log_m);
    }
  }
  return data;
}

void ProductSpec::validate() const {
  if (term < 1) throw DomainError("product term must be at least one year");
  if (!(benefit > 0.0) || !std::isfinite(benefit)) throw DomainError("benefit must be positive");
  if (!(discount_factor > 0.0 && discount_factor <= 1.0)) {
    throw DomainError("discount factor must lie in (0, 1]");
  }
}

ScenarioSet::ScenarioSet(LiLeeParams params, int horizon, std::size_t count, std::uint64_t seed)
    : params_(std::move(params)),
      horizon_(horizon),
      count_(count),
      seed_(seed),
      kappa_(count * static_cast<std::size_t>(std::max(horizon, 0)) * 3, 0.0) {}

double ScenarioSet::kappa(std::size_t scenario, int series, int step) const {
  if (step == 0) {
    const int last = params_.year_count() - 1;
    if (series == 2) return params_.kappa_common(last);
    return params_.populations[static_cast<std::size_t>(series)].kappa(last);
  }
  return kappa_[(scenario * static_cast<std::size_t>(horizon_) + static_cast<std::size_t>(step - 1)) * 3 +
                static_cast<std::size_t>(series)];
}

double Scenario::kappa(int series, int step) const { return set_->kappa(index_, series, step); }

double Scenario::survival(Population p, int age, int step) const {
  const LiLeeParams& params = set_->params();
  const int age_index = age - params.first_age;
  if (age_index < 0 || age_index >= params.age_count()) {
    throw DomainError("age " + std::to_string(age) + " is outside the fitted age range");
  }
  if (step < 1 || step > set_->horizon()) {
    throw DomainError("projection step outside the simulated horizon");
  }
  const double central =
      std::exp(params.log_rate(p, age_index, kappa(static_cast<int>(p), step), kappa(2, step)));
  // Constant force within the year: q = 1 - exp(-m).
  return std::exp(-central);
}

std::vector<double> Scenario::survival_path(Population p, int entry_age, int term) const {
  const LiLeeParams& params = set_->params();
  if (entry_age < params.first_age || entry_age + term > params.last_age()) {
    throw DomainError("entry age plus term must lie within the fitted age range");
  }
  if (term > set_->horizon()) {
    throw DomainError("product term exceeds the simulated horizon");
  }
  std::vector<double> path(static_cast<std::size_t>(term));
  for (int k = 1; k <= term; ++k) {
    path[static_cast<std::size_t>(k - 1)] = survival(p, entry_age + k - 1, k);
  }
  return path;
}

ScenarioSet simulate_scenarios(const LiLeeParams& params, int horizon, std::size_t n_sims,
                               std::uint64_t seed) {
  if (horizon < 1) throw DomainError("simulation horizon must be at least one year");
  if (n_sims < 1) throw DomainError("at least one scenario is required");
  if (!params.covariance.allFinite() ||
      (params.covariance - params.covariance.transpose()).cwiseAbs().maxCoeff() >
          1e-12 * std::max(1.0, params.covariance.cwiseAbs().maxCoeff())) {
    throw DomainError("innovation covariance must be finite and symmetric");
  }
  // Symmetric square root of a PSD matrix; tolerates singular covariances.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(params.covariance);
  const Eigen::Vector3d roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix3d loading = eig.eigenvectors() * roots.asDiagonal();

  ScenarioSet set(params, horizon, n_sims, seed);
  const int last = params.year_count() - 1;
  const Eigen::Vector3d start(params.populations[0].kappa(last), params.populations[1].kappa(last),
                              params.kappa_common(last));
  for (std::size_t s = 0; s < n_sims; ++s) {
    std::mt19937_64 rng = scenario_stream(seed, s);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d k = start;
    for (int h = 0; h < horizon; ++h) {
      Eigen::Vector3d z;
      z << normal(rng), normal(rng), normal(rng);
      k += params.drift + loading * z;
      const std::size_t base = (s * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(h)) * 3;
      set.kappa_[base] = k(0);
      set.kappa_[base + 1] = k(1);
      set.kappa_[base + 2] = k(2);
    }
  }
  return set;
}

double present_value(std::span<const double> one_year_survival, const ProductSpec& spec) {
  spec.validate();
  if (one_year_survival.size() < static_cast<std::size_t>(spec.term)) {
    throw DomainError("survival path shorter than the product term");
  }
  double alive = 1.0;  // (k-1)-year survival at the start of policy year k
  double discount = 1.0;
  double value = 0.0;
  for (int k = 1; k <= spec.term; ++k) {
    const double p = one_year_survival[static_cast<std::size_t>(k - 1)];
    discount *= spec.discount_factor;
    if (spec.kind == ProductKind::TermAnnuity) {
      alive *= p;
      value += alive * discount;
    } else {
      value += alive * (1.0 - p) * discount;
      alive *= p;
    }
  }
  return spec.benefit * value;
}

double present_value(const Scenario& scenario, const ProductSpec& spec) {
  spec.validate();
  const std::vector<double> path = scenario.survival_path(spec.population, spec.entry_age, spec.term);
  return present_value(path, spec);
}

std::vector<double> present_values(const ScenarioSet& scenarios, const ProductSpec& spec) {
  std::vector<double> values(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    values[s] = present_value(scenarios[s], spec);
  }
  return values;
}

SimulationSummary summarize(std::span<const double> values_a, std::span<const double> values_b,
                            std::uint64_t seed) {
  require_paired(values_a, values_b);
  const double n = static_cast<double>(values_a.size());
  SimulationSummary s;
  s.pi_a = mean_of(values_a);
  s.pi_b = mean_of(values_b);
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t j = 0; j < values_a.size(); ++j) {
    const double da = values_a[j] - s.pi_a;
    const double db = values_b[j] - s.pi_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    throw DegenerateData("sample standard deviation is zero");
  }
  s.sigma_a = std::sqrt(saa / (n - 1.0));
  s.sigma_b = std::sqrt(sbb / (n - 1.0));
  s.rho = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  s.sample_count = values_a.size();
  s.seed = seed;
  return s;
}

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw DegenerateData("quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<double> proportion_grid(int points) {
  if (points < 2) throw DomainError("grid needs at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  }
  grid.back() = 1.0;
  return grid;
}

std::vector<VarLoadingPoint> var_loading_curve(std::span<const double> values_a,
                                               std::span<const double> values_b, double zeta,
                                               double var_level, int n_grid) {
  require_paired(values_a, values_b);
  check_level(var_level);
  if (!(zeta > 0.0 && zeta <= 1.0)) throw DomainError("zeta must lie in (0, 1]");
  const double pi_a = mean_of(values_a);
  const double pi_b = mean_of(values_b);
  std::vector<VarLoadingPoint> curve;
  for (const double n : proportion_grid(n_grid)) {
    const PortfolioStats st = portfolio_stats(values_a, values_b, pi_a, pi_b, n, var_level);
    curve.push_back({n, zeta * st.var_gap});
  }
  return curve;
}

double calibrate_gamma(std::span<const double> values_a, std::span<const double> values_b,
                       double zeta, double var_level, int n_grid) {
  require_paired(values_a, values_b);
  check_level(var_level);
  if (!(zeta > 0.0 && zeta <= 1.0)) throw DomainError("zeta must lie in (0, 1]");
  const double pi_a = mean_of(values_a);
  const double pi_b = mean_of(values_b);
  std::vector<PortfolioStats> stats;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const double n : proportion_grid(n_grid)) {
    stats.push_back(portfolio_stats(values_a, values_b, pi_a, pi_b, n, var_level));
    const double ratio = stats.back().var_gap / stats.back().sd;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  // max_n |gamma s_n - d_n| is convex in gamma; its minimiser is where the
  // largest overshoot equals the largest undershoot.
  auto balance = [&](double gamma) {
    double over = -std::numeric_limits<double>::infinity();
    double under = -std::numeric_limits<double>::infinity();
    for (const PortfolioStats& st : stats) {
      over = std::max(over, gamma * st.sd - st.var_gap);
      under = std::max(under, st.var_gap - gamma * st.sd);
    }
    return over - under;
  };
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (balance(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double gamma = 0.5 * (lo + hi);
  if (!(gamma > 0.0)) {
    throw DegenerateData("value-at-risk loadings are not positive; gamma is undefined");
  }
  return gamma;
}

}  // namespace jointprice
