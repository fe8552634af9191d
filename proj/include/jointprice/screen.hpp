#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointprice/pricing.hpp"

namespace jointprice {

/// Aggregate losses of one business line, ordered by period label.
struct LossSeries {
  std::string line_id;
  std::string name;
  std::vector<std::string> periods;
  std::vector<double> values;
};

struct IngestResult {
  std::vector<LossSeries> series;
  /// Lines dropped because they miss periods present in other lines.
  std::vector<std::string> rejected;
  std::vector<std::string> warnings;
};

/**
 * Reads the long-format CSV "period,line_id,line_name,loss" (header
 * required). Period labels sort lexicographically, which orders ISO
 * half-year labels such as 2006-H2 correctly.
 *
 * Throws MalformedRow, NonPositiveLoss or DuplicatePeriod.
 */
IngestResult ingest_losses(std::istream& in);
IngestResult ingest_losses(const std::filesystem::path& path);

struct Detrended {
  std::vector<double> residuals;
  double slope = 0.0;
  double intercept = 0.0;
};

inline constexpr std::size_t kMinObservations = 8;

/// OLS linear trend on the time index 1..T. Throws DomainError below 8 points.
Detrended detrend(std::span<const double> values);

struct KpssResult {
  double statistic = 0.0;
  bool pass_5pct = false;
  int bandwidth = 0;
};

inline constexpr double kKpssCritical5pct = 0.463;

/// floor(4 (T / 100)^(1/4)).
int default_kpss_bandwidth(std::size_t observations);

/**
 * Level-stationarity KPSS statistic with a Bartlett-kernel long-run
 * variance. Throws DegenerateData on zero-variance input.
 */
KpssResult kpss_statistic(std::span<const double> residuals,
                          std::optional<int> bandwidth = std::nullopt);

/// Exposure scale used for pi: the raw mean, or the fitted trend at the last period.
enum class MeanConvention { RawMean, TrendEnd };

struct ScreenOptions {
  MeanConvention mean = MeanConvention::RawMean;
  std::optional<int> kpss_bandwidth;
};

struct LineStats {
  std::string line_id;
  std::string name;
  double pi = 0.0;
  double sigma = 0.0;
  double psi = 0.0;
  double kpss_statistic = 0.0;
  bool kpss_pass = false;
};

/// One unordered pair; line_a has the lower psi so b >= 1.
struct PairCell {
  std::size_t line_a = 0;
  std::size_t line_b = 0;
  double rho = 0.0;
  double b = 1.0;
  double b_rho = 0.0;
  bool region_exists = false;
};

struct ScreenReport {
  /// Ordered by descending psi, ties by line_id.
  std::vector<LineStats> lines;
  /// Every pair i < j of `lines`, row-major.
  std::vector<PairCell> pairs;

  std::size_t positive_pairs() const;
  double positive_fraction() const;
  /// Pair for two distinct line indices, in either order.
  const PairCell& cell(std::size_t i, std::size_t j) const;
  const PairCell& min_rho() const;
  const PairCell& max_rho() const;
};

/// Per-line moments from detrended series and the b rho < 1 check for every pair.
ScreenReport pairwise_screen(std::span<const LossSeries> series, const ScreenOptions& options = {});

struct RegionCurvePoint {
  double n = 0.0;
  double premium = 0.0;  // 1 + psi(n)
};

struct RegionCurve {
  std::vector<RegionCurvePoint> points;
  double premium_a = 0.0;
  double premium_b = 0.0;
  /// Present when b > 1 and b rho < 1.
  std::optional<double> n_ct;
};

/// Loaded premium per unit of expected benefit 1 + psi(n) on `grid` evenly spaced points.
RegionCurve region_curve(const LinePair& pair, const RiskSpec& risk, int grid);
RegionCurve region_curve(const ScreenReport& report, const PairCell& cell, const RiskSpec& risk,
                         int grid);

enum class ReportFormat { Text, Csv };

ReportFormat parse_report_format(std::string_view text);

std::string render_report(const ScreenReport& report, ReportFormat format);

/// Reads back the per-line block of a CSV report.
std::vector<LineStats> parse_report_lines(std::string_view csv);

}  // namespace jointprice
