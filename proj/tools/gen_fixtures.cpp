// Writes the synthetic fixtures shipped under data/.
//
//   gen_fixtures [OUT_DIR]
//
// mortality_a.csv / mortality_b.csv: two populations driven mostly by a
// common period index, ages 30-90, years 1950-2018.
// gaussian_a.csv / gaussian_b.csv: the same structure with small shocks.
// losses_3.csv / losses_10.csv: half-yearly aggregate losses, 27 periods.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "jointprice/format.hpp"
#include "jointprice/mortality.hpp"

namespace {

using jointprice::LiLeeParams;
using jointprice::Population;

Eigen::VectorXd random_walk(std::mt19937_64& rng, int n, double drift, double sd) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd k(n);
  k(0) = 0.0;
  for (int t = 1; t < n; ++t) k(t) = k(t - 1) + drift + sd * z(rng);
  k.array() -= k.mean();
  return k;
}

Eigen::VectorXd normalised(Eigen::VectorXd v) { return v / v.sum(); }

LiLeeParams mortality_params(double common_sd, double specific_sd) {
  const int ages = 61;   // 30..90
  const int years = 69;  // 1950..2018
  std::mt19937_64 rng(20240601);
  LiLeeParams p;
  p.first_age = 30;
  p.first_year = 1950;
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(ages, 0.0, ages - 1.0);
  p.beta_common = normalised((1.6 - x.array() / 60.0).matrix());
  p.kappa_common = random_walk(rng, years, -1.3, common_sd);
  p.populations[0].alpha = (std::log(6e-4) + 0.088 * x.array()).matrix();
  p.populations[1].alpha = (std::log(9e-4) + 0.082 * x.array()).matrix();
  p.populations[0].beta = normalised((0.5 + x.array() / 60.0).matrix());
  p.populations[1].beta = normalised((1.2 - x.array() / 90.0).matrix());
  p.populations[0].kappa = random_walk(rng, years, 0.0, specific_sd);
  p.populations[1].kappa = random_walk(rng, years, 0.0, specific_sd);
  return p;
}

struct LineSpec {
  const char* id;
  const char* name;
  double level;     // mean loss
  double growth;    // trend per period, relative to level
  double cv;        // residual standard deviation / level
  double loading;   // exposure to the common shock
};

const std::vector<LineSpec> kLines{
    {"0531", "Auto property damage", 2.4e9, 0.010, 0.045, 0.85},
    {"0553", "Optional auto liability", 9.0e8, 0.012, 0.060, 0.80},
    {"0588", "Motor third party liability", 3.1e8, 0.006, 0.240, 0.10},
    {"0982", "Private passenger auto", 4.2e8, 0.008, 0.200, 0.55},
    {"0114", "Comprehensive residential", 3.6e8, 0.015, 0.140, -0.35},
    {"0977", "Life and property credit", 1.5e8, 0.020, 0.170, 0.20},
    {"0621", "Domestic transport", 2.0e8, 0.004, 0.120, 0.30},
    {"1068", "Mortgage insurance", 2.6e8, 0.018, 0.090, 0.05},
    {"0118", "Commercial multiple peril", 3.3e8, 0.011, 0.095, 0.15},
    {"0654", "Carrier liability", 1.1e8, 0.007, 0.110, 0.40},
};

std::vector<std::string> half_years(int first_year, int count) {
  std::vector<std::string> labels;
  for (int i = 0; i < count; ++i) {
    labels.push_back(std::to_string(first_year + i / 2) + (i % 2 == 0 ? "-H1" : "-H2"));
  }
  return labels;
}

void write_losses(const std::filesystem::path& path, const std::vector<LineSpec>& lines,
                  std::uint64_t seed) {
  const int periods = 27;
  const std::vector<std::string> labels = half_years(2006, periods);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> common(periods);
  for (double& c : common) c = z(rng);
  std::ofstream out(path);
  out << "period,line_id,line_name,loss\n";
  for (const LineSpec& l : lines) {
    const double idio = std::sqrt(1.0 - l.loading * l.loading);
    for (int t = 0; t < periods; ++t) {
      const double shock = l.loading * common[t] + idio * z(rng);
      const double value = l.level * (1.0 + l.growth * (t - periods / 2.0) + l.cv * shock);
      out << labels[t] << ',' << l.id << ",\"" << l.name << "\"," << jointprice::format_double(value)
          << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);

  const LiLeeParams params = mortality_params(0.9, 0.25);
  jointprice::write_mortality_csv(jointprice::synthesize_dataset(params, Population::A, 0.01, 11),
                                  dir / "mortality_a.csv");
  jointprice::write_mortality_csv(jointprice::synthesize_dataset(params, Population::B, 0.01, 12),
                                  dir / "mortality_b.csv");

  // Small period shocks keep present values close to linear in the Gaussian
  // innovations, so the portfolio loss is close to normal.
  const LiLeeParams calm = mortality_params(0.05, 0.02);
  jointprice::write_mortality_csv(jointprice::synthesize_dataset(calm, Population::A, 0.0005, 21),
                                  dir / "gaussian_a.csv");
  jointprice::write_mortality_csv(jointprice::synthesize_dataset(calm, Population::B, 0.0005, 22),
                                  dir / "gaussian_b.csv");

  write_losses(dir / "losses_10.csv", kLines, 5150);
  write_losses(dir / "losses_3.csv", {kLines[0], kLines[2], kLines[4]}, 303);

  std::cout << "fixtures written to " << dir.string() << '\n';
  return 0;
}
