#include "jointprice/screen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "jointprice/error.hpp"
#include "jointprice/format.hpp"
#include "jointprice/mortality.hpp"

namespace jointprice {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

char sign_of(const PairCell& cell) { return cell.region_exists ? '+' : '-'; }

constexpr const char* kBullet = "•";

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string render_csv(const ScreenReport& report) {
  std::ostringstream out;
  out << "[lines]\n";
  out << "line_id,line_name,pi,sigma,psi,kpss_statistic,kpss_pass\n";
  for (const LineStats& l : report.lines) {
    out << csv_escape(l.line_id) << ',' << csv_escape(l.name) << ',' << format_double(l.pi) << ','
        << format_double(l.sigma) << ',' << format_double(l.psi) << ','
        << format_double(l.kpss_statistic) << ',' << (l.kpss_pass ? "true" : "false") << '\n';
  }
  out << "\n[pairs]\n";
  out << "line_a,line_b,rho,b,b_rho,region_exists\n";
  for (const PairCell& c : report.pairs) {
    out << csv_escape(report.lines[c.line_a].line_id) << ','
        << csv_escape(report.lines[c.line_b].line_id) << ',' << format_double(c.rho) << ','
        << format_double(c.b) << ',' << format_double(c.b_rho) << ','
        << (c.region_exists ? "true" : "false") << '\n';
  }
  out << "\n[matrix]\n";
  out << "line_id";
  for (const LineStats& l : report.lines) out << ',' << csv_escape(l.line_id);
  out << '\n';
  for (std::size_t i = 0; i < report.lines.size(); ++i) {
    out << csv_escape(report.lines[i].line_id);
    for (std::size_t j = 0; j < report.lines.size(); ++j) {
      out << ',';
      if (i == j) {
        out << kBullet;
      } else {
        out << sign_of(report.cell(i, j));
      }
    }
    out << '\n';
  }
  out << "\n[summary]\n";
  out << "positive_pairs,total_pairs,fraction\n";
  out << report.positive_pairs() << ',' << report.pairs.size() << ','
      << format_double(report.positive_fraction()) << '\n';
  return out.str();
}

std::string render_text(const ScreenReport& report) {
  std::ostringstream out;
  std::size_t id_w = 7;
  std::size_t name_w = 4;
  for (const LineStats& l : report.lines) {
    id_w = std::max(id_w, l.line_id.size());
    name_w = std::max(name_w, l.name.size());
  }
  out << pad("line_id", id_w) << "  " << std::string(name_w - 4, ' ') << "name" << "  "
      << pad("pi", 16) << pad("sigma", 16) << pad("psi", 12) << pad("kpss", 10) << "  stationary\n";
  for (const LineStats& l : report.lines) {
    out << pad(l.line_id, id_w) << "  " << l.name << std::string(name_w - l.name.size(), ' ')
        << "  " << pad(fixed(l.pi, 2), 16) << pad(fixed(l.sigma, 2), 16) << pad(fixed(l.psi, 6), 12)
        << pad(fixed(l.kpss_statistic, 4), 10) << "  " << (l.kpss_pass ? "yes" : "no") << '\n';
  }
  out << '\n';
  std::size_t cell_w = 1;
  for (const LineStats& l : report.lines) cell_w = std::max(cell_w, l.line_id.size());
  out << std::string(id_w, ' ');
  for (const LineStats& l : report.lines) out << ' ' << pad(l.line_id, cell_w);
  out << '\n';
  for (std::size_t i = 0; i < report.lines.size(); ++i) {
    out << pad(report.lines[i].line_id, id_w);
    for (std::size_t j = 0; j < report.lines.size(); ++j) {
      out << ' ' << std::string(cell_w - 1, ' ');
      if (i == j) {
        out << kBullet;
      } else {
        out << sign_of(report.cell(i, j));
      }
    }
    out << '\n';
  }
  out << '\n';
  out << "positive pairs: " << report.positive_pairs() << "/" << report.pairs.size() << " ("
      << fixed(100.0 * report.positive_fraction(), 2) << "%)\n";
  if (!report.pairs.empty()) {
    const PairCell& lo = report.min_rho();
    const PairCell& hi = report.max_rho();
    out << "min rho: " << fixed(lo.rho, 4) << " (" << report.lines[lo.line_a].line_id << ", "
        << report.lines[lo.line_b].line_id << ")\n";
    out << "max rho: " << fixed(hi.rho, 4) << " (" << report.lines[hi.line_a].line_id << ", "
        << report.lines[hi.line_b].line_id << ")\n";
  }
  return out.str();
}

}  // namespace

IngestResult ingest_losses(std::istream& in) {
  IngestResult result;
  struct Pending {
    std::string name;
    std::map<std::string, double> values;
  };
  std::map<std::string, Pending> lines;
  std::vector<std::string> order;
  std::string text;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (line_no == 1 && text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    if (detail::trim(text).empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(text, line_no);
    if (!header_seen) {
      const std::vector<std::string> expected{"period", "line_id", "line_name", "loss"};
      for (std::size_t c = 0; c < expected.size(); ++c) {
        if (c >= cells.size() || lower(cells[c]) != expected[c]) {
          throw MalformedRow("header must be period,line_id,line_name,loss", line_no, c + 1);
        }
      }
      if (cells.size() != expected.size()) {
        throw MalformedRow("header must have exactly four columns", line_no, expected.size() + 1);
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 4) {
      throw MalformedRow("expected 4 columns, found " + std::to_string(cells.size()), line_no,
                         cells.size() < 4 ? cells.size() + 1 : 5);
    }
    if (cells[0].empty()) throw MalformedRow("empty period label", line_no, 1);
    if (cells[1].empty()) throw MalformedRow("empty line_id", line_no, 2);
    const double loss = detail::parse_double(cells[3], line_no, 4);
    if (!(loss > 0.0)) {
      throw NonPositiveLoss("line " + std::to_string(line_no) + ": loss for line_id " + cells[1] +
                            " in period " + cells[0] + " is not positive");
    }
    auto [it, inserted] = lines.try_emplace(cells[1]);
    if (inserted) {
      it->second.name = cells[2];
      order.push_back(cells[1]);
    } else if (it->second.name != cells[2]) {
      throw MalformedRow("line_id " + cells[1] + " appears with two names", line_no, 3);
    }
    if (!it->second.values.emplace(cells[0], loss).second) {
      throw DuplicatePeriod("line " + std::to_string(line_no) + ": duplicate period " + cells[0] +
                            " for line_id " + cells[1]);
    }
  }
  if (!header_seen) {
    result.warnings.push_back("input is empty; no series read");
    return result;
  }
  if (lines.empty()) {
    result.warnings.push_back("input has a header but no data rows");
    return result;
  }
  std::set<std::string> all_periods;
  for (const auto& [id, p] : lines) {
    for (const auto& [period, v] : p.values) all_periods.insert(period);
  }
  for (const std::string& id : order) {
    const Pending& p = lines.at(id);
    if (p.values.size() != all_periods.size()) {
      std::string missing;
      std::size_t count = 0;
      for (const std::string& period : all_periods) {
        if (!p.values.count(period)) {
          if (count < 3) missing += (count ? ", " : "") + period;
          ++count;
        }
      }
      if (count > 3) missing += ", ...";
      result.rejected.push_back("line_id " + id + ": missing " + std::to_string(count) +
                                " period(s) (" + missing + ")");
      continue;
    }
    LossSeries s;
    s.line_id = id;
    s.name = p.name;
    for (const auto& [period, v] : p.values) {
      s.periods.push_back(period);
      s.values.push_back(v);
    }
    result.series.push_back(std::move(s));
  }
  return result;
}

IngestResult ingest_losses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open loss file " + path.string());
  return ingest_losses(in);
}

Detrended detrend(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < kMinObservations) {
    throw DomainError("detrending needs at least " + std::to_string(kMinObservations) +
                      " observations");
  }
  const double t_mean = (static_cast<double>(n) + 1.0) / 2.0;
  const double y_mean = mean(values);
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i + 1) - t_mean;
    stt += dt * dt;
    sty += dt * (values[i] - y_mean);
  }
  Detrended d;
  d.slope = sty / stt;
  d.intercept = y_mean - d.slope * t_mean;
  d.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.residuals[i] = values[i] - y_mean - d.slope * (static_cast<double>(i + 1) - t_mean);
  }
  return d;
}

int default_kpss_bandwidth(std::size_t observations) {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(observations) / 100.0, 0.25)));
}

KpssResult kpss_statistic(std::span<const double> residuals, std::optional<int> bandwidth) {
  const std::size_t n = residuals.size();
  if (n < kMinObservations) {
    throw DomainError("KPSS needs at least " + std::to_string(kMinObservations) + " observations");
  }
  const int lags = bandwidth.value_or(default_kpss_bandwidth(n));
  if (lags < 0 || static_cast<std::size_t>(lags) >= n) {
    throw DomainError("KPSS bandwidth must lie in [0, T)");
  }
  const double m = mean(residuals);
  std::vector<double> e(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = residuals[i] - m;
    scale = std::max(scale, std::abs(residuals[i]));
  }
  const double tn = static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < n; ++t) s += e[t] * e[t - lag];
    return s / tn;
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 1e-28 * std::max(1.0, scale * scale))) {
    throw DegenerateData("KPSS input has zero variance");
  }
  double lrv = gamma0;
  for (int j = 1; j <= lags; ++j) {
    lrv += 2.0 * (1.0 - static_cast<double>(j) / (lags + 1.0)) * autocov(static_cast<std::size_t>(j));
  }
  double partial = 0.0;
  double sum_sq = 0.0;
  for (double x : e) {
    partial += x;
    sum_sq += partial * partial;
  }
  KpssResult r;
  r.bandwidth = lags;
  r.statistic = sum_sq / (tn * tn * lrv);
  r.pass_5pct = r.statistic < kKpssCritical5pct;
  return r;
}

std::size_t ScreenReport::positive_pairs() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const PairCell& c) { return c.region_exists; }));
}

double ScreenReport::positive_fraction() const {
  return pairs.empty() ? 0.0 : static_cast<double>(positive_pairs()) / static_cast<double>(pairs.size());
}

const PairCell& ScreenReport::cell(std::size_t i, std::size_t j) const {
  const std::size_t n = lines.size();
  if (i == j || i >= n || j >= n) throw DomainError("pair indices must be distinct and in range");
  if (i > j) std::swap(i, j);
  // Row-major upper triangle without the diagonal.
  const std::size_t index = i * n - i * (i + 1) / 2 + (j - i - 1);
  return pairs[index];
}

const PairCell& ScreenReport::min_rho() const {
  if (pairs.empty()) throw DomainError("report has no pairs");
  return *std::min_element(pairs.begin(), pairs.end(),
                           [](const PairCell& x, const PairCell& y) { return x.rho < y.rho; });
}

const PairCell& ScreenReport::max_rho() const {
  if (pairs.empty()) throw DomainError("report has no pairs");
  return *std::max_element(pairs.begin(), pairs.end(),
                           [](const PairCell& x, const PairCell& y) { return x.rho < y.rho; });
}

ScreenReport pairwise_screen(std::span<const LossSeries> series, const ScreenOptions& options) {
  if (series.size() < 2) throw DomainError("screening needs at least two series");
  for (const LossSeries& s : series) {
    if (s.values.size() != s.periods.size()) {
      throw DataMismatch("line_id " + s.line_id + ": periods and values differ in length");
    }
    if (s.periods != series.front().periods) {
      throw DataMismatch("line_id " + s.line_id + " does not cover the same periods as line_id " +
                         series.front().line_id);
    }
    for (double v : s.values) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw NonPositiveLoss("line_id " + s.line_id + " has a non-positive loss");
      }
    }
  }

  struct Work {
    LineStats stats;
    std::vector<double> residuals;
  };
  std::vector<Work> work;
  for (const LossSeries& s : series) {
    Detrended d = detrend(s.values);
    const double sigma = sample_sd(d.residuals);
    if (!(sigma > 0.0)) {
      throw DegenerateData("line_id " + s.line_id + " has zero residual variance");
    }
    const KpssResult k = kpss_statistic(d.residuals, options.kpss_bandwidth);
    Work w;
    w.stats.line_id = s.line_id;
    w.stats.name = s.name;
    w.stats.pi = options.mean == MeanConvention::RawMean
                     ? mean(s.values)
                     : d.intercept + d.slope * static_cast<double>(s.values.size());
    if (!(w.stats.pi > 0.0)) {
      throw DegenerateData("line_id " + s.line_id + " has a non-positive mean level");
    }
    w.stats.sigma = sigma;
    w.stats.psi = sigma / w.stats.pi;
    w.stats.kpss_statistic = k.statistic;
    w.stats.kpss_pass = k.pass_5pct;
    w.residuals = std::move(d.residuals);
    work.push_back(std::move(w));
  }
  std::sort(work.begin(), work.end(), [](const Work& x, const Work& y) {
    if (x.stats.psi != y.stats.psi) return x.stats.psi > y.stats.psi;
    return x.stats.line_id < y.stats.line_id;
  });

  ScreenReport report;
  for (const Work& w : work) report.lines.push_back(w.stats);
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (std::size_t j = i + 1; j < work.size(); ++j) {
      // Descending psi: j is the safer line.
      PairCell c;
      c.line_a = j;
      c.line_b = i;
      c.rho = pearson(work[i].residuals, work[j].residuals);
      c.b = std::max(1.0, work[i].stats.psi / work[j].stats.psi);
      c.b_rho = c.b * c.rho;
      c.region_exists = c.b_rho < 1.0;
      report.pairs.push_back(c);
    }
  }
  return report;
}

RegionCurve region_curve(const LinePair& pair, const RiskSpec& risk, int grid) {
  RegionCurve curve;
  for (double n : proportion_grid(grid)) {
    curve.points.push_back({n, 1.0 + joint_loading(pair, risk, n)});
  }
  curve.premium_a = 1.0 + standalone_loading(pair.line_a(), risk);
  curve.premium_b = 1.0 + standalone_loading(pair.line_b(), risk);
  if (pair.b() > 1.0 && pair.has_competitiveness_region()) {
    curve.n_ct = critical_threshold(pair);
  }
  return curve;
}

RegionCurve region_curve(const ScreenReport& report, const PairCell& cell, const RiskSpec& risk,
                         int grid) {
  const LineStats& a = report.lines.at(cell.line_a);
  const LineStats& b = report.lines.at(cell.line_b);
  const LinePair pair(BusinessLine(a.line_id, a.pi, a.sigma), BusinessLine(b.line_id, b.pi, b.sigma),
                      cell.rho);
  return region_curve(pair, risk, grid);
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "text") return ReportFormat::Text;
  throw DomainError("format must be csv or text");
}

std::string render_report(const ScreenReport& report, ReportFormat format) {
  return format == ReportFormat::Csv ? render_csv(report) : render_text(report);
}

std::vector<LineStats> parse_report_lines(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string text;
  std::size_t line_no = 0;
  bool in_block = false;
  bool header_done = false;
  std::vector<LineStats> lines;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text == "[lines]") {
      in_block = true;
      continue;
    }
    if (!in_block) continue;
    if (text.empty() || text.front() == '[') break;
    const std::vector<std::string> cells = detail::split_csv_line(text, line_no);
    if (!header_done) {
      header_done = true;
      continue;
    }
    if (cells.size() != 7) throw MalformedRow("expected 7 columns in the lines block", line_no, 1);
    LineStats l;
    l.line_id = cells[0];
    l.name = cells[1];
    l.pi = detail::parse_double(cells[2], line_no, 3);
    l.sigma = detail::parse_double(cells[3], line_no, 4);
    l.psi = detail::parse_double(cells[4], line_no, 5);
    l.kpss_statistic = detail::parse_double(cells[5], line_no, 6);
    if (cells[6] != "true" && cells[6] != "false") {
      throw MalformedRow("kpss_pass must be true or false", line_no, 7);
    }
    l.kpss_pass = cells[6] == "true";
    lines.push_back(std::move(l));
  }
  if (!in_block) throw MalformedRow("no [lines] block found", line_no, 1);
  return lines;
}

}  // namespace jointprice
