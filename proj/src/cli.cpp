#include "jointprice/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>

#include "csv.hpp"
#include "jointprice/error.hpp"
#include "jointprice/format.hpp"
#include "jointprice/market.hpp"
#include "jointprice/mortality.hpp"
#include "jointprice/pricing.hpp"
#include "jointprice/screen.hpp"

namespace jointprice::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kCommands{"region", "decide", "sweep", "simulate", "screen"};
const char* const kPresetReactions = "0.5:0.5,3:3,0.5:3,3:0.5";

struct Options {
  // shared
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  double zeta = 0.5;
  double gamma = 1.686;
  int grid = 0;
  std::string demand_model = "linear";
  std::optional<double> calibrate_var;
  std::string format = "csv";

  // pair statistics
  std::string stats;
  std::optional<double> pi_a, sigma_a, pi_b, sigma_b, rho;
  double scale_a = 1.0;
  double scale_b = 1.0;

  // market
  int insurers_a = 10;
  int insurers_b = 10;
  std::optional<double> q_a, q_b;
  std::optional<double> demand_a, demand_b, demand_share;
  double total = 1e6;

  // region
  std::optional<double> psi_star;

  // sweep
  std::string reactions = kPresetReactions;
  double w_min = 0.05;
  double w_max = 0.95;

  // simulate
  std::string mortality_a;
  std::string mortality_b;
  int sims = 10000;
  int horizon = 0;
  int annuity_age = 60;
  int annuity_term = 30;
  int assurance_age = 30;
  int assurance_term = 30;
  double benefit_a = 1.0;
  double benefit_b = 1.0;
  double discount = 1.0 / 1.02;
  double drift_z = 2.0;
  bool dump_scenarios = false;

  // screen
  std::string losses;
  std::optional<int> kpss_bandwidth;
  std::string mean_convention = "raw";
};

/// Ordered key/value rows rendered either as "key,value" CSV or "key = value" text.
class Record {
 public:
  void add(std::string key, std::string value) { rows_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_double(value)); }
  void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
  void add(std::string key, int value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
  void add(std::string key, const char* value) { add(std::move(key), std::string(value)); }

  std::string render(ReportFormat format) const {
    std::ostringstream s;
    if (format == ReportFormat::Csv) {
      s << "key,value\n";
      for (const auto& [k, v] : rows_) s << csv_escape(k) << ',' << csv_escape(v) << '\n';
    } else {
      for (const auto& [k, v] : rows_) s << k << " = " << v << '\n';
    }
    return s.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

std::string extension(ReportFormat format) { return format == ReportFormat::Csv ? ".csv" : ".txt"; }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot write " + path.string());
  f << content;
  if (!f) throw DomainError("failed writing " + path.string());
}

fs::path prepare_out(const Options& o) {
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DomainError("cannot create output directory " + o.out_dir);
  }
  return dir;
}

std::string normalise_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return key;
}

/// key=value or key,value lines; '#' starts a comment.
std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path.string());
  std::map<std::string, std::string> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty() || line == "key,value") continue;
    auto sep = line.find('=');
    if (sep == std::string::npos) sep = line.find(',');
    if (sep == std::string::npos) {
      throw MalformedRow(path.string() + ": expected key=value", line_no, 1);
    }
    const std::string key = normalise_key(detail::trim(line.substr(0, sep)));
    std::string value = detail::trim(line.substr(sep + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw MalformedRow(path.string() + ": empty key", line_no, 1);
    values[key] = value;
  }
  return values;
}

/// Inserts "--key value" tokens from --config ahead of the command-line
/// options so that explicit flags, parsed later, take precedence. Keys that
/// belong to another command are skipped, so one file can serve several
/// commands; keys no command knows are rejected.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    }
  }
  if (!config) return args;
  if (!fs::is_regular_file(*config)) {
    throw DomainError("--config: file not found: " + *config);
  }
  std::map<std::string, std::string> values = read_key_values(*config);

  auto command_pos = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
  });
  if (command_pos == args.end()) {
    auto it = values.find("command");
    if (it == values.end()) return args;
    command_pos = args.insert(args.begin(), it->second);
  }
  values.erase("command");
  values.erase("config");

  const CLI::App* chosen = app.get_subcommand(*command_pos);
  auto known_to = [](const CLI::App* a, const std::string& key) {
    return a->get_option_no_throw("--" + key) != nullptr;
  };
  // Global keys go first and subcommand keys right after the command, so
  // every explicit flag is parsed after its config counterpart.
  std::vector<std::string> global;
  std::vector<std::string> local;
  for (const auto& [key, value] : values) {
    const bool is_global = known_to(&app, key);
    if (!is_global && !known_to(chosen, key)) {
      const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
      const bool elsewhere =
          std::any_of(subs.begin(), subs.end(), [&](const CLI::App* a) { return known_to(a, key); });
      if (!elsewhere) throw DomainError("--config: unknown key '" + key + "'");
      continue;
    }
    if (value == "false") continue;
    std::vector<std::string>& target = is_global ? global : local;
    target.push_back("--" + key);
    if (value != "true") target.push_back(value);
  }
  args.insert(command_pos + 1, local.begin(), local.end());
  args.insert(args.begin(), global.begin(), global.end());
  return args;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    return detail::parse_double(text, 0, 0);
  } catch (const MalformedRow&) {
    throw DomainError(what + ": not a number: " + text);
  }
}

LinePair build_pair(const Options& o) {
  std::optional<double> pi_a = o.pi_a, sigma_a = o.sigma_a, pi_b = o.pi_b, sigma_b = o.sigma_b,
                        rho = o.rho;
  if (!o.stats.empty()) {
    const auto values = read_key_values(o.stats);
    auto fill = [&](std::optional<double>& slot, const char* key) {
      auto it = values.find(key);
      if (!slot && it != values.end()) slot = parse_number(it->second, key);
    };
    fill(pi_a, "pi-a");
    fill(sigma_a, "sigma-a");
    fill(pi_b, "pi-b");
    fill(sigma_b, "sigma-b");
    fill(rho, "rho");
  }
  std::string missing;
  if (!pi_a) missing += " --pi-a";
  if (!sigma_a) missing += " --sigma-a";
  if (!pi_b) missing += " --pi-b";
  if (!sigma_b) missing += " --sigma-b";
  if (!rho) missing += " --rho";
  if (!missing.empty()) {
    throw DomainError("pair statistics missing:" + missing + " (give them inline or via --stats)");
  }
  const BusinessLine a = BusinessLine("A", *pi_a, *sigma_a).scaled(o.scale_a);
  const BusinessLine b = BusinessLine("B", *pi_b, *sigma_b).scaled(o.scale_b);
  return LinePair(a, b, *rho);
}

void describe_pair(Record& r, const LinePair& pair, const RiskSpec& risk) {
  r.add("line_a", pair.line_a().label());
  r.add("line_b", pair.line_b().label());
  r.add("swapped", pair.swapped());
  r.add("pi_a", pair.line_a().pi());
  r.add("sigma_a", pair.line_a().sigma());
  r.add("pi_b", pair.line_b().pi());
  r.add("sigma_b", pair.line_b().sigma());
  r.add("rho", pair.rho());
  r.add("zeta", risk.zeta());
  r.add("gamma", risk.gamma());
  r.add("b", pair.b());
  r.add("b_rho", pair.b() * pair.rho());
  r.add("lambda1", pair.lambda1());
  r.add("lambda2", pair.lambda2());
}

void describe_region(Record& r, const CompetitivenessReport& region) {
  r.add("exists", region.exists);
  r.add("psi_a", region.psi_a);
  r.add("psi_b", region.psi_b);
  r.add("n_min", region.n_min);
  r.add("psi_min", region.psi_min);
  r.add("n_ct", region.n_ct ? format_double(*region.n_ct) : std::string("NA"));
}

std::string region_csv(const LinePair& pair, const RiskSpec& risk, int grid,
                       const std::vector<VarLoadingPoint>* var_curve) {
  const double psi_a = standalone_loading(pair.line_a(), risk);
  const double psi_b = standalone_loading(pair.line_b(), risk);
  std::ostringstream s;
  s << "n,psi_joint,psi_a_ref,psi_b_ref" << (var_curve ? ",psi_var" : "") << '\n';
  const std::vector<double> ns = proportion_grid(grid);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    s << format_double(ns[i]) << ',' << format_double(joint_loading(pair, risk, ns[i])) << ','
      << format_double(psi_a) << ',' << format_double(psi_b);
    if (var_curve) s << ',' << format_double((*var_curve)[i].psi_var);
    s << '\n';
  }
  return s.str();
}

int command_grid(const Options& o, int fallback) { return o.grid > 0 ? o.grid : fallback; }

int cmd_region(const Options& o, std::ostream& out) {
  const ReportFormat format = parse_report_format(o.format);
  const LinePair pair = build_pair(o);
  const RiskSpec risk(o.zeta, o.gamma);
  const int grid = command_grid(o, 1001);
  if (grid < 2) throw DomainError("--grid must be at least 2 for the region curve");
  const CompetitivenessReport region = competitiveness_region(pair, risk);

  Record summary;
  describe_pair(summary, pair, risk);
  describe_region(summary, region);
  if (o.psi_star) {
    const MonitoringInterval interval = monitoring_interval(pair, risk, *o.psi_star);
    summary.add("psi_star", *o.psi_star);
    summary.add("n_lower", interval.n_lower);
    summary.add("n_upper", interval.n_upper);
    summary.add("interval_length", interval.length());
  }
  const std::string curve = region_csv(pair, risk, grid, nullptr);

  const fs::path dir = prepare_out(o);
  write_file(dir / "region_curve.csv", curve);
  write_file(dir / ("region_summary" + extension(format)), summary.render(format));
  out << summary.render(ReportFormat::Text);
  return kExitOk;
}

MarketSpec build_market(const Options& o, const LinePair& pair, double q_a, double q_b) {
  double da = 0.0;
  double db = 0.0;
  if (o.demand_a || o.demand_b) {
    if (!o.demand_a || !o.demand_b) throw DomainError("give both --demand-a and --demand-b");
    if (o.demand_share) throw DomainError("--demand-share conflicts with --demand-a/--demand-b");
    da = *o.demand_a;
    db = *o.demand_b;
  } else {
    if (!o.demand_share) {
      throw DomainError("market demand missing: give --demand-share (with --total) or --demand-a/--demand-b");
    }
    const double w = *o.demand_share;
    if (!(w > 0.0 && w < 1.0)) throw DomainError("--demand-share must lie in (0, 1)");
    da = (1.0 - w) * o.total;
    db = w * o.total;
  }
  const MarketSpec market(da, db, o.insurers_a, o.insurers_b, q_a, q_b);
  return pair.swapped() ? market.swapped() : market;
}

void describe_decision(Record& r, const std::string& prefix, const PricingDecision& d) {
  r.add(prefix + "_verdict", std::string(to_string(d.verdict)));
  r.add(prefix + "_regime", std::string(to_string(d.regime)));
  for (const ConditionCheck& c : d.conditions_checked) {
    r.add(prefix + "_check", std::string(c.satisfied ? "satisfied: " : "violated: ") + c.name);
  }
  r.add(prefix + "_advisory_d_ptf",
        d.advisory_d_ptf ? format_double(*d.advisory_d_ptf) : std::string("NA"));
}

int cmd_decide(const Options& o, std::ostream& out) {
  const ReportFormat format = parse_report_format(o.format);
  if (!o.q_a || !o.q_b) throw DomainError("decide needs --q-a and --q-b");
  const LinePair pair = build_pair(o);
  const RiskSpec risk(o.zeta, o.gamma);
  const DemandModel model = parse_demand_model(o.demand_model);
  const MarketSpec market = build_market(o, pair, *o.q_a, *o.q_b);

  const PricingDecision sufficient = decide_sufficient(pair, risk, market);
  const PricingDecision banded = decide_banded(pair, risk, market);
  const EquilibriumResult eq = solve_equilibrium(pair, risk, market, model);
  const double d_ptf = collected_premium_difference(pair, risk, market, eq);
  const double base = standalone_premium_total(pair, risk, market);

  Record r;
  describe_pair(r, pair, risk);
  r.add("demand_a", market.demand_a());
  r.add("demand_b", market.demand_b());
  r.add("insurers_a", market.insurers_a());
  r.add("insurers_b", market.insurers_b());
  r.add("q_a", market.reaction_a());
  r.add("q_b", market.reaction_b());
  r.add("w_d", market.demand_share());
  r.add("eta", sufficient.eta);
  r.add("w_ct", sufficient.w_ct);
  describe_decision(r, "sufficient", sufficient);
  describe_decision(r, "banded", banded);
  r.add("demand_model", std::string(to_string(model)));
  r.add("psi_star", eq.psi_star);
  r.add("n_star", eq.n_star);
  r.add("count_a", eq.count_a);
  r.add("count_b", eq.count_b);
  r.add("converged", eq.converged);
  r.add("iterations", eq.iterations);
  r.add("method", std::string(eq.method == SolveMethod::FixedPoint ? "fixed-point" : "bisection"));
  r.add("multiple_roots", eq.multiple_roots);
  r.add("demand_clamped", eq.demand_clamped);
  r.add("d_ptf", d_ptf);
  r.add("relative_d_ptf", d_ptf / base);
  r.add("d_ptf_linear_form", premium_difference(pair, risk, market, eq.psi_star));

  const fs::path dir = prepare_out(o);
  write_file(dir / ("decision" + extension(format)), r.render(format));
  out << "sufficient conditions: " << to_string(sufficient.verdict) << '\n'
      << "banded conditions: " << to_string(banded.verdict) << '\n'
      << "psi_star = " << format_double(eq.psi_star) << ", relative D_ptf = "
      << format_double(d_ptf / base) << '\n';
  return kExitOk;
}

std::pair<double, double> parse_reaction_pair(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw DomainError("reaction pair must look like qA:qB, got " + text);
  return {parse_number(text.substr(0, colon), "q_a"), parse_number(text.substr(colon + 1), "q_b")};
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const LinePair pair = build_pair(o);
  const RiskSpec risk(o.zeta, o.gamma);
  const DemandModel model = parse_demand_model(o.demand_model);
  const int grid = command_grid(o, 19);
  if (!(o.w_min > 0.0 && o.w_max < 1.0 && o.w_min <= o.w_max)) {
    throw DomainError("demand-share range must satisfy 0 < w-min <= w-max < 1");
  }
  std::vector<double> shares;
  if (grid == 1) {
    shares.push_back(0.5 * (o.w_min + o.w_max));
  } else {
    for (int i = 0; i < grid; ++i) shares.push_back(o.w_min + (o.w_max - o.w_min) * i / (grid - 1));
    shares.back() = o.w_max;
  }
  std::vector<std::string> reactions;
  {
    std::string item;
    std::istringstream items(o.reactions);
    while (std::getline(items, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) reactions.push_back(item);
    }
  }
  if (reactions.empty()) throw DomainError("--q-pairs needs at least one qA:qB pair");

  std::ostringstream csv;
  std::ostringstream thresholds;
  csv << "q_a,q_b,w_d,psi_star,rel_d_ptf,status\n";
  thresholds << "q_a,q_b,w_ct\n";
  std::size_t failures = 0;
  for (const std::string& text : reactions) {
    const auto [qa, qb] = parse_reaction_pair(text);
    const double qa_ordered = pair.swapped() ? qb : qa;
    const double qb_ordered = pair.swapped() ? qa : qb;
    const MarketSpec templ(o.total / 2, o.total / 2, pair.swapped() ? o.insurers_b : o.insurers_a,
                           pair.swapped() ? o.insurers_a : o.insurers_b, qa_ordered, qb_ordered);
    const std::vector<SweepPoint> points = sweep_demand_share(pair, risk, templ, model, shares, o.total);
    for (const SweepPoint& p : points) {
      csv << format_double(qa) << ',' << format_double(qb) << ',' << format_double(p.demand_share)
          << ',' << (p.ok ? format_double(p.psi_star) : "NA") << ','
          << (p.ok ? format_double(p.relative_d_ptf) : "NA") << ',' << csv_escape(p.status) << '\n';
      if (!p.ok) ++failures;
    }
    thresholds << format_double(qa) << ',' << format_double(qb) << ',';
    if (pair.has_competitiveness_region()) {
      thresholds << format_double(demand_critical_threshold(pair, risk, templ));
    } else {
      thresholds << "NA";
    }
    thresholds << '\n';
  }
  const fs::path dir = prepare_out(o);
  write_file(dir / "sweep.csv", csv.str());
  write_file(dir / "sweep_thresholds.csv", thresholds.str());
  out << "sweep: " << reactions.size() << " scenario(s) x " << shares.size() << " demand share(s)";
  if (failures) out << ", " << failures << " point(s) failed (see status column)";
  out << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const ReportFormat format = parse_report_format(o.format);
  if (o.sims < 2) throw DomainError("--sims must be at least 2");
  const MortalityDataset data_a = read_mortality_csv(o.mortality_a, "A");
  const MortalityDataset data_b = read_mortality_csv(o.mortality_b, "B");
  FitOptions fit_options;
  fit_options.specific_drift_z = o.drift_z;
  const LiLeeParams params = fit_li_lee(data_a, data_b, fit_options);

  ProductSpec annuity;
  annuity.kind = ProductKind::TermAnnuity;
  annuity.population = Population::A;
  annuity.entry_age = o.annuity_age;
  annuity.term = o.annuity_term;
  annuity.benefit = o.benefit_a;
  annuity.discount_factor = o.discount;
  annuity.validate();
  ProductSpec assurance = annuity;
  assurance.kind = ProductKind::TermAssurance;
  assurance.population = Population::B;
  assurance.entry_age = o.assurance_age;
  assurance.term = o.assurance_term;
  assurance.benefit = o.benefit_b;
  assurance.validate();
  for (const ProductSpec* p : {&annuity, &assurance}) {
    if (p->entry_age < params.first_age || p->entry_age + p->term > params.last_age()) {
      throw DomainError("product ages " + std::to_string(p->entry_age) + ".." +
                        std::to_string(p->entry_age + p->term) + " fall outside fitted ages " +
                        std::to_string(params.first_age) + ".." + std::to_string(params.last_age()));
    }
  }
  const int needed = std::max(annuity.term, assurance.term);
  const int horizon = o.horizon > 0 ? o.horizon : needed;
  if (horizon < needed) throw DomainError("--horizon must cover the longest product term");

  const ScenarioSet scenarios =
      simulate_scenarios(params, horizon, static_cast<std::size_t>(o.sims), o.seed);
  const std::vector<double> va = present_values(scenarios, annuity);
  const std::vector<double> vb = present_values(scenarios, assurance);
  const SimulationSummary s = summarize(va, vb, o.seed);

  const int grid = command_grid(o, 101);
  if (grid < 2) throw DomainError("--grid must be at least 2");
  double gamma = o.gamma;
  std::vector<VarLoadingPoint> var_curve;
  if (o.calibrate_var) {
    gamma = calibrate_gamma(va, vb, o.zeta, *o.calibrate_var, grid);
  }
  const RiskSpec risk(o.zeta, gamma);
  const LinePair pair(BusinessLine("annuity", s.pi_a, s.sigma_a),
                      BusinessLine("assurance", s.pi_b, s.sigma_b), s.rho);
  if (o.calibrate_var) {
    var_curve = pair.swapped() ? var_loading_curve(vb, va, o.zeta, *o.calibrate_var, grid)
                               : var_loading_curve(va, vb, o.zeta, *o.calibrate_var, grid);
  }

  Record r;
  r.add("pi_a", s.pi_a);
  r.add("sigma_a", s.sigma_a);
  r.add("pi_b", s.pi_b);
  r.add("sigma_b", s.sigma_b);
  r.add("rho", s.rho);
  r.add("sample_count", s.sample_count);
  r.add("seed", std::to_string(s.seed));
  r.add("horizon", horizon);
  r.add("discount_factor", o.discount);
  r.add("drift_kappa_a", params.drift(0));
  r.add("drift_kappa_b", params.drift(1));
  r.add("drift_kappa", params.drift(2));
  r.add("specific_drift_zeroed_a", params.specific_drift_zeroed[0]);
  r.add("specific_drift_zeroed_b", params.specific_drift_zeroed[1]);
  r.add("gamma", gamma);
  r.add("gamma_calibrated", o.calibrate_var.has_value());
  if (o.calibrate_var) {
    r.add("var_level", *o.calibrate_var);
    double worst = 0.0;
    for (const VarLoadingPoint& p : var_curve) {
      worst = std::max(worst, std::abs(joint_loading(pair, risk, p.n) - p.psi_var));
    }
    r.add("max_loading_deviation", worst);
  }
  const CompetitivenessReport region = competitiveness_region(pair, risk);
  r.add("swapped", pair.swapped());
  r.add("b_rho", pair.b() * pair.rho());
  describe_region(r, region);

  const fs::path dir = prepare_out(o);
  write_file(dir / ("simulation_summary" + extension(format)), r.render(format));
  write_file(dir / "region_curve.csv",
             region_csv(pair, risk, grid, o.calibrate_var ? &var_curve : nullptr));
  if (o.dump_scenarios) {
    std::ostringstream dump;
    dump << "scenario_id,product,present_value\n";
    for (std::size_t i = 0; i < va.size(); ++i) {
      dump << i << ",annuity," << format_double(va[i]) << '\n';
      dump << i << ",assurance," << format_double(vb[i]) << '\n';
    }
    write_file(dir / "scenarios.csv", dump.str());
  }
  out << r.render(ReportFormat::Text);
  return kExitOk;
}

int cmd_screen(const Options& o, std::ostream& out, std::ostream& err) {
  const ReportFormat format = parse_report_format(o.format);
  ScreenOptions options;
  if (o.mean_convention == "raw") {
    options.mean = MeanConvention::RawMean;
  } else if (o.mean_convention == "trend-end") {
    options.mean = MeanConvention::TrendEnd;
  } else {
    throw DomainError("--mean must be raw or trend-end");
  }
  options.kpss_bandwidth = o.kpss_bandwidth;
  const IngestResult ingest = ingest_losses(fs::path(o.losses));
  for (const std::string& w : ingest.warnings) err << "warning: " << w << '\n';
  for (const std::string& r : ingest.rejected) err << "rejected: " << r << '\n';
  if (ingest.series.size() < 2) {
    throw DomainError("screening needs at least two complete series, found " +
                      std::to_string(ingest.series.size()));
  }
  const ScreenReport report = pairwise_screen(ingest.series, options);

  // Curves use psi = sigma / pi as reported, i.e. zeta * gamma = 1.
  const RiskSpec unit_risk(0.5, 2.0);
  const int grid = command_grid(o, 101);
  if (grid < 2) throw DomainError("--grid must be at least 2");
  std::ostringstream curves;
  curves << "line_a,line_b,n,premium,premium_a_ref,premium_b_ref,n_ct\n";
  for (const PairCell& cell : report.pairs) {
    if (cell.rho >= 1.0) continue;
    const RegionCurve curve = region_curve(report, cell, unit_risk, grid);
    const std::string ids = csv_escape(report.lines[cell.line_a].line_id) + ',' +
                            csv_escape(report.lines[cell.line_b].line_id);
    const std::string n_ct = curve.n_ct ? format_double(*curve.n_ct) : "NA";
    for (const RegionCurvePoint& p : curve.points) {
      curves << ids << ',' << format_double(p.n) << ',' << format_double(p.premium) << ','
             << format_double(curve.premium_a) << ',' << format_double(curve.premium_b) << ','
             << n_ct << '\n';
    }
  }
  const std::string rendered = render_report(report, format);
  const fs::path dir = prepare_out(o);
  write_file(dir / ("screen_report" + extension(format)), rendered);
  write_file(dir / "screen_curves.csv", curves.str());
  out << render_report(report, ReportFormat::Text);
  return kExitOk;
}

void add_pair_options(CLI::App* sub, Options& o) {
  sub->add_option("--stats", o.stats, "key=value file with pi_a, sigma_a, pi_b, sigma_b, rho")
      ->check(CLI::ExistingFile);
  sub->add_option("--pi-a", o.pi_a, "pure premium of line A");
  sub->add_option("--sigma-a", o.sigma_a, "standard deviation of line A");
  sub->add_option("--pi-b", o.pi_b, "pure premium of line B");
  sub->add_option("--sigma-b", o.sigma_b, "standard deviation of line B");
  sub->add_option("--rho", o.rho, "correlation of the two lines")->check(CLI::Range(-1.0, 1.0));
  sub->add_option("--scale-a", o.scale_a, "benefit multiplier for line A")->check(CLI::PositiveNumber);
  sub->add_option("--scale-b", o.scale_b, "benefit multiplier for line B")->check(CLI::PositiveNumber);
}

void add_market_options(CLI::App* sub, Options& o) {
  sub->add_option("--insurers-a", o.insurers_a, "providers on line A")->check(CLI::Range(2, 1000000));
  sub->add_option("--insurers-b", o.insurers_b, "providers on line B")->check(CLI::Range(2, 1000000));
  sub->add_option("--total", o.total, "total demand over both lines")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Joint versus stand-alone pricing of two business lines", "jointprice"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--config", o.config, "flat key=value file mirroring the flags");
  app.add_option("--out", o.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();
  app.add_option("--zeta", o.zeta, "risk reduction factor in (0, 1)")->capture_default_str();
  app.add_option("--gamma", o.gamma, "mean-standard-deviation weight")->capture_default_str();
  app.add_option("--grid", o.grid, "grid size (command-specific default)")->check(CLI::Range(1, 100000000));
  app.add_option("--demand-model", o.demand_model, "demand model")
      ->check(CLI::IsMember({"logistic", "linear"}))
      ->capture_default_str();
  app.add_option("--calibrate-var", o.calibrate_var, "calibrate gamma against value-at-risk at LEVEL")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--format", o.format, "report format")
      ->check(CLI::IsMember({"csv", "text"}))
      ->capture_default_str();

  CLI::App* region = app.add_subcommand("region", "joint loading curve and competitiveness region");
  add_pair_options(region, o);
  region->add_option("--psi-star", o.psi_star, "loading whose monitoring interval is reported");

  CLI::App* decide = app.add_subcommand("decide", "joint or separate pricing verdicts");
  add_pair_options(decide, o);
  add_market_options(decide, o);
  decide->add_option("--q-a", o.q_a, "reaction factor on line A")->check(CLI::PositiveNumber);
  decide->add_option("--q-b", o.q_b, "reaction factor on line B")->check(CLI::PositiveNumber);
  decide->add_option("--demand-a", o.demand_a, "total demand on line A")->check(CLI::PositiveNumber);
  decide->add_option("--demand-b", o.demand_b, "total demand on line B")->check(CLI::PositiveNumber);
  decide->add_option("--demand-share", o.demand_share, "share of demand on line B (with --total)");

  CLI::App* sweep = app.add_subcommand("sweep", "relative premium difference over demand shares");
  add_pair_options(sweep, o);
  add_market_options(sweep, o);
  sweep->add_option("--q-pairs", o.reactions, "comma-separated reaction scenarios qA:qB")
      ->capture_default_str();
  sweep->add_option("--w-min", o.w_min, "smallest demand share")->capture_default_str();
  sweep->add_option("--w-max", o.w_max, "largest demand share")->capture_default_str();

  CLI::App* simulate = app.add_subcommand("simulate", "mortality simulation and present values");
  simulate->add_option("--mortality-a", o.mortality_a, "age-by-year rates, annuity population")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--mortality-b", o.mortality_b, "age-by-year rates, assurance population")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--sims", o.sims, "number of scenarios")->capture_default_str();
  simulate->add_option("--horizon", o.horizon, "projection years (default: longest term)");
  simulate->add_option("--annuity-age", o.annuity_age)->capture_default_str();
  simulate->add_option("--annuity-term", o.annuity_term)->capture_default_str();
  simulate->add_option("--assurance-age", o.assurance_age)->capture_default_str();
  simulate->add_option("--assurance-term", o.assurance_term)->capture_default_str();
  simulate->add_option("--benefit-a", o.benefit_a, "annuity benefit")->check(CLI::PositiveNumber);
  simulate->add_option("--benefit-b", o.benefit_b, "death benefit")->check(CLI::PositiveNumber);
  simulate->add_option("--discount", o.discount, "annual discount factor v")->capture_default_str();
  simulate->add_option("--drift-z", o.drift_z, "z-score needed to keep a specific drift")
      ->capture_default_str();
  simulate->add_flag("--dump-scenarios", o.dump_scenarios, "write scenarios.csv");

  CLI::App* screen = app.add_subcommand("screen", "pairwise b rho < 1 screening of loss series");
  screen->add_option("--losses", o.losses, "long-format loss CSV")->required()->check(CLI::ExistingFile);
  screen->add_option("--kpss-bandwidth", o.kpss_bandwidth, "Bartlett bandwidth")->check(CLI::NonNegativeNumber);
  screen->add_option("--mean", o.mean_convention, "pi convention: raw or trend-end")
      ->check(CLI::IsMember({"raw", "trend-end"}))
      ->capture_default_str();

  try {
    std::vector<std::string> args = expand_config(raw_args, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const MalformedRow& e) {
    err << "error: line " << e.line() << ", column " << e.column() << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (region->parsed()) return cmd_region(o, out);
    if (decide->parsed()) return cmd_decide(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (screen->parsed()) return cmd_screen(o, out, err);
  } catch (const MalformedRow& e) {
    err << "error: line " << e.line() << ", column " << e.column() << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const NoConvergence& e) {
    err << "error: " << e.what() << " (last residual " << format_double(e.last_residual()) << ")\n";
    return kExitComputation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.category() == ErrorCategory::Validation ? kExitValidation : kExitComputation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitValidation;
}

}  // namespace jointprice::cli
