#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "jointprice/cli.hpp"
#include "jointprice/error.hpp"
#include "jointprice/market.hpp"
#include "jointprice/mortality.hpp"
#include "jointprice/pricing.hpp"
#include "jointprice/screen.hpp"

namespace py = pybind11;
using namespace jointprice;

namespace {

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Joint versus stand-alone pricing of two insurance business lines";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);

  // pricing
  py::class_<BusinessLine>(m, "BusinessLine")
      .def(py::init<std::string, double, double>(), py::arg("label"), py::arg("pi"), py::arg("sigma"))
      .def_property_readonly("label", &BusinessLine::label)
      .def_property_readonly("pi", &BusinessLine::pi)
      .def_property_readonly("sigma", &BusinessLine::sigma)
      .def_property_readonly("risk_ratio", &BusinessLine::risk_ratio)
      .def("scaled", &BusinessLine::scaled, py::arg("factor"));

  py::class_<RiskSpec>(m, "RiskSpec")
      .def(py::init<double, double>(), py::arg("zeta"), py::arg("gamma"))
      .def_property_readonly("zeta", &RiskSpec::zeta)
      .def_property_readonly("gamma", &RiskSpec::gamma);

  py::class_<LinePair>(m, "LinePair")
      .def(py::init<BusinessLine, BusinessLine, double>(), py::arg("first"), py::arg("second"),
           py::arg("rho"))
      .def_property_readonly("line_a", &LinePair::line_a)
      .def_property_readonly("line_b", &LinePair::line_b)
      .def_property_readonly("rho", &LinePair::rho)
      .def_property_readonly("b", &LinePair::b)
      .def_property_readonly("lambda1", &LinePair::lambda1)
      .def_property_readonly("lambda2", &LinePair::lambda2)
      .def_property_readonly("swapped", &LinePair::swapped)
      .def_property_readonly("has_competitiveness_region", &LinePair::has_competitiveness_region);

  py::class_<CompetitivenessReport>(m, "CompetitivenessReport")
      .def_readonly("exists", &CompetitivenessReport::exists)
      .def_readonly("n_min", &CompetitivenessReport::n_min)
      .def_readonly("psi_min", &CompetitivenessReport::psi_min)
      .def_readonly("psi_a", &CompetitivenessReport::psi_a)
      .def_readonly("psi_b", &CompetitivenessReport::psi_b)
      .def_readonly("psi_max", &CompetitivenessReport::psi_max)
      .def_readonly("n_ct", &CompetitivenessReport::n_ct);

  py::class_<MonitoringInterval>(m, "MonitoringInterval")
      .def_readonly("n_lower", &MonitoringInterval::n_lower)
      .def_readonly("n_upper", &MonitoringInterval::n_upper)
      .def_property_readonly("length", &MonitoringInterval::length);

  m.def("standalone_loading", &standalone_loading, py::arg("line"), py::arg("risk"));
  m.def("joint_loading", &joint_loading, py::arg("pair"), py::arg("risk"), py::arg("n"));
  m.def("competitiveness_region", &competitiveness_region, py::arg("pair"), py::arg("risk"));
  m.def("critical_threshold", &critical_threshold, py::arg("pair"));
  m.def("monitoring_interval", &monitoring_interval, py::arg("pair"), py::arg("risk"),
        py::arg("psi_star"));
  m.def("risk_reduction_gap",
        py::overload_cast<const BusinessLine&, const BusinessLine&, double, const RiskSpec&, double,
                          double>(&risk_reduction_gap),
        py::arg("line_a"), py::arg("line_b"), py::arg("rho"), py::arg("risk"), py::arg("count_a"),
        py::arg("count_b"));

  // market
  py::enum_<DemandModel>(m, "DemandModel")
      .value("Logistic", DemandModel::Logistic)
      .value("Linearized", DemandModel::Linearized);

  py::class_<MarketSpec>(m, "MarketSpec")
      .def(py::init<double, double, int, int, double, double>(), py::arg("demand_a"),
           py::arg("demand_b"), py::arg("insurers_a"), py::arg("insurers_b"), py::arg("reaction_a"),
           py::arg("reaction_b"))
      .def_static("from_share", &MarketSpec::from_share, py::arg("total"), py::arg("demand_share"),
                  py::arg("insurers_a"), py::arg("insurers_b"), py::arg("reaction_a"),
                  py::arg("reaction_b"))
      .def_property_readonly("demand_share", &MarketSpec::demand_share);

  py::class_<EquilibriumResult>(m, "EquilibriumResult")
      .def_readonly("psi_star", &EquilibriumResult::psi_star)
      .def_readonly("n_star", &EquilibriumResult::n_star)
      .def_readonly("count_a", &EquilibriumResult::count_a)
      .def_readonly("count_b", &EquilibriumResult::count_b)
      .def_readonly("converged", &EquilibriumResult::converged)
      .def_readonly("iterations", &EquilibriumResult::iterations)
      .def_readonly("multiple_roots", &EquilibriumResult::multiple_roots);

  m.def(
      "solve_equilibrium",
      [](const LinePair& pair, const RiskSpec& risk, const MarketSpec& market, DemandModel model) {
        return solve_equilibrium(pair, risk, market, model);
      },
      py::arg("pair"), py::arg("risk"), py::arg("market"), py::arg("model") = DemandModel::Linearized);
  m.def("premium_difference", &premium_difference, py::arg("pair"), py::arg("risk"),
        py::arg("market"), py::arg("psi_star"));

  py::class_<PricingDecision>(m, "PricingDecision")
      .def_property_readonly("verdict", [](const PricingDecision& d) { return std::string(to_string(d.verdict)); })
      .def_property_readonly("regime", [](const PricingDecision& d) { return std::string(to_string(d.regime)); })
      .def_property_readonly("conditions_checked",
                             [](const PricingDecision& d) {
                               std::vector<std::pair<std::string, bool>> out;
                               for (const auto& c : d.conditions_checked) out.emplace_back(c.name, c.satisfied);
                               return out;
                             })
      .def_readonly("eta", &PricingDecision::eta)
      .def_readonly("w_ct", &PricingDecision::w_ct)
      .def_readonly("advisory_d_ptf", &PricingDecision::advisory_d_ptf);

  m.def("decide_sufficient", &decide_sufficient, py::arg("pair"), py::arg("risk"), py::arg("market"));
  m.def("decide_banded", &decide_banded, py::arg("pair"), py::arg("risk"), py::arg("market"));

  py::class_<SweepPoint>(m, "SweepPoint")
      .def_readonly("demand_share", &SweepPoint::demand_share)
      .def_readonly("psi_star", &SweepPoint::psi_star)
      .def_readonly("relative_d_ptf", &SweepPoint::relative_d_ptf)
      .def_readonly("ok", &SweepPoint::ok)
      .def_readonly("status", &SweepPoint::status);

  m.def(
      "sweep_demand_share",
      [](const LinePair& pair, const RiskSpec& risk, const MarketSpec& market, DemandModel model,
         const std::vector<double>& grid, double total) {
        return sweep_demand_share(pair, risk, market, model, grid, total);
      },
      py::arg("pair"), py::arg("risk"), py::arg("market"), py::arg("model"), py::arg("grid"),
      py::arg("total"));

  // mortality
  py::enum_<Population>(m, "Population").value("A", Population::A).value("B", Population::B);
  py::enum_<ProductKind>(m, "ProductKind")
      .value("TermAnnuity", ProductKind::TermAnnuity)
      .value("TermAssurance", ProductKind::TermAssurance);

  py::class_<MortalityDataset>(m, "MortalityDataset")
      .def_readonly("population_id", &MortalityDataset::population_id)
      .def_readonly("first_age", &MortalityDataset::first_age)
      .def_readonly("first_year", &MortalityDataset::first_year)
      .def_readonly("central_rates", &MortalityDataset::central_rates);

  py::class_<LiLeeParams>(m, "LiLeeParams")
      .def_readonly("beta_common", &LiLeeParams::beta_common)
      .def_readonly("kappa_common", &LiLeeParams::kappa_common)
      .def_readonly("drift", &LiLeeParams::drift)
      .def_readonly("covariance", &LiLeeParams::covariance)
      .def_readonly("specific_drift_zeroed", &LiLeeParams::specific_drift_zeroed);

  py::class_<ProductSpec>(m, "ProductSpec")
      .def(py::init([](ProductKind kind, Population population, int entry_age, int term,
                       double benefit, double discount_factor) {
             ProductSpec s{kind, population, entry_age, term, benefit, discount_factor};
             s.validate();
             return s;
           }),
           py::arg("kind"), py::arg("population"), py::arg("entry_age"), py::arg("term"),
           py::arg("benefit") = 1.0, py::arg("discount_factor") = 1.0 / 1.02);

  py::class_<ScenarioSet>(m, "ScenarioSet")
      .def("__len__", &ScenarioSet::size)
      .def_property_readonly("horizon", &ScenarioSet::horizon);

  py::class_<SimulationSummary>(m, "SimulationSummary")
      .def_readonly("pi_a", &SimulationSummary::pi_a)
      .def_readonly("sigma_a", &SimulationSummary::sigma_a)
      .def_readonly("pi_b", &SimulationSummary::pi_b)
      .def_readonly("sigma_b", &SimulationSummary::sigma_b)
      .def_readonly("rho", &SimulationSummary::rho)
      .def_readonly("sample_count", &SimulationSummary::sample_count);

  m.def("read_mortality_csv", &read_mortality_csv, py::arg("path"), py::arg("population_id"));
  m.def(
      "fit_li_lee",
      [](const MortalityDataset& a, const MortalityDataset& b) { return fit_li_lee(a, b); },
      py::arg("data_a"), py::arg("data_b"));
  m.def("simulate_scenarios", &simulate_scenarios, py::arg("params"), py::arg("horizon"),
        py::arg("n_sims"), py::arg("seed"));
  m.def("present_values", &present_values, py::arg("scenarios"), py::arg("spec"));
  m.def(
      "summarize",
      [](const std::vector<double>& a, const std::vector<double>& b) { return summarize(a, b); },
      py::arg("values_a"), py::arg("values_b"));
  m.def("empirical_quantile", &empirical_quantile, py::arg("values"), py::arg("level"));
  m.def(
      "calibrate_gamma",
      [](const std::vector<double>& a, const std::vector<double>& b, double zeta, double level,
         int grid) { return calibrate_gamma(a, b, zeta, level, grid); },
      py::arg("values_a"), py::arg("values_b"), py::arg("zeta"), py::arg("var_level"),
      py::arg("n_grid"));

  // screening
  py::class_<LossSeries>(m, "LossSeries")
      .def_readonly("line_id", &LossSeries::line_id)
      .def_readonly("name", &LossSeries::name)
      .def_readonly("periods", &LossSeries::periods)
      .def_readonly("values", &LossSeries::values);

  py::class_<KpssResult>(m, "KpssResult")
      .def_readonly("statistic", &KpssResult::statistic)
      .def_readonly("pass_5pct", &KpssResult::pass_5pct)
      .def_readonly("bandwidth", &KpssResult::bandwidth);

  py::class_<LineStats>(m, "LineStats")
      .def_readonly("line_id", &LineStats::line_id)
      .def_readonly("pi", &LineStats::pi)
      .def_readonly("sigma", &LineStats::sigma)
      .def_readonly("psi", &LineStats::psi)
      .def_readonly("kpss_pass", &LineStats::kpss_pass);

  py::class_<PairCell>(m, "PairCell")
      .def_readonly("line_a", &PairCell::line_a)
      .def_readonly("line_b", &PairCell::line_b)
      .def_readonly("rho", &PairCell::rho)
      .def_readonly("b", &PairCell::b)
      .def_readonly("b_rho", &PairCell::b_rho)
      .def_readonly("region_exists", &PairCell::region_exists);

  py::class_<ScreenReport>(m, "ScreenReport")
      .def_readonly("lines", &ScreenReport::lines)
      .def_readonly("pairs", &ScreenReport::pairs)
      .def_property_readonly("positive_pairs", &ScreenReport::positive_pairs)
      .def_property_readonly("positive_fraction", &ScreenReport::positive_fraction);

  m.def(
      "ingest_losses",
      [](const std::filesystem::path& path) { return ingest_losses(path).series; },
      py::arg("path"));
  m.def(
      "kpss_statistic",
      [](const std::vector<double>& residuals, std::optional<int> bandwidth) {
        return kpss_statistic(residuals, bandwidth);
      },
      py::arg("residuals"), py::arg("bandwidth") = py::none());
  m.def(
      "pairwise_screen",
      [](const std::vector<LossSeries>& series) { return pairwise_screen(series); },
      py::arg("series"));
  m.def(
      "render_report",
      [](const ScreenReport& report, const std::string& format) {
        return render_report(report, parse_report_format(format));
      },
      py::arg("report"), py::arg("format") = "text");

  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}
