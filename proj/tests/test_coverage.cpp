#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "lne/coverage.hpp"
#include "lne/critical_values.hpp"
#include "lne/truth.hpp"

using lne::CoverageCell;
using lne::CoverageReport;
using lne::CriticalValueTable;
using lne::ExperimentConfig;
using lne::ModelType;
using lne::SigmaHandling;
using lne::Target;

namespace {

ExperimentConfig quick_regression() {
  ExperimentConfig config;
  config.model = ModelType::convex_regression;
  config.regression_truth = lne::ConvexTruth::quadratic(12.0, 0.5);
  config.x0 = 0.5;
  config.targets = {Target::value};
  config.n_grid = {100};
  config.replications = 60;
  config.level = 0.95;
  config.seed = 7;
  config.sigma = 1.0;
  config.workers = 1;
  return config;
}

const CoverageCell& find_cell(const CoverageReport& report, std::size_t n, Target target) {
  for (const CoverageCell& cell : report.cells) {
    if (cell.n == n && cell.target == target) return cell;
  }
  throw std::logic_error("cell not found");
}

}  // namespace

TEST_CASE("model and sigma handling names round-trip") {
  CHECK(lne::model_from_string("convex-regression") == ModelType::convex_regression);
  CHECK(lne::model_from_string("log-concave") == ModelType::log_concave_density);
  CHECK(lne::model_from_string("log-concave-density") == ModelType::log_concave_density);
  CHECK(lne::model_from_string("convex-density") == ModelType::convex_density);
  CHECK(lne::to_string(ModelType::convex_regression) == "convex-regression");
  CHECK(lne::to_string(ModelType::log_concave_density) == "log-concave");
  CHECK_THROWS_AS(lne::model_from_string("isotonic"), std::invalid_argument);
  CHECK(lne::sigma_handling_from_string("known") == SigmaHandling::known);
  CHECK(lne::sigma_handling_from_string("estimated") == SigmaHandling::estimated);
  CHECK(lne::to_string(SigmaHandling::estimated) == "estimated");
  CHECK_THROWS_AS(lne::sigma_handling_from_string("plugin"), std::invalid_argument);
}

TEST_CASE("experiment config validation") {
  CHECK_NOTHROW(ExperimentConfig{}.validate());

  ExperimentConfig config = quick_regression();
  config.n_grid = {};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.n_grid = {100, 100};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.n_grid = {9};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.replications = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.level = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.targets = {};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.targets = {Target::value, Target::value};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.x0 = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = quick_regression();
  config.sigma = -1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  // A nonincreasing density has no interior peak to bracket.
  config = quick_regression();
  config.model = ModelType::convex_density;
  config.density_truth = lne::DensityTruth::triangular();
  config.targets = {Target::mode};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  // The decreasing-density model lives on [0, inf); a real-line sampler is out.
  config.targets = {Target::value};
  config.density_truth = lne::DensityTruth::standard_normal();
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.density_truth = lne::DensityTruth::triangular();
  config.x0 = 0.3;
  CHECK_NOTHROW(config.validate());

  // Density models ignore sigma but still need a finite evaluation point.
  config.model = ModelType::log_concave_density;
  config.density_truth = lne::DensityTruth::beta23();
  config.x0 = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("single replication produces a degenerate but well-formed report") {
  ExperimentConfig config = quick_regression();
  config.replications = 1;
  config.n_grid = {50};
  config.targets = {Target::value, Target::derivative, Target::mode};
  const CoverageReport report = lne::run_coverage(config, CriticalValueTable::builtin());

  REQUIRE(report.cells.size() == 3);
  for (const CoverageCell& cell : report.cells) {
    CHECK(cell.n == 50);
    CHECK(cell.replications == 1);
    CHECK(cell.completed == 1);
    CHECK(cell.failures == 0);
    CHECK(cell.certificate_failures == 0);
    const bool binary = cell.coverage == 0.0 || cell.coverage == 1.0;
    CHECK(binary);
    CHECK(cell.se == 0.0);
    // A single length is every quantile of itself.
    CHECK(cell.len_q25 == cell.len_q50);
    CHECK(cell.len_q50 == cell.len_q75);
    CHECK(cell.len_q50 > 0.0);
  }
  CHECK(report.cells[0].target == Target::value);
  CHECK(report.cells[1].target == Target::derivative);
  CHECK(report.cells[2].target == Target::mode);
}

TEST_CASE("cells are ordered sample-size major then by target") {
  ExperimentConfig config = quick_regression();
  config.replications = 8;
  config.n_grid = {50, 100};
  config.targets = {Target::mode, Target::value};
  const CoverageReport report = lne::run_coverage(config, CriticalValueTable::builtin());
  REQUIRE(report.cells.size() == 4);
  CHECK(report.cells[0].n == 50);
  CHECK(report.cells[0].target == Target::mode);
  CHECK(report.cells[1].n == 50);
  CHECK(report.cells[1].target == Target::value);
  CHECK(report.cells[2].n == 100);
  CHECK(report.cells[2].target == Target::mode);
  CHECK(report.cells[3].n == 100);
  CHECK(report.cells[3].target == Target::value);
}

TEST_CASE("regression coverage lands near the nominal level and lengths shrink") {
  ExperimentConfig config = quick_regression();
  config.replications = 100;
  config.n_grid = {100, 400};
  config.targets = {Target::value, Target::derivative, Target::mode};
  config.workers = 0;
  const CoverageReport report = lne::run_coverage(config, CriticalValueTable::builtin());

  for (const CoverageCell& cell : report.cells) {
    CHECK(cell.completed == 100);
    // Loose sanity gate; the calibrated-coverage bands live in the
    // acceptance suite with far more replications.
    CHECK(cell.coverage >= 0.80);
    CHECK(cell.coverage <= 1.0);
    CHECK(cell.len_q25 <= cell.len_q50);
    CHECK(cell.len_q50 <= cell.len_q75);
    CHECK(std::isfinite(cell.oracle_len));
    CHECK(cell.oracle_len > 0.0);
  }
  for (Target t : config.targets) {
    CHECK(find_cell(report, 400, t).len_q50 < find_cell(report, 100, t).len_q50);
  }
}

TEST_CASE("raising the level widens intervals and cannot lower coverage") {
  // Same seed => identical replication datasets, and nested critical values
  // make each interval of the higher level contain its lower-level sibling.
  ExperimentConfig config = quick_regression();
  config.targets = {Target::value, Target::mode};
  config.level = 0.80;
  const CoverageReport loose = lne::run_coverage(config, CriticalValueTable::builtin());
  config.level = 0.95;
  const CoverageReport tight = lne::run_coverage(config, CriticalValueTable::builtin());

  REQUIRE(loose.cells.size() == tight.cells.size());
  for (std::size_t i = 0; i < loose.cells.size(); ++i) {
    CHECK(tight.cells[i].coverage >= loose.cells[i].coverage);
    CHECK(tight.cells[i].len_q50 >= loose.cells[i].len_q50);
  }
}

TEST_CASE("reports are deterministic and worker-count invariant") {
  ExperimentConfig config = quick_regression();
  config.replications = 40;
  config.n_grid = {100, 200};
  config.targets = {Target::value, Target::mode};
  config.workers = 1;
  const CoverageReport serial = lne::run_coverage(config, CriticalValueTable::builtin());
  config.workers = 3;
  const CoverageReport threaded = lne::run_coverage(config, CriticalValueTable::builtin());
  const CoverageReport again = lne::run_coverage(config, CriticalValueTable::builtin());

  REQUIRE(serial.cells.size() == threaded.cells.size());
  REQUIRE(serial.cells.size() == again.cells.size());
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    for (const CoverageReport* other : {&threaded, &again}) {
      const CoverageCell& a = serial.cells[i];
      const CoverageCell& b = other->cells[i];
      CHECK(a.completed == b.completed);
      CHECK(a.coverage == b.coverage);
      CHECK(a.len_q25 == b.len_q25);
      CHECK(a.len_q50 == b.len_q50);
      CHECK(a.len_q75 == b.len_q75);
      CHECK(a.failures == b.failures);
      CHECK(a.certificate_failures == b.certificate_failures);
    }
  }
}

TEST_CASE("estimated-sigma and random-design variants complete") {
  ExperimentConfig config = quick_regression();
  config.n_grid = {150};
  config.sigma_handling = SigmaHandling::estimated;
  const CoverageReport estimated = lne::run_coverage(config, CriticalValueTable::builtin());
  CHECK(estimated.cells[0].completed == 60);
  CHECK(estimated.cells[0].coverage >= 0.7);

  config.sigma_handling = SigmaHandling::known;
  config.design = lne::DesignType::random;
  const CoverageReport random = lne::run_coverage(config, CriticalValueTable::builtin());
  CHECK(random.cells[0].completed == 60);
  CHECK(random.cells[0].coverage >= 0.7);
}

TEST_CASE("log-concave density experiment covers all three targets") {
  ExperimentConfig config;
  config.model = ModelType::log_concave_density;
  config.density_truth = lne::DensityTruth::beta23();
  config.x0 = 0.5;
  config.targets = {Target::value, Target::derivative, Target::mode};
  config.n_grid = {80};
  config.replications = 101;
  config.level = 0.90;
  config.seed = 5;
  config.workers = 0;
  const CoverageReport report = lne::run_coverage(config, CriticalValueTable::builtin());

  REQUIRE(report.cells.size() == 3);
  for (const CoverageCell& cell : report.cells) {
    CHECK(cell.completed + cell.failures + cell.certificate_failures == 101);
    CHECK(cell.coverage >= 0.6);
    CHECK(cell.len_q50 > 0.0);
    CHECK(std::isfinite(cell.oracle_len));
    CHECK(cell.oracle_len > 0.0);
  }
}

TEST_CASE("decreasing-density experiment runs and reports no oracle for flat truths") {
  ExperimentConfig config;
  config.model = ModelType::convex_density;
  config.density_truth = lne::DensityTruth::triangular();
  config.x0 = 0.3;
  config.targets = {Target::value, Target::derivative};
  config.n_grid = {80};
  config.replications = 101;
  config.level = 0.90;
  config.seed = 9;
  config.workers = 0;
  const CoverageReport report = lne::run_coverage(config, CriticalValueTable::builtin());

  REQUIRE(report.cells.size() == 2);
  for (const CoverageCell& cell : report.cells) {
    CHECK(cell.completed + cell.failures + cell.certificate_failures == 101);
    CHECK(cell.coverage >= 0.5);
    CHECK(cell.len_q50 > 0.0);
    // The triangular pdf has zero curvature, so no oracle benchmark exists.
    CHECK_FALSE(std::isfinite(cell.oracle_len));
  }
}

TEST_CASE("an experiment that cannot build intervals aborts loudly") {
  // x0 far outside the sampled support makes every replication unusable,
  // which trips the >1% exclusion gate instead of reporting junk.
  ExperimentConfig config;
  config.model = ModelType::convex_density;
  config.density_truth = lne::DensityTruth::beta23();
  config.x0 = 50.0;
  config.targets = {Target::value};
  config.n_grid = {30};
  config.replications = 5;
  config.workers = 1;
  CHECK_THROWS_AS(lne::run_coverage(config, CriticalValueTable::builtin()),
                  std::runtime_error);
}

TEST_CASE("oracle interval lengths match the plug-in limit formulas") {
  const CriticalValueTable& table = CriticalValueTable::builtin();
  ExperimentConfig config = quick_regression();

  // Quadratic 12(x-1/2)^2 has f'' = 24 everywhere, so every curvature
  // constant collapses to 1 and only the rate and quantile remain.
  const double n = 100.0;
  CHECK(lne::oracle_ci_length(config, 100, 0.05, table, Target::value) ==
        doctest::Approx(2.0 * 2.58 * std::pow(n, -0.4)).epsilon(1e-12));
  CHECK(lne::oracle_ci_length(config, 100, 0.05, table, Target::derivative) ==
        doctest::Approx(2.0 * 11.14 * std::pow(n, -0.2)).epsilon(1e-12));
  CHECK(lne::oracle_ci_length(config, 100, 0.05, table, Target::mode) ==
        doctest::Approx(2.0 * 0.46 * std::pow(n, -0.2)).epsilon(1e-12));

  // Doubling sigma rescales value lengths by (n / sigma^2)^{-2/5}.
  config.sigma = 2.0;
  CHECK(lne::oracle_ci_length(config, 100, 0.05, table, Target::value) ==
        doctest::Approx(2.0 * 2.58 * std::pow(n / 4.0, -0.4)).epsilon(1e-12));
  config.sigma = 0.0;
  CHECK_FALSE(std::isfinite(lne::oracle_ci_length(config, 100, 0.05, table, Target::value)));

  // Beta(2,3) log-concave: f(1/2) = 3/2, |phi''(1/2)| = 12, and at the mode
  // 1/3: f = 16/9 with f'' = -24.
  ExperimentConfig density;
  density.model = ModelType::log_concave_density;
  density.density_truth = lne::DensityTruth::beta23();
  density.x0 = 0.5;
  CHECK(lne::oracle_ci_length(density, 100, 0.05, table, Target::value) ==
        doctest::Approx(2.0 * std::pow(1.5 * 1.5 * 1.5 * 12.0 / 24.0, 0.2) *
                        std::pow(n, -0.4) * 2.58)
            .epsilon(1e-12));
  CHECK(lne::oracle_ci_length(density, 100, 0.05, table, Target::derivative) ==
        doctest::Approx(2.0 *
                        std::pow(std::pow(1.5, 4.0) * std::pow(12.0, 3.0) /
                                     std::pow(24.0, 3.0),
                                 0.2) *
                        std::pow(n, -0.2) * 11.14)
            .epsilon(1e-12));
  CHECK(lne::oracle_ci_length(density, 100, 0.05, table, Target::mode) ==
        doctest::Approx(2.0 * std::pow(576.0 * (16.0 / 9.0) / 576.0, 0.2) *
                        std::pow(n, -0.2) * 0.46)
            .epsilon(1e-12));

  // A quantile grid that cannot serve the requested delta yields no oracle.
  CHECK_FALSE(
      std::isfinite(lne::oracle_ci_length(density, 100, 0.005, table, Target::value)));
}

TEST_CASE("length rate check recovers synthetic shrinkage exponents") {
  CoverageReport report;
  report.config.targets = {Target::value, Target::derivative};
  for (std::size_t n : {100, 1000, 10000}) {
    CoverageCell value_cell;
    value_cell.n = n;
    value_cell.target = Target::value;
    value_cell.len_q50 = 3.7 * std::pow(static_cast<double>(n), -0.4);
    report.cells.push_back(value_cell);
    CoverageCell deriv_cell;
    deriv_cell.n = n;
    deriv_cell.target = Target::derivative;
    deriv_cell.len_q50 = 0.25;  // flat in n
    report.cells.push_back(deriv_cell);
  }

  CHECK(lne::length_rate_check(report, Target::value) ==
        doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(lne::length_rate_check(report, Target::derivative) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // No mode cells at all.
  CHECK_THROWS_AS(lne::length_rate_check(report, Target::mode), std::invalid_argument);

  report.cells.resize(2);  // only one n left for the value target
  CHECK_THROWS_AS(lne::length_rate_check(report, Target::value), std::invalid_argument);

  report.cells[0].len_q50 = 0.0;
  CHECK_THROWS_AS(lne::length_rate_check(report, Target::value), std::invalid_argument);
}

TEST_CASE("coverage csv is stable text") {
  CoverageReport report;
  report.config = quick_regression();
  report.config.level = 0.9;
  CoverageCell cell;
  cell.n = 100;
  cell.target = Target::value;
  cell.replications = 7;
  cell.completed = 4;
  cell.coverage = 0.5;
  cell.se = 0.25;
  cell.len_q25 = 0.25;
  cell.len_q50 = 0.5;
  cell.len_q75 = 1.0;
  cell.oracle_len = std::numeric_limits<double>::quiet_NaN();
  cell.failures = 1;
  cell.certificate_failures = 2;
  report.cells.push_back(cell);

  std::ostringstream out;
  lne::write_coverage_csv(out, report);
  CHECK(out.str() ==
        "model,target,n,R,level,coverage,se,len_q25,len_q50,len_q75,oracle_len,failures\n"
        "convex-regression,value,100,7,0.9,0.5,0.25,0.25,0.5,1,nan,3\n");
}

TEST_CASE("coverage json echoes the experiment and its cells") {
  ExperimentConfig config = quick_regression();
  config.replications = 12;
  config.n_grid = {50};
  config.targets = {Target::value, Target::mode};
  const CoverageReport report = lne::run_coverage(config, CriticalValueTable::builtin());
  const nlohmann::json j = lne::coverage_to_json(report);

  CHECK(j.at("model") == "convex-regression");
  CHECK(j.at("truth") == "quadratic(12,0.5)");
  CHECK(j.at("x0") == 0.5);
  CHECK(j.at("level") == 0.95);
  CHECK(j.at("seed") == 7);
  CHECK(j.at("design") == "fixed");
  CHECK(j.at("sigma_handling") == "known");
  CHECK(j.at("n_grid") == nlohmann::json::array({50}));
  CHECK(j.at("targets") == nlohmann::json::array({"value", "mode"}));
  REQUIRE(j.at("cells").size() == 2);
  const nlohmann::json& first = j.at("cells")[0];
  CHECK(first.at("n") == 50);
  CHECK(first.at("target") == "value");
  CHECK(first.at("replications") == 12);
  CHECK(first.at("completed") == 12);
  CHECK(first.at("certificate_failures") == 0);
  CHECK(first.at("oracle_len").is_number());
  // The mode cell has a finite oracle too for this quadratic truth.
  CHECK(j.at("cells")[1].at("oracle_len").is_number());
}
