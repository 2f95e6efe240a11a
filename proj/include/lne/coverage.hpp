#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lne/confidence.hpp"
#include "lne/critical_values.hpp"
#include "lne/limit_sim.hpp"
#include "lne/truth.hpp"

namespace lne {

enum class ModelType : int { convex_regression, log_concave_density, convex_density };
enum class SigmaHandling : int { known, estimated };

std::string_view to_string(ModelType m);
ModelType model_from_string(std::string_view name);
std::string_view to_string(SigmaHandling s);
SigmaHandling sigma_handling_from_string(std::string_view name);

/// One coverage experiment: fit the model R times per sample size and count
/// how often each interval captures its true local parameter.
struct ExperimentConfig {
  ModelType model = ModelType::convex_regression;
  ConvexTruth regression_truth = ConvexTruth::quadratic(12.0, 0.5);
  DensityTruth density_truth = DensityTruth::beta23();
  double x0 = 0.5;
  std::vector<Target> targets{Target::value};
  std::vector<std::size_t> n_grid{100, 200, 500, 1000, 2000};
  std::size_t replications = 200;
  double level = 0.95;
  std::uint64_t seed = 0;
  DesignType design = DesignType::fixed;       ///< regression only
  SigmaHandling sigma_handling = SigmaHandling::known;  ///< regression only
  double sigma = 1.0;                          ///< regression noise level
  std::size_t workers = 0;
  bool verify_fits = true;

  /// Throws std::invalid_argument on: empty or non-ascending n grid, any
  /// n < 10, replications < 1, level outside (0, 1), empty or duplicated
  /// targets, a mode target for the convex-density model, a sampling truth
  /// with negative support for the convex-density model, bad sigma, or a
  /// regression x0 outside (0, 1).
  void validate() const;
};

/// Aggregates for one (n, target) cell. Replications whose solver failed or
/// whose fit flunked the optimality certificate are excluded from both the
/// numerator and denominator of the coverage estimate and tallied here.
struct CoverageCell {
  std::size_t n = 0;
  Target target = Target::value;
  std::size_t replications = 0;           ///< configured R
  std::size_t completed = 0;              ///< replications that produced an interval
  double coverage = 0.0;
  double se = 0.0;                        ///< sqrt(coverage (1 - coverage) / completed)
  double len_q25 = 0.0;
  double len_q50 = 0.0;
  double len_q75 = 0.0;
  double oracle_len = 0.0;                ///< NaN when no oracle length exists
  std::size_t failures = 0;               ///< solver/domain failures
  std::size_t certificate_failures = 0;   ///< fits rejected by the certificate
};

struct CoverageReport {
  ExperimentConfig config;
  std::vector<CoverageCell> cells;  ///< n-grid-major, then target order
};

/// Runs the experiment. `table` supplies the pivotal critical values;
/// `oracle_table` supplies the curvature-rescaled ones for the oracle-length
/// column (pass CriticalValueTable::builtin() for both to use the published
/// values). Throws std::runtime_error when more than 1% of the replications
/// of any cell are excluded, since that would bias the estimate.
CoverageReport run_coverage(const ExperimentConfig& config, const CriticalValueTable& table,
                            const CriticalValueTable& oracle_table =
                                CriticalValueTable::builtin());

/// Length of the infeasible oracle interval that plugs the true curvature
/// and noise level into the limit law, for benchmarking the pivotal lengths.
/// Returns NaN when the model/target has no oracle (zero curvature) or the
/// oracle table cannot serve the requested delta.
double oracle_ci_length(const ExperimentConfig& config, std::size_t n, double delta,
                        const CriticalValueTable& oracle_table, Target target);

/// Least-squares slope of log(median length) against log(n) across the grid,
/// which estimates the shrinkage exponent of the intervals. Requires at
/// least three n values with positive finite medians for the target.
double length_rate_check(const CoverageReport& report, Target target);

/// Header "model,target,n,R,level,coverage,se,len_q25,len_q50,len_q75,
/// oracle_len,failures"; the failures column folds in certificate failures.
void write_coverage_csv(std::ostream& out, const CoverageReport& report);

nlohmann::json coverage_to_json(const CoverageReport& report);

}  // namespace lne
