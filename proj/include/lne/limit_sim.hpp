#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "lne/convex_lse.hpp"
#include "lne/critical_values.hpp"
#include "lne/rng.hpp"
#include "lne/truth.hpp"

namespace lne {

enum class DesignType : int { fixed, random };

std::string_view to_string(DesignType d);
/// Throws std::invalid_argument on an unknown name.
DesignType design_from_string(std::string_view name);

/// One Monte Carlo run that calibrates the locally normalized error
/// statistics of the convex regression LSE under a known smooth truth.
struct SimulationConfig {
  ConvexTruth f0 = ConvexTruth::quadratic(12.0, 0.5);
  double x0 = 0.5;
  std::size_t n = 1000;            ///< design resolution: x_i = i/n, i = 0..n
  std::size_t replications = 1000;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  DesignType design = DesignType::fixed;
  std::size_t workers = 0;         ///< 0 = default_worker_count()
  bool verify_fits = true;         ///< run the optimality certificate per fit

  /// Throws std::invalid_argument when: n < 10, replications < 1, sigma
  /// negative or non-finite, or x0 outside (0, 1).
  void validate() const;

  /// True when x0 lands on a fixed-design grid point i/n (within rounding).
  /// Random designs always report true; off-grid fixed designs deserve a
  /// warning because the anti-mode bracket then straddles x0 asymmetrically.
  bool x0_on_design_grid() const;
};

/// Localized error statistics of one fitted replication. The t-columns are
/// the pivotal statistics; the raw columns are the unnormalized errors the
/// oracle rescaling starts from.
struct LNESample {
  double t0 = 0.0;        ///< sqrt(n (v - u)) (fhat(x0) - f0(x0))
  double t1 = 0.0;        ///< sqrt(n (v - u)^3) (fhat'(x0) - f0'(x0))
  double tm = 0.0;        ///< (mhat - m0) / (v_m - u_m)
  double raw_value = 0.0; ///< fhat(x0) - f0(x0)
  double raw_slope = 0.0; ///< fhat'(x0) - f0'(x0)
  double raw_mode = 0.0;  ///< mhat - m0
};

/// Draws one regression dataset: responses f0(x_i) + sigma * noise at either
/// the fixed grid x_i = i/n (n + 1 points) or n + 1 sorted uniform draws.
RegressionData simulate_regression_data(const ConvexTruth& f0, double sigma, DesignType design,
                                        std::size_t n, rng::Stream& stream);

/// Fits replication `index` of `config` and extracts its statistics.
/// Deterministic in (config.seed, index) regardless of scheduling. Throws
/// SolverError when the fit fails its optimality certificate.
LNESample simulate_lne_sample(const SimulationConfig& config, std::uint64_t index);

struct SimulationTables {
  CriticalValueTable pivotal;  ///< L0, L1, M and their absolute versions
  CriticalValueTable oracle;   ///< |H2|, |H3|, |H2 mode| after oracle rescaling
};

/// Runs the full simulation once and assembles both tables from the same
/// replications. The oracle rescaling divides the raw errors by
/// (sigma^2 / n)^{2/5}-type rates and curvature constants, so it requires
/// sigma > 0 and strictly positive f0'' at x0 and at the minimizer; throws
/// std::invalid_argument otherwise.
SimulationTables simulate_tables(const SimulationConfig& config);

/// The pivotal table alone; works for any valid config (including sigma = 0).
CriticalValueTable simulate_pivotal_table(const SimulationConfig& config);

/// The oracle table alone.
CriticalValueTable simulate_oracle_table(const SimulationConfig& config);

/// Two-sample Kolmogorov-Smirnov distance sup_t |F_a(t) - F_b(t)|.
/// Throws std::invalid_argument when either sample is empty.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Writes every sample-backed statistic of the table as CSV rows
/// "statistic,value,ecdf" with ecdf = (rank)/(sample size), full precision.
void write_ecdf_csv(std::ostream& out, const CriticalValueTable& table);

}  // namespace lne
