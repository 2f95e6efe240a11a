#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <utility>

#include "lne/convex_lse.hpp"
#include "lne/critical_values.hpp"
#include "lne/density_estimators.hpp"
#include "lne/piecewise_linear.hpp"

namespace lne {

enum class Target : int { value, derivative, mode };

std::string_view to_string(Target t);
/// Throws std::invalid_argument on an unknown name.
Target target_from_string(std::string_view name);

/// Unbounded domain for intervals that are not intersected with anything.
inline constexpr std::pair<double, double> kRealLine{
    -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};

/// Two-sided interval for one local parameter.
struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;            ///< confidence level 1 - delta
  Target target = Target::value;
  bool clamped = false;          ///< true when a domain intersection moved an endpoint
};

/// Intersects the interval with [domain.first, domain.second] and sets
/// `clamped` when that moved an endpoint.
ConfidenceInterval intersect_domain(ConfidenceInterval ci, std::pair<double, double> domain);

/// Consistent estimate of the local noise scale multiplying the pivotal
/// limit: sigma for fixed-design regression, sigma divided by the square
/// root of the local design density for random design, the square root of
/// the fitted density at x0 for density models. Zero is allowed (noiseless
/// data) and collapses the interval to the point estimate.
struct NuisanceScale {
  double a_hat = 0.0;
  /// Throws std::invalid_argument unless a_hat is finite and >= 0.
  void validate() const;
};

/// Square root of the first-difference variance estimator
/// sigma^2 = sum_i (y_{i+1} - y_i)^2 / (2 (n - 1)).
double estimate_sigma(const RegressionData& data);

/// f(x0) +- a_hat c_delta(|L0|) / sqrt(n (v - u)), intersected with `domain`
/// (pass {0, inf} for density fits). `piece` must be the maximal linear piece
/// of `fit` containing x0 and must have positive width.
ConfidenceInterval ci_value(const PiecewiseLinearFunction& fit, const LinearPiece& piece,
                            double x0, std::size_t n, const NuisanceScale& scale,
                            double delta, const CriticalValueTable& table,
                            std::pair<double, double> domain = kRealLine);

/// f'(x0) +- a_hat c_delta(|L1|) / sqrt(n (v - u)^3), same contract.
ConfidenceInterval ci_derivative(const PiecewiseLinearFunction& fit, const LinearPiece& piece,
                                 double x0, std::size_t n, const NuisanceScale& scale,
                                 double delta, const CriticalValueTable& table,
                                 std::pair<double, double> domain = kRealLine);

/// m_hat +- c_delta(|M|) (v_m - u_m), intersected with `domain`. Scale-free:
/// no noise estimate is consumed. Throws on a width-zero bracket.
ConfidenceInterval ci_mode(const ModeBracket& bracket, double delta,
                           const CriticalValueTable& table,
                           std::pair<double, double> domain = kRealLine);

/// Model-agnostic intervals for an externally produced piecewise-linear
/// estimate: point_estimates = (value, slope) at x0 with a caller-supplied
/// scale. `shape` records whether the estimated function is convex or
/// concave; the intervals use absolute-value critical values and are
/// symmetric, so both shapes produce the same output. Returns (value CI,
/// derivative CI), not intersected with any domain.
std::pair<ConfidenceInterval, ConfidenceInterval> ci_generic(
    std::pair<double, double> point_estimates, const LinearPiece& piece, std::size_t n,
    const NuisanceScale& scale, double delta, const CriticalValueTable& table, Shape shape);

/// Random-design nuisance scale sigma_hat (count / (n (v - u)))^{-1/2} where
/// count is the number of design points inside [u, v]. Throws when the piece
/// contains no design points (fall back to the fixed-design sigma estimate).
NuisanceScale nuisance_a_random_design(const RegressionData& data, const LinearPiece& piece,
                                       double sigma_hat);

/// Density-model nuisance scale sqrt(f_hat(x0)); throws when x0 lies outside
/// the support of the fitted density.
NuisanceScale nuisance_logconcave(const LogConcaveFit& fit, double x0);

}  // namespace lne
