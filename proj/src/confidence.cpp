#include "lne/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lne/errors.hpp"

namespace lne {

std::string_view to_string(Target t) {
  switch (t) {
    case Target::value:
      return "value";
    case Target::derivative:
      return "derivative";
    case Target::mode:
      return "mode";
  }
  throw std::logic_error("unhandled target");
}

Target target_from_string(std::string_view name) {
  if (name == "value") return Target::value;
  if (name == "derivative") return Target::derivative;
  if (name == "mode") return Target::mode;
  throw std::invalid_argument("unknown target '" + std::string(name) +
                              "'; expected value, derivative, or mode");
}

ConfidenceInterval intersect_domain(ConfidenceInterval ci, std::pair<double, double> domain) {
  if (!(domain.first <= domain.second)) {
    throw std::invalid_argument("domain bounds are out of order");
  }
  const double lower = std::clamp(ci.lower, domain.first, domain.second);
  const double upper = std::clamp(ci.upper, domain.first, domain.second);
  ci.clamped = ci.clamped || lower != ci.lower || upper != ci.upper;
  ci.lower = lower;
  ci.upper = upper;
  return ci;
}

void NuisanceScale::validate() const {
  if (!std::isfinite(a_hat) || a_hat < 0.0) {
    throw std::invalid_argument("nuisance scale must be finite and >= 0");
  }
}

double estimate_sigma(const RegressionData& data) {
  data.validate();
  const std::size_t n = data.n();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = data.y[i + 1] - data.y[i];
    sum += d * d;
  }
  return std::sqrt(sum / (2.0 * static_cast<double>(n - 1)));
}

namespace {

void check_local_inputs(const LinearPiece& piece, std::size_t n, const NuisanceScale& scale) {
  scale.validate();
  if (n == 0) {
    throw std::invalid_argument("sample size must be positive");
  }
  if (!(piece.width() > 0.0)) {
    throw std::invalid_argument("linear piece has nonpositive width");
  }
}

// The two half-width kernels below are the single code path for both the
// model-specific intervals and ci_generic, so the specializations match the
// generic route bit for bit.
double half_width_value(const LinearPiece& piece, std::size_t n, const NuisanceScale& scale,
                        double delta, const CriticalValueTable& table) {
  const double c = table.quantile(Statistic::absL0, delta);
  return scale.a_hat * c / std::sqrt(static_cast<double>(n) * piece.width());
}

double half_width_derivative(const LinearPiece& piece, std::size_t n, const NuisanceScale& scale,
                             double delta, const CriticalValueTable& table) {
  const double c = table.quantile(Statistic::absL1, delta);
  const double w = piece.width();
  return scale.a_hat * c / std::sqrt(static_cast<double>(n) * w * w * w);
}

ConfidenceInterval symmetric_interval(double center, double half_width, double delta,
                                      Target target) {
  ConfidenceInterval ci;
  ci.lower = center - half_width;
  ci.upper = center + half_width;
  ci.level = 1.0 - delta;
  ci.target = target;
  return ci;
}

void check_piece_contains(const LinearPiece& piece, double x0) {
  if (!(x0 >= piece.u_hat && x0 <= piece.v_hat)) {
    throw std::invalid_argument("x0 lies outside the supplied linear piece");
  }
}

}  // namespace

ConfidenceInterval ci_value(const PiecewiseLinearFunction& fit, const LinearPiece& piece,
                            double x0, std::size_t n, const NuisanceScale& scale,
                            double delta, const CriticalValueTable& table,
                            std::pair<double, double> domain) {
  check_local_inputs(piece, n, scale);
  check_piece_contains(piece, x0);
  const double half = half_width_value(piece, n, scale, delta, table);
  return intersect_domain(symmetric_interval(fit.evaluate(x0), half, delta, Target::value),
                          domain);
}

ConfidenceInterval ci_derivative(const PiecewiseLinearFunction& fit, const LinearPiece& piece,
                                 double x0, std::size_t n, const NuisanceScale& scale,
                                 double delta, const CriticalValueTable& table,
                                 std::pair<double, double> domain) {
  check_local_inputs(piece, n, scale);
  check_piece_contains(piece, x0);
  if (x0 < fit.min_knot() || x0 > fit.max_knot()) {
    throw std::domain_error("x0 lies outside the fitted range");
  }
  const double half = half_width_derivative(piece, n, scale, delta, table);
  return intersect_domain(symmetric_interval(piece.slope, half, delta, Target::derivative),
                          domain);
}

ConfidenceInterval ci_mode(const ModeBracket& bracket, double delta,
                           const CriticalValueTable& table, std::pair<double, double> domain) {
  if (!(bracket.width() > 0.0)) {
    throw std::invalid_argument(
        "mode bracket has zero width: the extremum sits on a boundary kink, so no "
        "pivotal interval is available");
  }
  const double c = table.quantile(Statistic::absM, delta);
  const double half = c * bracket.width();
  return intersect_domain(symmetric_interval(bracket.m_hat, half, delta, Target::mode), domain);
}

std::pair<ConfidenceInterval, ConfidenceInterval> ci_generic(
    std::pair<double, double> point_estimates, const LinearPiece& piece, std::size_t n,
    const NuisanceScale& scale, double delta, const CriticalValueTable& table, Shape shape) {
  // The intervals are symmetric around the point estimates (the critical
  // values already absorb the sign of the limit), so convex and concave
  // shapes share the arithmetic; the parameter documents the caller's model.
  (void)shape;
  check_local_inputs(piece, n, scale);
  const double half0 = half_width_value(piece, n, scale, delta, table);
  const double half1 = half_width_derivative(piece, n, scale, delta, table);
  return {symmetric_interval(point_estimates.first, half0, delta, Target::value),
          symmetric_interval(point_estimates.second, half1, delta, Target::derivative)};
}

NuisanceScale nuisance_a_random_design(const RegressionData& data, const LinearPiece& piece,
                                       double sigma_hat) {
  data.validate();
  if (!std::isfinite(sigma_hat) || sigma_hat < 0.0) {
    throw std::invalid_argument("sigma estimate must be finite and >= 0");
  }
  if (!(piece.width() > 0.0)) {
    throw std::invalid_argument("linear piece has nonpositive width");
  }
  const auto lo = std::lower_bound(data.x.begin(), data.x.end(), piece.u_hat);
  const auto hi = std::upper_bound(data.x.begin(), data.x.end(), piece.v_hat);
  const auto count = static_cast<double>(hi - lo);
  if (count == 0.0) {
    throw std::invalid_argument(
        "no design points fall inside the linear piece; use the fixed-design "
        "sigma scale instead");
  }
  NuisanceScale scale;
  scale.a_hat = sigma_hat * std::sqrt(static_cast<double>(data.n()) * piece.width() / count);
  return scale;
}

NuisanceScale nuisance_logconcave(const LogConcaveFit& fit, double x0) {
  const double f = fit.density(x0);
  if (!(f > 0.0)) {
    throw std::invalid_argument("x0 lies outside the support of the fitted density");
  }
  NuisanceScale scale;
  scale.a_hat = std::sqrt(f);
  return scale;
}

}  // namespace lne
