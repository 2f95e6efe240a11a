#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lne/confidence.hpp"
#include "lne/critical_values.hpp"
#include "lne/density_estimators.hpp"
#include "lne/rng.hpp"

using lne::ConfidenceInterval;
using lne::CriticalValueTable;
using lne::LinearPiece;
using lne::ModeBracket;
using lne::NuisanceScale;
using lne::PiecewiseLinearFunction;
using lne::RegressionData;
using lne::Shape;
using lne::Target;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Convex fit that is flat at height 1 on [0.4, 0.6]: the pieces around the
// worked examples below.
PiecewiseLinearFunction flat_middle_fit() {
  return PiecewiseLinearFunction({0.0, 0.4, 0.6, 1.0}, {2.0, 1.0, 1.0, 2.0}, Shape::convex);
}

// Convex fit whose middle piece [0.4, 0.6] has slope 3 and value 1 at 0.5.
PiecewiseLinearFunction sloped_middle_fit() {
  return PiecewiseLinearFunction({0.0, 0.4, 0.6, 1.0}, {0.0, 0.7, 1.3, 3.0}, Shape::convex);
}

NuisanceScale unit_scale() {
  NuisanceScale s;
  s.a_hat = 1.0;
  return s;
}

}  // namespace

TEST_CASE("target names round-trip") {
  for (Target t : {Target::value, Target::derivative, Target::mode}) {
    CHECK(lne::target_from_string(lne::to_string(t)) == t);
  }
  CHECK_THROWS_AS(lne::target_from_string("slope"), std::invalid_argument);
}

TEST_CASE("sigma estimate from first differences") {
  // sum of squared increments 1^2 + 1^2 = 2 over 2 (n - 1) = 4.
  RegressionData data;
  data.x = {0.0, 0.5, 1.0};
  data.y = {1.0, 2.0, 3.0};
  CHECK(lne::estimate_sigma(data) == std::sqrt(0.5));

  data.y = {4.0, 4.0, 4.0};
  CHECK(lne::estimate_sigma(data) == 0.0);

  RegressionData tiny;
  tiny.x = {0.5};
  tiny.y = {1.0};
  CHECK_THROWS_AS(lne::estimate_sigma(tiny), std::invalid_argument);
}

TEST_CASE("sigma estimate is consistent under pure noise") {
  RegressionData data;
  const std::size_t n = 100000;
  data.x.resize(n);
  data.y.resize(n);
  lne::rng::Stream stream(2026u, 0u);
  for (std::size_t i = 0; i < n; ++i) {
    data.x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    data.y[i] = stream.next_normal();
  }
  const double sigma_hat = lne::estimate_sigma(data);
  CHECK(sigma_hat > 0.99);
  CHECK(sigma_hat < 1.01);
}

TEST_CASE("value interval reproduces the worked example") {
  // fhat(0.5) = 1 on the flat piece [0.4, 0.6], n = 1000, a_hat = 1,
  // level 95%: 1 -+ 2.13 / sqrt(1000 * 0.2).
  const PiecewiseLinearFunction fit = flat_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  const ConfidenceInterval ci = lne::ci_value(fit, piece, 0.5, 1000, unit_scale(), 0.05,
                                              CriticalValueTable::builtin());
  CHECK(ci.lower == doctest::Approx(0.8494).epsilon(1e-4));
  CHECK(ci.upper == doctest::Approx(1.1506).epsilon(1e-4));
  CHECK(ci.level == 0.95);
  CHECK(ci.target == Target::value);
  CHECK(!ci.clamped);
}

TEST_CASE("derivative interval reproduces the worked example") {
  // slope 3 on [0.4, 0.6], n = 1000: 3 -+ 9.00 / sqrt(1000 * 0.2^3).
  const PiecewiseLinearFunction fit = sloped_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  CHECK(piece.slope == doctest::Approx(3.0).epsilon(1e-12));
  const ConfidenceInterval ci = lne::ci_derivative(fit, piece, 0.5, 1000, unit_scale(), 0.05,
                                                   CriticalValueTable::builtin());
  CHECK(ci.lower == doctest::Approx(-0.1820).epsilon(1e-4));
  CHECK(ci.upper == doctest::Approx(6.1820).epsilon(1e-4));
  CHECK(ci.target == Target::derivative);
}

TEST_CASE("mode interval reproduces the worked example") {
  // mhat = 0.5 with kink bracket [0.45, 0.58]: 0.5 -+ 0.61 * 0.13.
  ModeBracket bracket;
  bracket.m_hat = 0.5;
  bracket.u_m = 0.45;
  bracket.v_m = 0.58;
  const ConfidenceInterval ci = lne::ci_mode(bracket, 0.05, CriticalValueTable::builtin());
  CHECK(ci.lower == doctest::Approx(0.5 - 0.61 * 0.13).epsilon(1e-12));
  CHECK(ci.upper == doctest::Approx(0.5 + 0.61 * 0.13).epsilon(1e-12));
  CHECK(ci.lower == doctest::Approx(0.4207).epsilon(1e-12));
  CHECK(ci.upper == doctest::Approx(0.5793).epsilon(1e-12));
  CHECK(ci.target == Target::mode);
}

TEST_CASE("intervals nest as the level grows") {
  const PiecewiseLinearFunction fit = flat_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  const auto& table = CriticalValueTable::builtin();
  ConfidenceInterval prev;
  bool first = true;
  for (double delta : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01}) {
    const ConfidenceInterval ci =
        lne::ci_value(fit, piece, 0.5, 1000, unit_scale(), delta, table);
    if (!first) {
      CHECK(ci.lower <= prev.lower);
      CHECK(ci.upper >= prev.upper);
    }
    prev = ci;
    first = false;
  }
}

TEST_CASE("intervals are symmetric around the estimate") {
  const PiecewiseLinearFunction fit = sloped_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  const auto& table = CriticalValueTable::builtin();
  for (double delta : {0.5, 0.1, 0.01}) {
    const ConfidenceInterval civ =
        lne::ci_value(fit, piece, 0.5, 500, unit_scale(), delta, table);
    CHECK(0.5 * (civ.lower + civ.upper) == doctest::Approx(fit.evaluate(0.5)).epsilon(1e-15));
    const ConfidenceInterval cid =
        lne::ci_derivative(fit, piece, 0.5, 500, unit_scale(), delta, table);
    CHECK(0.5 * (cid.lower + cid.upper) == doctest::Approx(piece.slope).epsilon(1e-15));
  }
}

TEST_CASE("zero nuisance scale collapses the interval to the estimate") {
  const PiecewiseLinearFunction fit = flat_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  NuisanceScale zero;
  zero.a_hat = 0.0;
  const ConfidenceInterval ci =
      lne::ci_value(fit, piece, 0.5, 1000, zero, 0.05, CriticalValueTable::builtin());
  CHECK(ci.lower == 1.0);
  CHECK(ci.upper == 1.0);
}

TEST_CASE("domain intersection clamps and flags") {
  ConfidenceInterval ci;
  ci.lower = -0.2;
  ci.upper = 0.7;
  const ConfidenceInterval clamped = lne::intersect_domain(ci, {0.0, kInf});
  CHECK(clamped.lower == 0.0);
  CHECK(clamped.upper == 0.7);
  CHECK(clamped.clamped);

  const ConfidenceInterval untouched = lne::intersect_domain(ci, {-1.0, 1.0});
  CHECK(!untouched.clamped);
  CHECK(untouched.lower == -0.2);

  // An interval entirely outside the domain collapses to the boundary.
  ConfidenceInterval below;
  below.lower = -3.0;
  below.upper = -1.0;
  const ConfidenceInterval collapsed = lne::intersect_domain(below, {0.0, kInf});
  CHECK(collapsed.lower == 0.0);
  CHECK(collapsed.upper == 0.0);
  CHECK(collapsed.clamped);
}

TEST_CASE("value interval clamps to the density domain") {
  // Push the interval below zero with a huge scale.
  const PiecewiseLinearFunction fit = flat_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  NuisanceScale big;
  big.a_hat = 50.0;
  const ConfidenceInterval ci = lne::ci_value(fit, piece, 0.5, 1000, big, 0.05,
                                              CriticalValueTable::builtin(), {0.0, kInf});
  CHECK(ci.lower == 0.0);
  CHECK(ci.clamped);
  CHECK(ci.upper > 1.0);
}

TEST_CASE("interval construction rejects bad inputs") {
  const PiecewiseLinearFunction fit = flat_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  const auto& table = CriticalValueTable::builtin();

  CHECK_THROWS_AS(lne::ci_value(fit, piece, 0.5, 1000, unit_scale(), 0.0, table),
                  std::invalid_argument);
  CHECK_THROWS_AS(lne::ci_value(fit, piece, 0.5, 1000, unit_scale(), 1.0, table),
                  std::invalid_argument);
  // x0 outside the supplied piece.
  CHECK_THROWS_AS(lne::ci_value(fit, piece, 0.7, 1000, unit_scale(), 0.05, table),
                  std::invalid_argument);
  // Negative or non-finite scale.
  NuisanceScale bad;
  bad.a_hat = -1.0;
  CHECK_THROWS_AS(lne::ci_value(fit, piece, 0.5, 1000, bad, 0.05, table),
                  std::invalid_argument);
  // Zero-width piece.
  LinearPiece degenerate;
  degenerate.u_hat = degenerate.v_hat = 0.5;
  CHECK_THROWS_AS(lne::ci_value(fit, degenerate, 0.5, 1000, unit_scale(), 0.05, table),
                  std::invalid_argument);
  // Zero-width mode bracket.
  ModeBracket collapsed;
  collapsed.m_hat = collapsed.u_m = collapsed.v_m = 0.3;
  CHECK_THROWS_AS(lne::ci_mode(collapsed, 0.05, table), std::invalid_argument);
}

TEST_CASE("generic intervals match the specialized ones bit for bit") {
  const PiecewiseLinearFunction fit = sloped_middle_fit();
  const LinearPiece piece = fit.linear_piece_containing(0.5);
  const auto& table = CriticalValueTable::builtin();
  const NuisanceScale scale = unit_scale();

  const auto [gen_value, gen_deriv] = lne::ci_generic(
      {fit.evaluate(0.5), piece.slope}, piece, 1000, scale, 0.05, table, Shape::convex);
  const ConfidenceInterval sv = lne::ci_value(fit, piece, 0.5, 1000, scale, 0.05, table);
  const ConfidenceInterval sd = lne::ci_derivative(fit, piece, 0.5, 1000, scale, 0.05, table);

  CHECK(gen_value.lower == sv.lower);
  CHECK(gen_value.upper == sv.upper);
  CHECK(gen_deriv.lower == sd.lower);
  CHECK(gen_deriv.upper == sd.upper);

  // Both declared shapes give the same symmetric intervals.
  const auto concave = lne::ci_generic({fit.evaluate(0.5), piece.slope}, piece, 1000, scale,
                                       0.05, table, Shape::concave);
  CHECK(concave.first.lower == gen_value.lower);
  CHECK(concave.second.upper == gen_deriv.upper);
}

TEST_CASE("generic intervals serve hand-computed scales") {
  // A hazard-style scale sqrt(h / (1 - F)) = sqrt(2^2) = 2 with estimates
  // (3, -1) on a piece of width 0.25 and n = 100.
  LinearPiece piece;
  piece.u_hat = 0.375;
  piece.v_hat = 0.625;
  piece.slope = -1.0;
  piece.intercept = 3.5;
  NuisanceScale scale;
  scale.a_hat = 2.0;
  const auto [civ, cid] = lne::ci_generic({3.0, -1.0}, piece, 100, scale, 0.05,
                                          CriticalValueTable::builtin(), Shape::convex);
  // Half-widths: 2 * 2.13 / sqrt(25) = 0.852 and 2 * 9.00 / sqrt(100 / 64) = 14.4.
  CHECK(civ.lower == doctest::Approx(3.0 - 0.852).epsilon(1e-12));
  CHECK(civ.upper == doctest::Approx(3.0 + 0.852).epsilon(1e-12));
  CHECK(cid.lower == doctest::Approx(-1.0 - 14.4).epsilon(1e-12));
  CHECK(cid.upper == doctest::Approx(-1.0 + 14.4).epsilon(1e-12));
}

TEST_CASE("random-design scale counts points inside the piece") {
  RegressionData data;
  data.x = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  data.y = {1, 1, 1, 1, 1, 1, 1, 1, 1, 2};
  LinearPiece piece;
  piece.u_hat = 0.35;
  piece.v_hat = 0.75;
  // Four design points (0.4, 0.5, 0.6, 0.7) fall inside [0.35, 0.75].
  const NuisanceScale scale = lne::nuisance_a_random_design(data, piece, 2.0);
  CHECK(scale.a_hat == 2.0 * std::sqrt(10.0 * piece.width() / 4.0));

  LinearPiece empty;
  empty.u_hat = 0.41;
  empty.v_hat = 0.49;
  CHECK_THROWS_AS(lne::nuisance_a_random_design(data, empty, 2.0), std::invalid_argument);
}

TEST_CASE("random-design scale approaches sigma under a uniform design") {
  // Uniform design density 1 on [0, 1]: count / (n w) -> 1, so a_hat -> sigma.
  lne::rng::Stream stream(5u, 1u);
  RegressionData data;
  const std::size_t n = 50000;
  data.x.resize(n);
  data.y.assign(n, 0.0);
  for (double& x : data.x) x = stream.next_uniform();
  std::sort(data.x.begin(), data.x.end());
  LinearPiece piece;
  piece.u_hat = 0.3;
  piece.v_hat = 0.7;
  const NuisanceScale scale = lne::nuisance_a_random_design(data, piece, 1.5);
  CHECK(scale.a_hat == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("random-design scale tracks a nonuniform design density") {
  // X = sqrt(U) has density 2x; over [0.2, 0.4] the mass is 0.12, so
  // a_hat ~ sigma sqrt(0.2 / 0.12).
  lne::rng::Stream stream(5u, 2u);
  RegressionData data;
  const std::size_t n = 50000;
  data.x.resize(n);
  data.y.assign(n, 0.0);
  for (double& x : data.x) x = std::sqrt(stream.next_uniform());
  std::sort(data.x.begin(), data.x.end());
  LinearPiece piece;
  piece.u_hat = 0.2;
  piece.v_hat = 0.4;
  const NuisanceScale scale = lne::nuisance_a_random_design(data, piece, 1.0);
  CHECK(scale.a_hat == doctest::Approx(std::sqrt(0.2 / 0.12)).epsilon(0.03));
}

TEST_CASE("log-concave scale is the root of the fitted density") {
  const lne::LogConcaveFit flat{PiecewiseLinearFunction(
      {0.0, 1.0}, {std::log(0.25), std::log(0.25)}, Shape::concave)};
  const NuisanceScale scale = lne::nuisance_logconcave(flat, 0.5);
  CHECK(scale.a_hat == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(lne::nuisance_logconcave(flat, 2.0), std::invalid_argument);
}

TEST_CASE("log-concave scale from a real two-point fit") {
  // The MLE for observations {0, 1} is the uniform density, so the scale at
  // any interior point is 1.
  lne::SampleData data;
  data.obs = {0.0, 1.0};
  const lne::LogConcaveFit fit = lne::fit_log_concave_mle(data);
  const NuisanceScale scale = lne::nuisance_logconcave(fit, 0.5);
  CHECK(scale.a_hat == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mode interval respects an explicit domain") {
  ModeBracket bracket;
  bracket.m_hat = 0.05;
  bracket.u_m = 0.0;
  bracket.v_m = 0.3;
  const ConfidenceInterval ci =
      lne::ci_mode(bracket, 0.05, CriticalValueTable::builtin(), {0.0, 1.0});
  CHECK(ci.lower == 0.0);  // 0.05 - 0.61 * 0.3 < 0 clamps to the domain
  CHECK(ci.clamped);
  CHECK(ci.upper == doctest::Approx(0.05 + 0.61 * 0.3).epsilon(1e-12));
}

TEST_CASE("derivative interval refuses x0 outside the fitted range") {
  const PiecewiseLinearFunction fit = flat_middle_fit();
  LinearPiece fake;
  fake.u_hat = -1.0;
  fake.v_hat = 2.0;
  fake.slope = 0.0;
  fake.intercept = 1.0;
  CHECK_THROWS_AS(lne::ci_derivative(fit, fake, -0.5, 1000, unit_scale(), 0.05,
                                     CriticalValueTable::builtin()),
                  std::domain_error);
  CHECK_THROWS_AS(lne::ci_value(fit, fake, 1.5, 1000, unit_scale(), 0.05,
                                CriticalValueTable::builtin()),
                  std::domain_error);
}
