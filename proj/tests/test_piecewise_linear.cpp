#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lne/piecewise_linear.hpp"

using lne::LinearPiece;
using lne::ModeBracket;
using lne::PiecewiseLinearFunction;
using lne::Shape;
using lne::Side;

namespace {

// V-shaped convex function with a single interior kink at 0.4.
PiecewiseLinearFunction vee() {
  return PiecewiseLinearFunction({0.0, 0.4, 1.0}, {2.0, 0.0, 1.5}, Shape::convex);
}

}  // namespace

TEST_CASE("constructor validates input") {
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0}, {1.0}, Shape::convex), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 1.0}, {1.0}, Shape::convex),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 0.0, 1.0}, {1.0, 1.0, 1.0}, Shape::convex),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinearFunction({1.0, 0.0}, {0.0, 0.0}, Shape::convex),
                  std::invalid_argument);
  const double nan = std::nan("");
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, nan}, {0.0, 0.0}, Shape::convex),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 1.0}, {0.0, nan}, Shape::convex),
                  std::invalid_argument);
  // Concave kink declared convex.
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0}, Shape::convex),
                  std::invalid_argument);
  // ... and the mirror image.
  CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 0.5, 1.0}, {1.0, 0.0, 1.0}, Shape::concave),
                  std::invalid_argument);
  // Both shapes accept an affine function.
  CHECK_NOTHROW(PiecewiseLinearFunction({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}, Shape::convex));
  CHECK_NOTHROW(PiecewiseLinearFunction({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}, Shape::concave));
}

TEST_CASE("evaluation interpolates and rejects points outside the domain") {
  const auto f = vee();
  CHECK(f.evaluate(0.0) == doctest::Approx(2.0));
  CHECK(f.evaluate(0.2) == doctest::Approx(1.0));
  CHECK(f.evaluate(0.4) == doctest::Approx(0.0));
  CHECK(f.evaluate(0.7) == doctest::Approx(0.75));
  CHECK(f.evaluate(1.0) == doctest::Approx(1.5));
  CHECK(f(0.2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(f.evaluate(-0.01), std::domain_error);
  CHECK_THROWS_AS(f.evaluate(1.01), std::domain_error);
}

TEST_CASE("one sided derivatives at and between kinks") {
  const auto f = vee();
  CHECK(f.one_sided_derivative(0.2, Side::left) == doctest::Approx(-5.0));
  CHECK(f.one_sided_derivative(0.2, Side::right) == doctest::Approx(-5.0));
  CHECK(f.one_sided_derivative(0.4, Side::left) == doctest::Approx(-5.0));
  CHECK(f.one_sided_derivative(0.4, Side::right) == doctest::Approx(2.5));
  CHECK(f.one_sided_derivative(0.0, Side::right) == doctest::Approx(-5.0));
  CHECK(f.one_sided_derivative(1.0, Side::left) == doctest::Approx(2.5));
  CHECK_THROWS_AS(f.one_sided_derivative(0.0, Side::left), std::domain_error);
  CHECK_THROWS_AS(f.one_sided_derivative(1.0, Side::right), std::domain_error);
}

TEST_CASE("kinks keep boundaries and drop collinear knots") {
  // Middle knot at 0.5 is collinear; only the 0.25 knot is a genuine kink.
  PiecewiseLinearFunction f({0.0, 0.25, 0.5, 1.0}, {1.0, 0.5, 1.0, 2.0}, Shape::convex);
  const auto kk = f.kinks();
  REQUIRE(kk.size() == 3);
  CHECK(kk[0] == doctest::Approx(0.0));
  CHECK(kk[1] == doctest::Approx(0.25));
  CHECK(kk[2] == doctest::Approx(1.0));
}

TEST_CASE("linear piece containing an interior point") {
  const auto f = vee();
  const LinearPiece p = f.linear_piece_containing(0.7);
  CHECK(p.u_hat == doctest::Approx(0.4));
  CHECK(p.v_hat == doctest::Approx(1.0));
  CHECK(p.slope == doctest::Approx(2.5));
  CHECK(p.intercept == doctest::Approx(-1.0));
  CHECK(p.width() == doctest::Approx(0.6));
  // Evaluate through the affine coefficients matches the function.
  CHECK(p.at(0.7) == doctest::Approx(f.evaluate(0.7)));
}

TEST_CASE("point on an interior kink resolves to the longer adjacent piece") {
  const auto f = vee();  // left piece has length 0.4, right piece 0.6
  const LinearPiece p = f.linear_piece_containing(0.4);
  CHECK(p.u_hat == doctest::Approx(0.4));
  CHECK(p.v_hat == doctest::Approx(1.0));
  // Mirror: kink at 0.6 with the longer piece on the left.
  PiecewiseLinearFunction g({0.0, 0.6, 1.0}, {2.0, 0.0, 1.5}, Shape::convex);
  const LinearPiece q = g.linear_piece_containing(0.6);
  CHECK(q.u_hat == doctest::Approx(0.0));
  CHECK(q.v_hat == doctest::Approx(0.6));
}

TEST_CASE("linear piece spans collinear knots") {
  PiecewiseLinearFunction f({0.0, 0.25, 0.5, 1.0}, {1.0, 0.5, 1.0, 2.0}, Shape::convex);
  const LinearPiece p = f.linear_piece_containing(0.3);
  CHECK(p.u_hat == doctest::Approx(0.25));
  CHECK(p.v_hat == doctest::Approx(1.0));
  CHECK(p.slope == doctest::Approx(2.0));
}

TEST_CASE("anti-mode finds the minimizing knot of a convex function") {
  const auto f = vee();
  CHECK(f.anti_mode() == doctest::Approx(0.4));
  // Concave: the maximizing knot instead.
  PiecewiseLinearFunction g({0.0, 0.3, 1.0}, {0.0, 2.0, 1.0}, Shape::concave);
  CHECK(g.anti_mode() == doctest::Approx(0.3));
}

TEST_CASE("mode bracket reaches the nearest kinks on both sides") {
  PiecewiseLinearFunction g({0.0, 0.2, 0.5, 0.8, 1.0}, {0.0, 1.0, 1.8, 1.2, 0.2},
                            Shape::concave);
  const ModeBracket b = g.mode_bracket();
  CHECK(b.m_hat == doctest::Approx(0.5));
  CHECK(b.u_m == doctest::Approx(0.2));
  CHECK(b.v_m == doctest::Approx(0.8));
  CHECK(b.width() == doctest::Approx(0.6));
}

TEST_CASE("mode bracket collapses on a boundary maximizer") {
  PiecewiseLinearFunction g({0.0, 0.4, 1.0}, {3.0, 1.0, -3.0}, Shape::concave);
  const ModeBracket b = g.mode_bracket();
  CHECK(b.m_hat == doctest::Approx(0.0));
  CHECK(b.u_m == doctest::Approx(0.0));  // no kink to the left: collapses
  CHECK(b.v_m == doctest::Approx(0.4));
}
