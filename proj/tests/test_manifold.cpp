#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "twistlab/manifold.hpp"

using namespace twistlab;

namespace {

FactorChart interval_factor(const std::string& var, double g, double lo,
                            double hi) {
  FactorChart fc;
  fc.name = var;
  fc.vars = {var};
  fc.metric = {{Expr::constant(g)}};
  fc.box = {{lo, hi}};
  return fc;
}

// Base (t, metric -dt^2) x (x2, metric dx^2) with the given twist.
std::vector<FactorChart> two_factors() {
  return {interval_factor("t", -1.0, 1.0, 2.0),
          interval_factor("x2", 1.0, 0.0, 1.0)};
}

}  // namespace

TEST_CASE("two-factor assembly gives [[-1,0],[0,f^2]]") {
  auto factors = two_factors();
  TwistFunction tw{1, parse("exp((t + x2)/2)")};
  ProductMetric G = assemble_metric(factors, {tw});

  CHECK(G.dim == 2);
  CHECK(G.vars == std::vector<std::string>{"t", "x2"});
  CHECK(G.blocks.size() == 2);
  CHECK(G.block_of(0) == 0);
  CHECK(G.block_of(1) == 1);

  Env p{{"t", 0.3}, {"x2", -0.2}};
  CHECK(eval(G.entries[0][0], p) == -1.0);
  CHECK(eval(G.entries[0][1], p) == 0.0);
  CHECK(eval(G.entries[1][0], p) == 0.0);
  CHECK(eval(G.entries[1][1], p) ==
        doctest::Approx(std::exp(0.1)).epsilon(1e-15));
  // Off-diagonal blocks are the literal zero expression.
  CHECK(G.entries[0][1].is_constant());
  CHECK(G.entries[0][1].constant_value() == 0.0);
}

TEST_CASE("unit twist degenerates to the direct sum") {
  auto factors = two_factors();
  ProductMetric G = assemble_metric(factors, {{1, Expr::constant(1.0)}});
  Env p{{"t", 1.5}, {"x2", 0.5}};
  CHECK(eval(G.entries[0][0], p) == -1.0);
  CHECK(eval(G.entries[1][1], p) == 1.0);
}

TEST_CASE("three one-dimensional factors give diag(-1, f2^2, f3^2)") {
  std::vector<FactorChart> factors{interval_factor("t", -1.0, 1.0, 2.0),
                                   interval_factor("x2", 1.0, 0.0, 1.0),
                                   interval_factor("x3", 1.0, 0.0, 1.0)};
  TwistFunction f2{1, parse("exp(t + x2)")};
  TwistFunction f3{2, parse("sqrt(t)")};
  ProductMetric G = assemble_metric(factors, {f2, f3});
  Env p{{"t", 1.44}, {"x2", 0.25}, {"x3", 0.75}};
  CHECK(eval(G.entries[1][1], p) ==
        doctest::Approx(std::exp(2.0 * 1.69)).epsilon(1e-14));
  CHECK(eval(G.entries[2][2], p) == doctest::Approx(1.44).epsilon(1e-15));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(eval(G.entries[i][j], p) == 0.0);
}

TEST_CASE("diagonal entries equal f^2 * g within 1e-12 relative") {
  auto factors = two_factors();
  Expr f = parse("exp((2*x2 - 3*cbrt(t^2))/4)");
  ProductMetric G = assemble_metric(factors, {{1, f}});
  GridSpec grid;
  for (const Env& p : sample_grid(factors, grid)) {
    double want = eval(f, p) * eval(f, p) * 1.0;
    double got = eval(G.entries[1][1], p);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("assembly rejects malformed structure") {
  auto factors = two_factors();
  CHECK_THROWS_AS(assemble_metric(factors, {}), SchemaError);  // missing twist
  CHECK_THROWS_AS(
      assemble_metric(factors, {{0, Expr::constant(1.0)}}),
      SchemaError);  // twist on base
  CHECK_THROWS_AS(
      assemble_metric(factors, {{1, Expr::constant(1.0)},
                                {1, Expr::constant(2.0)}}),
      SchemaError);  // duplicate twist
  CHECK_THROWS_AS(
      assemble_metric(factors, {{5, Expr::constant(1.0)}}),
      SchemaError);  // out of range

  auto dup = two_factors();
  dup[1].vars[0] = "t";
  CHECK_THROWS_AS(assemble_metric(dup, {{1, Expr::constant(1.0)}}),
                  SchemaError);

  auto bad_metric = two_factors();
  bad_metric[1].metric[0][0] = parse("t");  // foreign var inside a chart
  CHECK_THROWS_AS(assemble_metric(bad_metric, {{1, Expr::constant(1.0)}}),
                  SchemaError);
}

TEST_CASE("twist scope violations name the variable") {
  std::vector<FactorChart> factors{interval_factor("t", -1.0, 1.0, 2.0),
                                   interval_factor("x2", 1.0, 0.0, 1.0),
                                   interval_factor("x3", 1.0, 0.0, 1.0)};
  // Twist of factor 1 may use {t, x2}, not x3.
  std::vector<TwistFunction> twists{{1, parse("exp(t + x3)")},
                                    {2, Expr::constant(1.0)}};
  try {
    assemble_metric(factors, twists);
    FAIL("expected SceneDomainError");
  } catch (const SceneDomainError& e) {
    CHECK(std::string(e.what()).find("x3") != std::string::npos);
  }
}

TEST_CASE("9-point grid on [1,2] with 5% inset") {
  auto factors = std::vector<FactorChart>{interval_factor("t", -1.0, 1.0, 2.0)};
  GridSpec grid;
  auto pts = sample_grid(factors, grid);
  REQUIRE(pts.size() == 9);
  const double want[] = {1.05, 1.1625, 1.275, 1.3875, 1.5,
                         1.6125, 1.725, 1.8375, 1.95};
  for (int i = 0; i < 9; ++i)
    CHECK(pts[i].get("t") == doctest::Approx(want[i]).epsilon(1e-14));
  CHECK(pts.front().get("t") == 1.05);
  CHECK(pts.back().get("t") == 1.95);
}

TEST_CASE("guards drop near-singular points") {
  auto factors =
      std::vector<FactorChart>{interval_factor("t", 1.0, -1.0, 1.0)};
  GridSpec grid;
  grid.guards = {parse("t")};
  auto pts = sample_grid(factors, grid);
  // The symmetric 9-point grid contains t = 0, which the guard removes.
  CHECK(pts.size() == 8);
  for (const auto& p : pts) CHECK(std::fabs(p.get("t")) >= 1e-6);
}

TEST_CASE("grid ordering is lexicographic, first coordinate slowest") {
  auto factors = two_factors();
  GridSpec grid;
  grid.points_per_dim = 3;
  auto pts = sample_grid(factors, grid);
  REQUIRE(pts.size() == 9);
  CHECK(pts[0].get("t") == 1.05);
  CHECK(pts[0].get("x2") == 0.05);
  CHECK(pts[1].get("t") == 1.05);
  CHECK(pts[1].get("x2") == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pts[2].get("x2") == 0.95);
  CHECK(pts[3].get("t") == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(pts[8].get("t") == 1.95);
  CHECK(pts[8].get("x2") == 0.95);
}

TEST_CASE("single point per dimension sits at the box middle") {
  auto factors = std::vector<FactorChart>{interval_factor("t", -1.0, 1.0, 3.0)};
  GridSpec grid;
  grid.points_per_dim = 1;
  auto pts = sample_grid(factors, grid);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].get("t") == 2.0);
}

TEST_CASE("fully guarded grid is a scene rejection") {
  auto factors =
      std::vector<FactorChart>{interval_factor("t", 1.0, -1e-7, 1e-7)};
  GridSpec grid;
  grid.guards = {parse("t")};
  CHECK_THROWS_AS(sample_grid(factors, grid), SceneDomainError);
}

TEST_CASE("vector field validation") {
  auto factors = two_factors();
  VectorFieldSpec vf;
  vf.lifted = true;
  vf.components = {{parse("cbrt(t)")}, {Expr::constant(1.0)}};
  CHECK_NOTHROW(validate_vector_field(vf, factors));

  VectorFieldSpec foreign;
  foreign.lifted = true;
  foreign.components = {{parse("t")}, {parse("t*x2")}};
  CHECK_THROWS_AS(validate_vector_field(foreign, factors), SceneDomainError);

  // The same field is fine when not flagged as lifted.
  foreign.lifted = false;
  CHECK_NOTHROW(validate_vector_field(foreign, factors));

  VectorFieldSpec unknown;
  unknown.lifted = false;
  unknown.components = {{parse("y")}, {Expr::constant(0.0)}};
  CHECK_THROWS_AS(validate_vector_field(unknown, factors), SchemaError);

  VectorFieldSpec short_list;
  short_list.lifted = true;
  short_list.components = {{parse("t")}};
  CHECK_THROWS_AS(validate_vector_field(short_list, factors), SchemaError);
}

TEST_CASE("determinant of assembled metrics") {
  auto factors = two_factors();
  ProductMetric G = assemble_metric(factors, {{1, parse("exp((t + x2)/2)")}});
  Env p{{"t", 0.0}, {"x2", 0.0}};
  CHECK(metric_determinant(G, p) == doctest::Approx(-1.0).epsilon(1e-15));

  FactorChart plane;
  plane.name = "plane";
  plane.vars = {"u", "v"};
  plane.metric = {{Expr::constant(2.0), Expr::constant(1.0)},
                  {Expr::constant(1.0), Expr::constant(2.0)}};
  plane.box = {{0.0, 1.0}, {0.0, 1.0}};
  ProductMetric P = assemble_metric({plane}, {});
  CHECK(metric_determinant(P, {{"u", 0.0}, {"v", 0.0}}) ==
        doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("audit accepts a healthy scene") {
  Scene s;
  s.factors = two_factors();
  s.twists = {{1, parse("exp((2*x2 - 3*cbrt(t^2))/4)")}};
  s.field.lifted = true;
  s.field.components = {{parse("cbrt(t)")}, {Expr::constant(1.0)}};
  CHECK_NOTHROW(audit_scene(s));
}

TEST_CASE("audit rejects non-positive twists") {
  Scene s;
  s.factors = two_factors();
  s.twists = {{1, parse("t - 1.5")}};  // changes sign on [1.05, 1.95]
  s.field.components = {{Expr::constant(0.0)}, {Expr::constant(0.0)}};
  CHECK_THROWS_AS(audit_scene(s), SceneDomainError);
}

TEST_CASE("audit rejects a numerically degenerate metric") {
  Scene s;
  s.factors = {interval_factor("t", 5e-13, 1.0, 2.0)};
  s.field.components = {{Expr::constant(0.0)}};
  CHECK_THROWS_AS(audit_scene(s), SceneDomainError);
}

TEST_CASE("audit rejects an asymmetric factor metric") {
  FactorChart plane;
  plane.name = "plane";
  plane.vars = {"u", "v"};
  plane.metric = {{Expr::constant(2.0), Expr::constant(1.0)},
                  {Expr::constant(0.5), Expr::constant(2.0)}};
  plane.box = {{0.0, 1.0}, {0.0, 1.0}};
  Scene s;
  s.factors = {plane};
  s.field.components = {{Expr::constant(0.0), Expr::constant(0.0)}};
  CHECK_THROWS_AS(audit_scene(s), SceneDomainError);
}
