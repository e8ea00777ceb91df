#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "flexor/polytope.hpp"

#include "support/oracles.hpp"

using namespace flexor;

namespace {

HPolyhedron unit_square() {
  HPolyhedron p = HPolyhedron::over({"x", "y"});
  p.a.resize(4, 2);
  p.b.resize(4);
  p.a << 1, 0, -1, 0, 0, 1, 0, -1;
  p.b << 1, 0, 1, 0;
  return p;
}

HPolyhedron unit_cube() {
  HPolyhedron p = HPolyhedron::over({"x", "y", "z"});
  p.a.resize(6, 3);
  p.b.resize(6);
  p.a << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  p.b << 1, 0, 1, 0, 1, 0;
  return p;
}

}  // namespace

TEST_CASE("canonicalize scales, sorts and merges", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x", "y"});
  p.a.resize(3, 2);
  p.b.resize(3);
  p.a << 2, 0, 0, 3, 1, 0;  // first and last are the same halfplane scaled
  p.b << 4, 6, 2;
  const HPolyhedron c = canonicalize(p);
  REQUIRE(c.num_ineq() == 2);
  for (int i = 0; i < c.num_ineq(); ++i)
    CHECK_THAT(c.a.row(i).norm(), Catch::Matchers::WithinAbs(1.0, 1e-12));

  SECTION("idempotent to the byte") {
    const std::string once = write_polytope_csv(c);
    const std::string twice = write_polytope_csv(canonicalize(c));
    CHECK(once == twice);
  }
}

TEST_CASE("canonicalize keeps the tighter of duplicate rows", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x"});
  p.a.resize(2, 1);
  p.b.resize(2);
  p.a << 1, 2;
  p.b << 3, 4;  // x <= 3 and x <= 2
  const HPolyhedron c = canonicalize(p);
  REQUIRE(c.num_ineq() == 1);
  CHECK_THAT(c.b(0), Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("canonicalize handles vacuous and impossible rows", "[polytope]") {
  SECTION("zero row with non-negative rhs is dropped") {
    HPolyhedron p = HPolyhedron::over({"x"});
    p.a.resize(2, 1);
    p.b.resize(2);
    p.a << 0, 1;
    p.b << 0.5, 1;
    const HPolyhedron c = canonicalize(p);
    CHECK(c.num_ineq() == 1);
    CHECK_FALSE(c.flagged_empty);
  }
  SECTION("zero row with negative rhs flags empty") {
    HPolyhedron p = HPolyhedron::over({"x"});
    p.a.resize(1, 1);
    p.b.resize(1);
    p.a << 0;
    p.b << -1;
    const HPolyhedron c = canonicalize(p);
    CHECK(c.flagged_empty);
    CHECK(c.num_ineq() == 0);
  }
  SECTION("equality rows get a positive leading coefficient") {
    HPolyhedron p = HPolyhedron::over({"x", "y"});
    p.c.resize(1, 2);
    p.d.resize(1);
    p.c << -2, 0;
    p.d << -4;
    const HPolyhedron c = canonicalize(p);
    REQUIRE(c.num_eq() == 1);
    CHECK(c.c(0, 0) > 0.0);
    CHECK_THAT(c.d(0), Catch::Matchers::WithinAbs(2.0, 1e-12));
  }
}

TEST_CASE("redundancy filter removes implied rows only", "[polytope]") {
  HPolyhedron p = unit_square();
  Eigen::VectorXd extra(2);
  extra << 1, 0;
  p.append_ineq(extra, 2.0);  // x <= 2 implied by x <= 1
  const HPolyhedron f = redundancy_filter(p);
  CHECK(f.num_ineq() == 4);
  // The surviving rows still describe the square.
  Eigen::VectorXd dir(2);
  dir << 1, 0;
  CHECK_THAT(support(f, dir).value, Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("redundancy filter preserves infeasible systems", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x"});
  p.a.resize(2, 1);
  p.b.resize(2);
  p.a << 1, -1;
  p.b << 0, -1;  // x <= 0 and x >= 1
  const HPolyhedron f = redundancy_filter(p);
  // Both per-row subproblems are unbounded, so both rows survive and the
  // set stays empty; emptiness is detected downstream by any LP query.
  CHECK(f.num_ineq() == 2);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  CHECK(lp_solve(f, zero).status == LpStatus::infeasible);
}

TEST_CASE("redundancy filter keeps rows needed against unboundedness", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x", "y"});
  p.a.resize(2, 2);
  p.b.resize(2);
  p.a << 1, 0, 0, 1;  // quadrant cap, unbounded below
  p.b << 1, 1;
  const HPolyhedron f = redundancy_filter(p);
  CHECK(f.num_ineq() == 2);
}

TEST_CASE("equality elimination reduces dimension with a recovery map", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x", "y"});
  p.a.resize(2, 2);
  p.b.resize(2);
  p.a << 1, 0, -1, 0;
  p.b << 1, 0;
  p.c.resize(1, 2);
  p.d.resize(1);
  p.c << 1, 1;
  p.d << 1;  // y = 1 - x

  const auto [reduced, recover] = eliminate_equalities(p);
  REQUIRE(reduced.dim() == 1);
  REQUIRE(reduced.num_eq() == 0);
  // Sample the reduced segment and map back.
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Eigen::VectorXd xr(1);
    xr << t;
    const Eigen::VectorXd full = recover.apply(xr);
    REQUIRE(full.size() == 2);
    CHECK_THAT(full(0) + full(1), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("equality elimination on random systems recovers feasible points", "[polytope]") {
  std::mt19937_64 rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4;
    Eigen::VectorXd x0;
    HPolyhedron p = oracles::random_polytope(rng, n, 4, 10.0, &x0);
    // Add two random equalities through the generator's interior point so
    // the intersection is guaranteed nonempty.
    for (int e = 0; e < 2; ++e) {
      const Eigen::VectorXd row = oracles::random_direction(rng, n);
      p.append_eq(row, row.dot(x0));
    }
    const auto [reduced, recover] = eliminate_equalities(p);
    REQUIRE(reduced.num_eq() == 0);
    REQUIRE(reduced.dim() == n - 2);

    // Probe reduced points obtained from support LPs and their midpoints.
    std::vector<Eigen::VectorXd> probes;
    for (int k = 0; k < 6; ++k) {
      const Eigen::VectorXd dir = oracles::random_direction(rng, reduced.dim());
      const Support s = support(reduced, dir);
      REQUIRE(s.status == LpStatus::optimal);
      probes.push_back(s.argmax);
    }
    probes.push_back(0.5 * (probes[0] + probes[1]));
    probes.push_back(0.5 * (probes[2] + probes[3]));
    for (const Eigen::VectorXd& xr : probes) {
      const Eigen::VectorXd full = recover.apply(xr);
      if (p.num_ineq() > 0) CHECK((p.a * full - p.b).maxCoeff() <= 1e-9);
      CHECK((p.c * full - p.d).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
  }
}

TEST_CASE("inconsistent equalities flag the empty polyhedron", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x", "y"});
  p.c.resize(2, 2);
  p.d.resize(2);
  p.c << 1, 1, 1, 1;
  p.d << 1, 2;
  const auto [reduced, recover] = eliminate_equalities(p);
  CHECK(reduced.flagged_empty);
}

TEST_CASE("projection of the cube collapses to square and interval", "[polytope]") {
  const HPolyhedron cube = unit_cube();
  const HPolyhedron square = fm_project(cube, {"x", "y"});
  CHECK(square.num_ineq() == 4);
  const HPolyhedron interval = fm_project(cube, {"x"});
  REQUIRE(interval.num_ineq() == 2);
  Eigen::VectorXd dir(1);
  dir << 1;
  CHECK_THAT(support(interval, dir).value, Catch::Matchers::WithinAbs(1.0, 1e-9));
  dir << -1;
  CHECK_THAT(support(interval, dir).value, Catch::Matchers::WithinAbs(0.0, 1e-9));
}

TEST_CASE("projection drops appended redundant rows", "[polytope]") {
  HPolyhedron p = unit_square();
  Eigen::VectorXd extra(2);
  extra << 1, 1;
  p.append_ineq(extra, 5.0);
  const HPolyhedron interval = fm_project(p, {"x"});
  CHECK(interval.num_ineq() == 2);
}

TEST_CASE("projection agrees with the LP-lift oracle", "[polytope]") {
  std::mt19937_64 rng(2718);
  std::uniform_int_distribution<int> dims(3, 5);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = dims(rng);
    const HPolyhedron p = oracles::random_polytope(rng, n, 5);
    std::vector<std::string> keep{"x0", "x1"};
    const HPolyhedron proj = fm_project(p, keep);

    std::uniform_real_distribution<double> probe(-12.0, 12.0);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd z(2);
      z << probe(rng), probe(rng);
      const Membership mem = contains(proj, z);
      const bool oracle = oracles::lift_membership(p, keep, z);
      if (std::abs(mem.worst_violation) <= 1e-6) continue;  // boundary band
      CHECK(mem.inside == oracle);
    }
  }
}

TEST_CASE("projection result is independent of input column order", "[polytope]") {
  const HPolyhedron cube = unit_cube();
  HPolyhedron permuted = HPolyhedron::over({"z", "x", "y"});
  permuted.a.resize(6, 3);
  permuted.b = cube.b;
  permuted.a.col(0) = cube.a.col(2);
  permuted.a.col(1) = cube.a.col(0);
  permuted.a.col(2) = cube.a.col(1);
  const std::string a = write_polytope_csv(fm_project(cube, {"x", "y"}));
  const std::string b = write_polytope_csv(fm_project(permuted, {"x", "y"}));
  CHECK(a == b);
}

TEST_CASE("support function over the square", "[polytope]") {
  const HPolyhedron square = unit_square();
  Eigen::VectorXd dir(2);
  dir << 1, 1;
  dir /= dir.norm();
  CHECK_THAT(support(square, dir).value,
             Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-9));

  HPolyhedron half = HPolyhedron::over({"x"});
  half.a.resize(1, 1);
  half.b.resize(1);
  half.a << -1;
  half.b << 0;
  Eigen::VectorXd up(1);
  up << 1;
  CHECK(support(half, up).status == LpStatus::unbounded);
}

TEST_CASE("hull of five points drops the interior one", "[polytope]") {
  std::vector<std::array<double, 2>> pts{
      {0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  const auto hull = hull_2d(pts);
  REQUIRE(hull.size() == 4);
  CHECK(hull[0] == std::array<double, 2>{0, 0});
  // Counterclockwise: (0,0) -> (1,0) -> (1,1) -> (0,1).
  CHECK(hull[1] == std::array<double, 2>{1, 0});
  CHECK(hull[2] == std::array<double, 2>{1, 1});
  CHECK(hull[3] == std::array<double, 2>{0, 1});
  CHECK_THAT(polygon_area(hull), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("hull of collinear points keeps the endpoints", "[polytope]") {
  std::vector<std::array<double, 2>> pts{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  const auto hull = hull_2d(pts);
  REQUIRE(hull.size() == 2);
  CHECK(hull[0] == std::array<double, 2>{0, 0});
  CHECK(hull[1] == std::array<double, 2>{3, 3});
}

TEST_CASE("shadow of the cube is the unit square", "[polytope]") {
  const Shadow2d sh = shadow_2d(unit_cube(), "x", "y");
  REQUIRE(sh.kind == ShadowKind::polygon);
  REQUIRE(sh.vertices.size() == 4);
  CHECK_THAT(polygon_area(sh.vertices), Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK(sh.vertices[0] == std::array<double, 2>{0, 0});
}

TEST_CASE("shadows degrade gracefully", "[polytope]") {
  SECTION("pinned coordinate yields a segment") {
    HPolyhedron p = unit_cube();
    Eigen::VectorXd pin = Eigen::VectorXd::Zero(3);
    pin(0) = 1.0;
    p.append_eq(pin, 0.3);
    const Shadow2d sh = shadow_2d(p, "x", "y");
    REQUIRE(sh.kind == ShadowKind::segment);
    CHECK_THAT(sh.vertices[0][0], Catch::Matchers::WithinAbs(0.3, 1e-8));
    CHECK_THAT(sh.vertices[1][0], Catch::Matchers::WithinAbs(0.3, 1e-8));
  }
  SECTION("two pins yield a point") {
    HPolyhedron p = unit_cube();
    Eigen::VectorXd pin = Eigen::VectorXd::Zero(3);
    pin(0) = 1.0;
    p.append_eq(pin, 0.3);
    pin.setZero();
    pin(1) = 1.0;
    p.append_eq(pin, 0.6);
    const Shadow2d sh = shadow_2d(p, "x", "y");
    REQUIRE(sh.kind == ShadowKind::point);
  }
  SECTION("empty input yields an empty shadow") {
    HPolyhedron p = unit_cube();
    Eigen::VectorXd row = Eigen::VectorXd::Zero(3);
    row(0) = 1.0;
    p.append_ineq(row, -1.0);  // x <= -1 contradicts x >= 0
    const Shadow2d sh = shadow_2d(p, "x", "y");
    CHECK(sh.kind == ShadowKind::empty);
  }
  SECTION("unbounded shadow throws naming the direction") {
    HPolyhedron p = HPolyhedron::over({"x", "y"});
    p.a.resize(3, 2);
    p.b.resize(3);
    p.a << 1, 0, -1, 0, 0, 1;  // y unbounded below
    p.b << 1, 0, 1;
    try {
      shadow_2d(p, "x", "y");
      FAIL("expected unbounded error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::numerical);
      CHECK(std::string(e.what()).find("-y") != std::string::npos);
    }
  }
}

TEST_CASE("shadow vertices match support sampling", "[polytope]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const HPolyhedron p = oracles::random_polytope(rng, 4, 6);
    const Shadow2d sh = shadow_2d(p, "x0", "x1");
    REQUIRE(sh.kind == ShadowKind::polygon);
    // Support of the shadow equals support of the original in lifted dirs.
    for (int k = 0; k < 24; ++k) {
      const double ang = 2.0 * M_PI * k / 24.0;
      Eigen::VectorXd d2(2);
      d2 << std::cos(ang), std::sin(ang);
      Eigen::VectorXd d4 = Eigen::VectorXd::Zero(4);
      d4(0) = d2(0);
      d4(1) = d2(1);
      const double hs = support(sh.poly, d2).value;
      const double hp = support(p, d4).value;
      CHECK_THAT(hs, Catch::Matchers::WithinAbs(hp, 1e-7));
      // And the polygon vertices realize the same maxima.
      double hv = -1e30;
      for (const auto& v : sh.vertices) hv = std::max(hv, d2(0) * v[0] + d2(1) * v[1]);
      CHECK_THAT(hv, Catch::Matchers::WithinAbs(hp, 1e-6));
    }
  }
}

TEST_CASE("membership reports the most violated row", "[polytope]") {
  const HPolyhedron square = canonicalize(unit_square());
  Eigen::VectorXd inside(2), outside(2);
  inside << 0.5, 0.5;
  outside << 1.4, 0.5;
  CHECK(contains(square, inside).inside);
  const Membership m = contains(square, outside);
  CHECK_FALSE(m.inside);
  CHECK_THAT(m.worst_violation, Catch::Matchers::WithinAbs(0.4, 1e-12));
  REQUIRE(m.worst_row >= 0);
  CHECK_THAT(square.a(m.worst_row, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("inflate grows the polytope by a coordinate box", "[polytope]") {
  const HPolyhedron square = canonicalize(unit_square());
  Eigen::VectorXd deltas(2);
  deltas << 0.1, 0.2;
  const HPolyhedron grown = inflate(square, deltas);
  Eigen::VectorXd probe(2);
  probe << 1.09, -0.19;
  CHECK(contains(grown, probe).inside);
  probe << 1.11, 0.5;
  CHECK_FALSE(contains(grown, probe).inside);
}

TEST_CASE("polytope CSV round trips bit for bit", "[polytope]") {
  HPolyhedron p = canonicalize(unit_square());
  Eigen::VectorXd eq(2);
  eq << 1, -1;
  p.append_eq(eq, 0.125);
  const std::string text =
      write_polytope_csv(p, {{"variant", "free"}, {"note", "round trip"}});
  const PolytopeCsv parsed = read_polytope_csv(text);
  CHECK(parsed.meta.at("variant") == "free");
  CHECK(parsed.meta.at("note") == "round trip");
  REQUIRE(parsed.poly.vars == p.vars);
  CHECK(parsed.poly.a == p.a);
  CHECK(parsed.poly.b == p.b);
  CHECK(parsed.poly.c == p.c);
  CHECK(parsed.poly.d == p.d);
  CHECK(write_polytope_csv(parsed.poly, {{"variant", "free"}, {"note", "round trip"}}) ==
        text);
}

TEST_CASE("empty polyhedra serialize with their flag", "[polytope]") {
  HPolyhedron p = HPolyhedron::over({"x"});
  p.flagged_empty = true;
  const std::string text = write_polytope_csv(p);
  const PolytopeCsv parsed = read_polytope_csv(text);
  CHECK(parsed.poly.flagged_empty);
}

TEST_CASE("CSV parse errors are data errors", "[polytope]") {
  auto expect_data_error = [](const std::string& text) {
    try {
      read_polytope_csv(text);
      FAIL("expected a data error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::data);
    }
  };
  expect_data_error("");                           // no header
  expect_data_error("var:x,rhs\n1\n");             // wrong field count
  expect_data_error("var:x,rhs\n1,abc\n");         // non-numeric
  expect_data_error("x,rhs\n1,1\n");               // malformed header
}
