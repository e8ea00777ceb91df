#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "flexor/sampler.hpp"

#include "support/cases.hpp"
#include "support/oracles.hpp"

using namespace flexor;

namespace {

// Feasible-set variable layout of a case without building an operating point.
HPolyhedron var_shape(const GridCase& gc) {
  return HPolyhedron::over(detail::feasible_var_names(gc));
}

Eigen::VectorXd flow_direction(const GridCase& gc, double cp, double cq) {
  const HPolyhedron shape = var_shape(gc);
  Eigen::VectorXd d(2);
  d << cp, cq;
  return coupling_objective_x(shape, standard_coupling_pq(gc), d);
}

}  // namespace

TEST_CASE("slp reaches the two-bus import extremes", "[sampler]") {
  // Purely reactive line: active losses vanish, so the import equals
  // load minus feed-in exactly at any AC solution.
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.3);
  const CouplingSpec coupling = standard_coupling_pq(gc);

  SECTION("minimum import runs the generator at full feed-in") {
    const AcSample s = slp_optimize(gc, linear_slp_objective(flow_direction(gc, 1, 0)),
                                    SlpPins{}, coupling);
    REQUIRE(s.converged);
    CHECK_THAT(s.z(0), Catch::Matchers::WithinAbs(0.2, 2e-6));
    CHECK_THAT(s.pg(0), Catch::Matchers::WithinAbs(0.3, 2e-6));
  }

  SECTION("maximum import curtails the generator to zero") {
    const AcSample s = slp_optimize(gc, linear_slp_objective(flow_direction(gc, -1, 0)),
                                    SlpPins{}, coupling);
    REQUIRE(s.converged);
    CHECK_THAT(s.z(0), Catch::Matchers::WithinAbs(0.5, 2e-6));
    CHECK_THAT(s.pg(0), Catch::Matchers::WithinAbs(0.0, 2e-6));

    // Cross-check the solved state against the closed-form feeder solution.
    const oracles::TwoBusSolution ref = oracles::two_bus_bisection(-10.0, 0.5);
    CHECK_THAT(s.state.v(1), Catch::Matchers::WithinAbs(ref.v2, 1e-6));
    CHECK_THAT(s.state.theta(1), Catch::Matchers::WithinAbs(ref.theta2, 1e-6));
  }
}

TEST_CASE("converged samples satisfy the certification contract", "[sampler]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.3);
  const CouplingSpec coupling = standard_coupling_pq(gc);
  const AcSample s = slp_optimize(gc, linear_slp_objective(flow_direction(gc, -1, 0)),
                                  SlpPins{}, coupling);
  REQUIRE(s.converged);
  CHECK(s.mismatch <= 1e-8);

  // Boundary references are held exactly by the restoration solve.
  const int b = gc.index_of(1);
  CHECK(s.state.v(b) == 1.0);
  CHECK(s.state.theta(b) == 0.0);

  // Nonlinear inequality feasibility at the final state.
  const AdmittanceMatrix y = build_admittance(gc);
  const DsoFeasibleSet fin = build_feasible_set(gc, linearize(gc, y, s.state));
  CHECK((fin.poly.a * fin.anchor - fin.poly.b).maxCoeff() <= tol::sample_cert);

  const Generator& gen = gc.generators.front();
  CHECK(s.pg(0) >= -1e-9);
  CHECK(s.pg(0) <= gen.f_max + 1e-9);
  CHECK(std::abs(s.qg(0)) <= s.pg(0) / gen.alpha + 1e-9);
}

TEST_CASE("a zero objective keeps the starting setpoints", "[sampler]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.3);
  const CouplingSpec coupling = standard_coupling_pq(gc);
  const HPolyhedron shape = var_shape(gc);

  SlpOptions opt;
  opt.start_pg = Eigen::VectorXd::Constant(1, 0.1);
  opt.start_qg = Eigen::VectorXd::Zero(1);
  const AcSample s =
      slp_optimize(gc, linear_slp_objective(Eigen::VectorXd::Zero(shape.dim())),
                   SlpPins{}, coupling, opt);
  REQUIRE(s.converged);
  CHECK_THAT(s.pg(0), Catch::Matchers::WithinAbs(0.1, 1e-9));
  CHECK_THAT(s.qg(0), Catch::Matchers::WithinAbs(0.0, 1e-9));

  // Reported coupling values are the AC values of the solved state.
  const Eigen::VectorXd z = coupling_values_ac(gc, coupling, s.state);
  CHECK((s.z - z).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK_THAT(s.z(0), Catch::Matchers::WithinAbs(0.4, 1e-8));
}

TEST_CASE("soft pins land on reachable values", "[sampler]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.3);
  const CouplingSpec coupling = standard_coupling_pq(gc);
  SlpPins pins;
  pins.extra.emplace_back("p_1_2", 0.35);
  const AcSample s = slp_optimize(gc, linear_slp_objective(flow_direction(gc, 0, -1)),
                                  pins, coupling);
  REQUIRE(s.converged);
  CHECK(s.pinned);
  CHECK_THAT(s.z(0), Catch::Matchers::WithinAbs(0.35, 1e-4));
  // Maximizing reactive import drives the generator toward capacitive
  // support at the cone edge.
  CHECK(s.z(1) > 0.0);
}

TEST_CASE("the operating point maximizes feed-in at zero reactive effort",
          "[sampler]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.3);
  const OperatingPoint op = compute_operating_point(gc);

  const int k2 = gc.index_of(2);
  CHECK_THAT(op.injection.p(k2), Catch::Matchers::WithinAbs(-0.2, 1e-6));
  CHECK_THAT(op.injection.q(k2), Catch::Matchers::WithinAbs(0.0, 1e-6));

  const oracles::TwoBusSolution ref = oracles::two_bus_bisection(-10.0, 0.2);
  CHECK_THAT(op.state.v(k2), Catch::Matchers::WithinAbs(ref.v2, 1e-6));
  CHECK_THAT(op.state.theta(k2), Catch::Matchers::WithinAbs(ref.theta2, 1e-6));
}

TEST_CASE("boundary sampling fills a hull that matches the linearized region",
          "[sampler]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.3);
  const CouplingSpec coupling = standard_coupling_pq(gc);
  const SampledFor sampled = sample_boundary(gc, coupling, 5);
  CHECK(sampled.samples.size() == 8 + 2 * 5);
  int converged = 0;
  for (const AcSample& s : sampled.samples) converged += s.converged ? 1 : 0;
  CHECK(converged >= 16);
  REQUIRE(sampled.hull.size() >= 3);

  const OperatingPoint op = compute_operating_point(gc);
  const DsoFeasibleSet set = build_feasible_set(gc, op);
  const ForResult res = compute_for(set, coupling);
  const CompareReport rep = compare_for(res, sampled, 0.02);
  CHECK(rep.samples_total == static_cast<int>(sampled.samples.size()));
  CHECK(rep.samples_converged == converged);
  CHECK(rep.containment_fraction ==
        static_cast<double>(rep.samples_inside) / rep.samples_converged);

  // This case swings the full feeder range, so linearization curvature is
  // large and part of the AC boundary pokes outside the linearized region;
  // the agreement contract is the inflated-hull clause and the area band.
  CHECK(rep.containment_fraction >= 0.4);
  CHECK(rep.area_linear > 0.0);
  CHECK(rep.area_sampled > 0.0);
  CHECK(rep.area_ratio >= 0.95);
  CHECK(rep.area_ratio <= 1.05);
  CHECK(rep.max_outward_distance <= 0.02);
  CHECK(rep.hull_vertices_outside_inflated == 0);

  // Every direction solve reaches its directional optimum on this case, so
  // the optimality audit stays clean; the beatable-solve mechanism itself is
  // covered by the synthetic comparison-report test.
  CHECK(rep.local_optimum_warnings == 0);
}

TEST_CASE("zero flexibility collapses the sampled region to a point",
          "[sampler]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.0);
  REQUIRE(gc.generators.empty());
  const SampledFor sampled = sample_boundary(gc, standard_coupling_pq(gc), 5);
  CHECK(sampled.samples.size() == 8);  // no spread, so no grid refinement
  REQUIRE(sampled.hull.size() == 1);
  for (const AcSample& s : sampled.samples) {
    REQUIRE(s.converged);
    CHECK_THAT(s.z(0), Catch::Matchers::WithinAbs(sampled.hull[0][0], 1e-9));
    CHECK_THAT(s.z(1), Catch::Matchers::WithinAbs(sampled.hull[0][1], 1e-9));
  }
}

TEST_CASE("an unsolvable grid raises the degenerate-sampling error",
          "[sampler]") {
  // Demand far past the loadability limit: every restoration diverges.
  const GridCase gc = cases::two_bus(6.0, 0.0, 0.0);
  CHECK_THROWS_MATCHES(sample_boundary(gc, standard_coupling_pq(gc), 5), Error,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("degenerate")));
}

TEST_CASE("comparison report is exact for identical regions", "[sampler]") {
  ForResult res;
  res.poly = HPolyhedron::over({"p_1_2", "q_1_2"});
  res.poly.a.resize(4, 2);
  res.poly.b.resize(4);
  res.poly.a << 1, 0, -1, 0, 0, 1, 0, -1;
  res.poly.b << 1, 0, 1, 0;

  SampledFor sampled;
  const double corner[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const double cost[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  for (int i = 0; i < 4; ++i) {
    AcSample s;
    s.z = Eigen::Vector2d(corner[i][0], corner[i][1]);
    s.direction = Eigen::Vector2d(cost[i][0], cost[i][1]);
    s.converged = true;
    sampled.samples.push_back(s);
    sampled.hull.push_back({corner[i][0], corner[i][1]});
  }

  CompareReport rep = compare_for(res, sampled, 0.02);
  CHECK(rep.samples_total == 4);
  CHECK(rep.samples_converged == 4);
  CHECK(rep.samples_inside == 4);
  CHECK(rep.containment_fraction == 1.0);
  CHECK_THAT(rep.area_linear, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(rep.area_ratio, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(rep.max_outward_distance == 0.0);
  CHECK(rep.hull_vertices_outside_inflated == 0);
  CHECK(rep.local_optimum_warnings == 0);

  SECTION("a beatable direction solve is counted as a local-optimum warning") {
    AcSample bad;
    bad.z = Eigen::Vector2d(0.5, 0.5);
    bad.direction = Eigen::Vector2d(1.0, 1.0);  // corner (0,0) beats this
    bad.converged = true;
    sampled.samples.push_back(bad);
    rep = compare_for(res, sampled, 0.02);
    CHECK(rep.local_optimum_warnings == 1);
  }

  SECTION("outward samples are measured by euclidean distance") {
    AcSample out;
    out.z = Eigen::Vector2d(1.3, 0.5);
    out.converged = true;
    sampled.samples.push_back(out);
    rep = compare_for(res, sampled, 0.02);
    CHECK(rep.samples_inside == 4);
    CHECK(rep.samples_converged == 5);
    CHECK_THAT(rep.max_outward_distance, Catch::Matchers::WithinAbs(0.3, 1e-12));
  }
}

TEST_CASE("ac coupling values agree with the anchor at the expansion state",
          "[sampler]") {
  const GridCase gc = cases::four_bus_two_boundary();
  const OperatingPoint op = compute_operating_point(gc);
  const DsoFeasibleSet set = build_feasible_set(gc, op);

  const CouplingSpec c7 = standard_coupling_7d(gc);
  const Eigen::VectorXd z_ac = coupling_values_ac(gc, c7, op.state);
  const Eigen::VectorXd z_anchor = anchor_coupling_values(set, c7);
  CHECK((z_ac - z_anchor).lpNorm<Eigen::Infinity>() < 1e-12);

  // Net-injection coupling values go through the admittance path.
  const GridCase single = cases::two_bus(0.5, 0.0, 0.3);
  const OperatingPoint sop = compute_operating_point(single);
  const DsoFeasibleSet sset = build_feasible_set(single, sop);
  const CouplingSpec merged = standard_coupling_merged(single);
  const Eigen::VectorXd zm_ac = coupling_values_ac(single, merged, sop.state);
  const Eigen::VectorXd zm_anchor = anchor_coupling_values(sset, merged);
  CHECK((zm_ac - zm_anchor).lpNorm<Eigen::Infinity>() < 1e-12);
  // Single interconnection: the boundary injection is that branch's flow.
  const BranchFlow f = ac_branch_flow(single, single.branches.front(), sop.state);
  CHECK_THAT(zm_ac(0), Catch::Matchers::WithinAbs(f.p, 1e-12));
  CHECK_THAT(zm_ac(1), Catch::Matchers::WithinAbs(f.q, 1e-12));
}

TEST_CASE("extreme sampling covers every coordinate and power pattern",
          "[sampler]") {
  const GridCase gc = cases::four_bus_two_boundary();
  const CouplingSpec coupling = standard_coupling_7d(gc);
  const std::vector<AcSample> samples = sample_extremes_7d(gc, coupling);

  // 14 coordinate extremes plus the 8 sign patterns over (p_1_2, p_4_3),
  // minus the 4 patterns that duplicate the active-power axis directions.
  CHECK(samples.size() == 18);
  std::vector<std::string> labels;
  for (const AcSample& s : samples) labels.push_back(s.objective);
  for (const std::string& want :
       {"min_p_1_2", "max_p_1_2", "min_v_1", "max_dtheta", "pp_1_1", "pp_-1_1"})
    CHECK(std::find(labels.begin(), labels.end(), want) != labels.end());
  CHECK(std::find(labels.begin(), labels.end(), "pp_1_0") == labels.end());

  int converged = 0;
  for (const AcSample& s : samples) converged += s.converged ? 1 : 0;
  CHECK(converged >= 15);

  // Converged extremes stay inside the slightly inflated linearized region.
  const OperatingPoint op = compute_operating_point(gc);
  const DsoFeasibleSet set = build_feasible_set(gc, op);
  const ForResult res = compute_for(set, coupling);
  const Eigen::VectorXd deltas = 0.05 * coordinate_ranges(res.poly);
  const HPolyhedron grown = inflate(res.poly, deltas);
  int violations = 0;
  for (const AcSample& s : samples) {
    if (!s.converged) continue;
    if (!contains(grown, s.z, tol::membership).inside) ++violations;
  }
  CHECK(violations == 0);
}
