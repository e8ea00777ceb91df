#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "flexor/powerflow.hpp"

#include "support/cases.hpp"
#include "support/oracles.hpp"

using namespace flexor;

namespace {

StateVector random_state(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> vd(0.9, 1.1);
  std::uniform_real_distribution<double> td(-0.3, 0.3);
  StateVector s;
  s.v.resize(n);
  s.theta.resize(n);
  for (int k = 0; k < n; ++k) {
    s.v(k) = vd(rng);
    s.theta(k) = td(rng);
  }
  return s;
}

// Sums terminal flows of every incident branch per bus; equals the net
// injection in the zero-shunt model.
Injection bus_flow_sums(const GridCase& gc, const StateVector& s) {
  const int n = static_cast<int>(gc.buses.size());
  Injection sums;
  sums.p = Eigen::VectorXd::Zero(n);
  sums.q = Eigen::VectorXd::Zero(n);
  for (const Branch& br : gc.branches) {
    const int k = gc.index_of(br.from);
    const int l = gc.index_of(br.to);
    const BranchFlow fwd = ac_branch_flow(br, s.v(k), s.v(l), s.theta(k), s.theta(l));
    const BranchFlow rev = ac_branch_flow(br, s.v(l), s.v(k), s.theta(l), s.theta(k));
    sums.p(k) += fwd.p;
    sums.q(k) += fwd.q;
    sums.p(l) += rev.p;
    sums.q(l) += rev.q;
  }
  return sums;
}

}  // namespace

TEST_CASE("branch flow closed form on a reactive line", "[powerflow]") {
  Branch br;
  br.from = 1;
  br.to = 2;
  br.r = 0.0;
  br.x = 0.1;
  const BranchFlow f = ac_branch_flow(br, 1.0, 1.0, 0.1, 0.0);
  CHECK_THAT(f.p, Catch::Matchers::WithinAbs(10.0 * std::sin(0.1), 1e-14));
  CHECK_THAT(f.q, Catch::Matchers::WithinAbs(10.0 - 10.0 * std::cos(0.1), 1e-14));
}

TEST_CASE("branch flows sum to injections at every bus", "[powerflow]") {
  const GridCase gc = cases::three_bus();
  const AdmittanceMatrix y = build_admittance(gc);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector s = random_state(rng, 3);
    const Injection inj = ac_injections(y, s);
    const Injection sums = bus_flow_sums(gc, s);
    for (int k = 0; k < 3; ++k) {
      CHECK_THAT(inj.p(k), Catch::Matchers::WithinAbs(sums.p(k), 1e-12));
      CHECK_THAT(inj.q(k), Catch::Matchers::WithinAbs(sums.q(k), 1e-12));
    }
  }
}

TEST_CASE("uniform angle shifts leave flows and injections unchanged", "[powerflow]") {
  const GridCase gc = cases::three_bus();
  const AdmittanceMatrix y = build_admittance(gc);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector s = random_state(rng, 3);
    StateVector shifted = s;
    shifted.theta.array() += 0.37;
    const Injection a = ac_injections(y, s);
    const Injection b = ac_injections(y, shifted);
    for (int k = 0; k < 3; ++k) {
      CHECK_THAT(a.p(k), Catch::Matchers::WithinAbs(b.p(k), 1e-12));
      CHECK_THAT(a.q(k), Catch::Matchers::WithinAbs(b.q(k), 1e-12));
    }
    for (const Branch& br : gc.branches) {
      const BranchFlow fa = ac_branch_flow(gc, br, s);
      const BranchFlow fb = ac_branch_flow(gc, br, shifted);
      CHECK_THAT(fa.p, Catch::Matchers::WithinAbs(fb.p, 1e-12));
      CHECK_THAT(fa.q, Catch::Matchers::WithinAbs(fb.q, 1e-12));
    }
  }
}

TEST_CASE("analytic Jacobian matches central differences", "[powerflow]") {
  const GridCase gc = cases::three_bus();
  const AdmittanceMatrix y = build_admittance(gc);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector s = random_state(rng, 3);
    const Eigen::MatrixXd jac = injection_jacobian(y, s);
    const Eigen::MatrixXd fd = oracles::fd_injection_jacobian(y, s);
    const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
    CHECK((jac - fd).cwiseAbs().maxCoeff() / scale < 1e-6);
  }
}

TEST_CASE("newton solves the two-bus feeder", "[powerflow]") {
  const GridCase gc = cases::two_bus(0.5, 0.0, 0.0);
  const AdmittanceMatrix y = build_admittance(gc);
  std::vector<BusSpec> spec(2);
  spec[0].kind = BusKind::slack;
  spec[1].kind = BusKind::pq;
  spec[1].p_set = -0.5;
  spec[1].q_set = 0.0;

  const NewtonResult res = newton_solve(gc, y, spec);
  CHECK(res.mismatch <= 1e-10);
  CHECK(res.iterations <= 30);

  const auto oracle = oracles::two_bus_bisection(-10.0, 0.5);
  CHECK_THAT(res.state.v(1), Catch::Matchers::WithinAbs(oracle.v2, 1e-9));
  CHECK_THAT(res.state.theta(1), Catch::Matchers::WithinAbs(oracle.theta2, 1e-9));
  // Frozen oracle values for the record.
  CHECK_THAT(res.state.v(1), Catch::Matchers::WithinAbs(0.99874, 1e-4));
  CHECK_THAT(res.state.theta(1), Catch::Matchers::WithinAbs(-0.050084, 1e-4));
}

TEST_CASE("newton reports non-convergence past the loadability limit", "[powerflow]") {
  // Max transfer over x = 0.1 with the voltage free is 5 pu; ask for 20.
  const GridCase gc = cases::two_bus(20.0, 0.0, 0.0);
  const AdmittanceMatrix y = build_admittance(gc);
  std::vector<BusSpec> spec(2);
  spec[0].kind = BusKind::slack;
  spec[1].kind = BusKind::pq;
  spec[1].p_set = -20.0;
  try {
    newton_solve(gc, y, spec);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numerical);
    CHECK(std::string(e.what()).find("newton") != std::string::npos);
  }
}

TEST_CASE("newton honours PV buses and multiple slacks", "[powerflow]") {
  const GridCase gc = cases::four_bus_two_boundary();
  const AdmittanceMatrix y = build_admittance(gc);

  SECTION("PV bus holds its magnitude") {
    const GridCase tri = cases::three_bus();
    const AdmittanceMatrix ytri = build_admittance(tri);
    std::vector<BusSpec> spec(3);
    spec[0].kind = BusKind::slack;
    spec[1].kind = BusKind::pq;
    spec[1].p_set = -0.4;
    spec[1].q_set = -0.1;
    spec[2].kind = BusKind::pv;
    spec[2].p_set = 0.1;
    spec[2].v_set = 1.02;
    const NewtonResult res = newton_solve(tri, ytri, spec);
    CHECK(res.state.v(2) == 1.02);
    const Injection inj = ac_injections(ytri, res.state);
    CHECK_THAT(inj.p(2), Catch::Matchers::WithinAbs(0.1, 1e-9));
  }

  SECTION("two slack buses pin both boundary voltages") {
    std::vector<BusSpec> spec(4);
    spec[0].kind = BusKind::slack;
    spec[1].kind = BusKind::pq;
    spec[1].p_set = -0.3;
    spec[1].q_set = -0.05;
    spec[2].kind = BusKind::pq;
    spec[2].p_set = -0.2;
    spec[2].q_set = -0.05;
    spec[3].kind = BusKind::slack;
    const NewtonResult res = newton_solve(gc, y, spec);
    CHECK(res.state.v(0) == 1.0);
    CHECK(res.state.v(3) == 1.0);
    CHECK(res.state.theta(0) == 0.0);
    CHECK(res.state.theta(3) == 0.0);
    CHECK(res.mismatch <= 1e-10);
  }
}

TEST_CASE("linear branch flow matches value and finite differences", "[powerflow]") {
  Branch br;
  br.from = 1;
  br.to = 2;
  br.r = 0.02;
  br.x = 0.08;
  const double v_f = 1.03, v_t = 0.97, th_f = 0.05, th_t = -0.04;
  const LinearBranchFlow lf = linear_branch_flow_coeffs(br, v_f, v_t, th_f, th_t);
  const BranchFlow f0 = ac_branch_flow(br, v_f, v_t, th_f, th_t);
  CHECK(lf.p.c0 == f0.p);
  CHECK(lf.q.c0 == f0.q);

  const double h = 1e-6;
  auto fd = [&](double dthf, double dtht, double dvf, double dvt) {
    return ac_branch_flow(br, v_f + dvf, v_t + dvt, th_f + dthf, th_t + dtht);
  };
  CHECK_THAT((fd(h, 0, 0, 0).p - fd(-h, 0, 0, 0).p) / (2 * h),
             Catch::Matchers::WithinAbs(lf.p.d_theta_from, 1e-6));
  CHECK_THAT((fd(0, h, 0, 0).p - fd(0, -h, 0, 0).p) / (2 * h),
             Catch::Matchers::WithinAbs(lf.p.d_theta_to, 1e-6));
  CHECK_THAT((fd(0, 0, h, 0).p - fd(0, 0, -h, 0).p) / (2 * h),
             Catch::Matchers::WithinAbs(lf.p.d_v_from, 1e-6));
  CHECK_THAT((fd(0, 0, 0, h).p - fd(0, 0, 0, -h).p) / (2 * h),
             Catch::Matchers::WithinAbs(lf.p.d_v_to, 1e-6));
  CHECK_THAT((fd(h, 0, 0, 0).q - fd(-h, 0, 0, 0).q) / (2 * h),
             Catch::Matchers::WithinAbs(lf.q.d_theta_from, 1e-6));
  CHECK_THAT((fd(0, h, 0, 0).q - fd(0, -h, 0, 0).q) / (2 * h),
             Catch::Matchers::WithinAbs(lf.q.d_theta_to, 1e-6));
  CHECK_THAT((fd(0, 0, h, 0).q - fd(0, 0, -h, 0).q) / (2 * h),
             Catch::Matchers::WithinAbs(lf.q.d_v_from, 1e-6));
  CHECK_THAT((fd(0, 0, 0, h).q - fd(0, 0, 0, -h).q) / (2 * h),
             Catch::Matchers::WithinAbs(lf.q.d_v_to, 1e-6));
}

TEST_CASE("linearize packages state, injections and Jacobian", "[powerflow]") {
  const GridCase gc = cases::three_bus();
  const AdmittanceMatrix y = build_admittance(gc);
  std::mt19937_64 rng(5);
  const StateVector s = random_state(rng, 3);
  const OperatingPoint op = linearize(gc, y, s);
  const Injection inj = ac_injections(y, s);
  CHECK((op.injection.p - inj.p).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((op.jacobian - injection_jacobian(y, s)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(op.state.v == s.v);
}
