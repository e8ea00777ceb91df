#pragma once

// AC power flow in polar coordinates: branch flows, bus injections, the
// analytic Jacobian, a Newton-Raphson solver with slack/PV/PQ bus types and
// the first-order Taylor expansion used by the feasible-set assembly.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexor/common.hpp"
#include "flexor/grid.hpp"

namespace flexor {

// Bus voltage magnitudes and angles in case bus order.
struct StateVector {
  Eigen::VectorXd v;
  Eigen::VectorXd theta;

  int size() const { return static_cast<int>(v.size()); }
};

// Net complex power injections per bus.
struct Injection {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
};

struct BranchFlow {
  double p = 0.0;  // active power leaving the from-side terminal
  double q = 0.0;
};

// Flow into a branch measured at the from side, including the self term:
//   p = v_f^2 g - v_f v_t (g cos d + b sin d),   d = theta_f - theta_t
//   q = -v_f^2 b - v_f v_t (g sin d - b cos d)
inline BranchFlow ac_branch_flow(const Branch& br, double v_from, double v_to,
                                 double theta_from, double theta_to) {
  const auto [g, b] = branch_admittance(br);
  const double d = theta_from - theta_to;
  const double cd = std::cos(d);
  const double sd = std::sin(d);
  BranchFlow f;
  f.p = v_from * v_from * g - v_from * v_to * (g * cd + b * sd);
  f.q = -v_from * v_from * b - v_from * v_to * (g * sd - b * cd);
  return f;
}

inline BranchFlow ac_branch_flow(const GridCase& gc, const Branch& br,
                                 const StateVector& s) {
  const int k = gc.index_of(br.from);
  const int l = gc.index_of(br.to);
  return ac_branch_flow(br, s.v(k), s.v(l), s.theta(k), s.theta(l));
}

// Net injections through the bus admittance matrix:
//   p_k = v_k sum_l v_l (G_kl cos d_kl + B_kl sin d_kl)
//   q_k = v_k sum_l v_l (G_kl sin d_kl - B_kl cos d_kl)
inline Injection ac_injections(const AdmittanceMatrix& y, const StateVector& s) {
  const int n = s.size();
  Injection inj;
  inj.p = Eigen::VectorXd::Zero(n);
  inj.q = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    double p = 0.0, q = 0.0;
    for (int l = 0; l < n; ++l) {
      const double d = s.theta(k) - s.theta(l);
      const double cd = std::cos(d);
      const double sd = std::sin(d);
      p += s.v(l) * (y.g(k, l) * cd + y.b(k, l) * sd);
      q += s.v(l) * (y.g(k, l) * sd - y.b(k, l) * cd);
    }
    inj.p(k) = s.v(k) * p;
    inj.q(k) = s.v(k) * q;
  }
  return inj;
}

// Full analytic injection Jacobian, 2n x 2n, row blocks [P; Q] against
// column blocks [theta; V].
inline Eigen::MatrixXd injection_jacobian(const AdmittanceMatrix& y,
                                          const StateVector& s) {
  const int n = s.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    // tk = p_k / v_k and sk = q_k / v_k accumulated directly.
    double tk = 0.0, sk = 0.0;
    for (int l = 0; l < n; ++l) {
      const double d = s.theta(k) - s.theta(l);
      const double cd = std::cos(d);
      const double sd = std::sin(d);
      tk += s.v(l) * (y.g(k, l) * cd + y.b(k, l) * sd);
      sk += s.v(l) * (y.g(k, l) * sd - y.b(k, l) * cd);
      if (l != k) {
        const double a = s.v(k) * s.v(l) * (y.g(k, l) * sd - y.b(k, l) * cd);
        const double c = s.v(k) * (y.g(k, l) * cd + y.b(k, l) * sd);
        const double e = s.v(k) * (y.g(k, l) * sd - y.b(k, l) * cd);
        jac(k, l) = a;                                          // dP/dtheta_l
        jac(k, n + l) = c;                                      // dP/dV_l
        jac(n + k, l) = -s.v(k) * s.v(l) * (y.g(k, l) * cd + y.b(k, l) * sd);
        jac(n + k, n + l) = e;                                  // dQ/dV_l
      }
    }
    const double vk = s.v(k);
    jac(k, k) = -vk * sk - y.b(k, k) * vk * vk;       // dP/dtheta_k
    jac(k, n + k) = tk + y.g(k, k) * vk;              // dP/dV_k
    jac(n + k, k) = vk * tk - y.g(k, k) * vk * vk;    // dQ/dtheta_k
    jac(n + k, n + k) = sk - y.b(k, k) * vk;          // dQ/dV_k
  }
  return jac;
}

enum class BusKind { slack, pv, pq };

// Per-bus solve specification. Unused setpoints are ignored for a given kind:
// slack fixes (v_set, theta_set), pv fixes (p_set, v_set), pq fixes
// (p_set, q_set).
struct BusSpec {
  BusKind kind = BusKind::pq;
  double p_set = 0.0;
  double q_set = 0.0;
  double v_set = 1.0;
  double theta_set = 0.0;
};

struct NewtonOptions {
  double tolerance = tol::newton_mismatch;
  int max_iter = tol::newton_max_iter;
};

struct NewtonResult {
  StateVector state;
  int iterations = 0;
  double mismatch = 0.0;  // final infinity norm over active equations
};

// Newton-Raphson from a flat start. Throws Error(numerical) with the last
// mismatch norm when the iteration cap is hit.
inline NewtonResult newton_solve(const GridCase& gc, const AdmittanceMatrix& y,
                                 const std::vector<BusSpec>& spec,
                                 const NewtonOptions& opt = {}) {
  const int n = static_cast<int>(gc.buses.size());
  if (static_cast<int>(spec.size()) != n)
    throw_data("bus spec size does not match case");

  StateVector s;
  s.v = Eigen::VectorXd::Ones(n);
  s.theta = Eigen::VectorXd::Zero(n);
  std::vector<int> theta_vars, v_vars, p_rows, q_rows;
  for (int k = 0; k < n; ++k) {
    switch (spec[k].kind) {
      case BusKind::slack:
        s.v(k) = spec[k].v_set;
        s.theta(k) = spec[k].theta_set;
        break;
      case BusKind::pv:
        s.v(k) = spec[k].v_set;
        theta_vars.push_back(k);
        p_rows.push_back(k);
        break;
      case BusKind::pq:
        theta_vars.push_back(k);
        v_vars.push_back(k);
        p_rows.push_back(k);
        q_rows.push_back(k);
        break;
    }
  }
  if (theta_vars.empty()) return {s, 0, 0.0};

  const int m = static_cast<int>(theta_vars.size() + v_vars.size());
  Eigen::VectorXd f(m);
  Eigen::MatrixXd jac_red(m, m);

  double mismatch = 0.0;
  for (int it = 0; it <= opt.max_iter; ++it) {
    const Injection inj = ac_injections(y, s);
    int r = 0;
    for (int k : p_rows) f(r++) = inj.p(k) - spec[k].p_set;
    for (int k : q_rows) f(r++) = inj.q(k) - spec[k].q_set;
    mismatch = f.lpNorm<Eigen::Infinity>();
    if (mismatch <= opt.tolerance) return {s, it, mismatch};
    if (it == opt.max_iter) break;

    const Eigen::MatrixXd jac = injection_jacobian(y, s);
    r = 0;
    auto fill_row = [&](int full_row) {
      int c = 0;
      for (int k : theta_vars) jac_red(r, c++) = jac(full_row, k);
      for (int k : v_vars) jac_red(r, c++) = jac(full_row, n + k);
      ++r;
    };
    for (int k : p_rows) fill_row(k);
    for (int k : q_rows) fill_row(n + k);

    const Eigen::VectorXd step = jac_red.partialPivLu().solve(-f);
    if (!step.allFinite())
      throw_numerical("newton step not finite (singular Jacobian)");
    int c = 0;
    for (int k : theta_vars) s.theta(k) += step(c++);
    for (int k : v_vars) s.v(k) += step(c++);
  }
  throw_numerical("newton did not converge within " +
                  std::to_string(opt.max_iter) +
                  " iterations (last mismatch " + format_full(mismatch) + ")");
}

// First-order Taylor anchor: state, exact injections there and the analytic
// Jacobian. The linear model is
//   p(x) ~ p0 + Jp (theta - theta0, v - v0),  similarly for q.
struct OperatingPoint {
  StateVector state;
  Injection injection;
  Eigen::MatrixXd jacobian;  // 2n x 2n, [P; Q] x [theta; V]
};

inline OperatingPoint linearize(const GridCase& gc, const AdmittanceMatrix& y,
                                const StateVector& s) {
  if (s.size() != static_cast<int>(gc.buses.size()))
    throw_data("state size does not match case");
  OperatingPoint op;
  op.state = s;
  op.injection = ac_injections(y, s);
  op.jacobian = injection_jacobian(y, s);
  return op;
}

// Affine expansion of one terminal quantity in the four local coordinates:
//   value ~ c0 + d_theta_from dth_f + d_theta_to dth_t + d_v_from dv_f + d_v_to dv_t
// where the deltas are measured from the expansion state.
struct BranchTerm {
  double c0 = 0.0;
  double d_theta_from = 0.0;
  double d_theta_to = 0.0;
  double d_v_from = 0.0;
  double d_v_to = 0.0;

  double eval(double dth_f, double dth_t, double dv_f, double dv_t) const {
    return c0 + d_theta_from * dth_f + d_theta_to * dth_t + d_v_from * dv_f +
           d_v_to * dv_t;
  }
};

struct LinearBranchFlow {
  BranchTerm p;
  BranchTerm q;
};

inline LinearBranchFlow linear_branch_flow_coeffs(const Branch& br, double v_from,
                                                  double v_to, double theta_from,
                                                  double theta_to) {
  const auto [g, b] = branch_admittance(br);
  const double d = theta_from - theta_to;
  const double cd = std::cos(d);
  const double sd = std::sin(d);
  const BranchFlow f0 = ac_branch_flow(br, v_from, v_to, theta_from, theta_to);

  LinearBranchFlow lf;
  lf.p.c0 = f0.p;
  lf.p.d_theta_from = v_from * v_to * (g * sd - b * cd);
  lf.p.d_theta_to = -lf.p.d_theta_from;
  lf.p.d_v_from = 2.0 * v_from * g - v_to * (g * cd + b * sd);
  lf.p.d_v_to = -v_from * (g * cd + b * sd);

  lf.q.c0 = f0.q;
  lf.q.d_theta_from = -v_from * v_to * (g * cd + b * sd);
  lf.q.d_theta_to = -lf.q.d_theta_from;
  lf.q.d_v_from = -2.0 * v_from * b - v_to * (g * sd - b * cd);
  lf.q.d_v_to = -v_from * (g * sd - b * cd);
  return lf;
}

inline LinearBranchFlow linear_branch_flow_coeffs(const GridCase& gc,
                                                  const Branch& br,
                                                  const StateVector& s) {
  const int k = gc.index_of(br.from);
  const int l = gc.index_of(br.to);
  return linear_branch_flow_coeffs(br, s.v(k), s.v(l), s.theta(k), s.theta(l));
}

}  // namespace flexor
