#pragma once

// Independent oracles the unit and acceptance tests check the library
// against: finite differences for Jacobians, bisection on the two-bus
// closed form, brute-force vertex enumeration for small LPs and an LP-lift
// feasibility oracle for projections. All randomness is seeded.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "flexor/grid.hpp"
#include "flexor/linprog.hpp"
#include "flexor/polytope.hpp"
#include "flexor/powerflow.hpp"

namespace oracles {

// Central-difference Jacobian of the injection map at a state.
inline Eigen::MatrixXd fd_injection_jacobian(const flexor::AdmittanceMatrix& y,
                                             const flexor::StateVector& s,
                                             double h = 1e-6) {
  const int n = s.size();
  Eigen::MatrixXd jac(2 * n, 2 * n);
  for (int c = 0; c < 2 * n; ++c) {
    flexor::StateVector lo = s, hi = s;
    if (c < n) {
      lo.theta(c) -= h;
      hi.theta(c) += h;
    } else {
      lo.v(c - n) -= h;
      hi.v(c - n) += h;
    }
    const flexor::Injection ilo = flexor::ac_injections(y, lo);
    const flexor::Injection ihi = flexor::ac_injections(y, hi);
    for (int k = 0; k < n; ++k) {
      jac(k, c) = (ihi.p(k) - ilo.p(k)) / (2.0 * h);
      jac(n + k, c) = (ihi.q(k) - ilo.q(k)) / (2.0 * h);
    }
  }
  return jac;
}

// Two-bus feeder with a purely reactive line (g = 0, b < 0), slack at bus 1
// (v = 1, theta = 0) and a PQ load (p_d, q_d = 0) at bus 2. The closed form
// reduces to v2 = cos(theta2) and b v2 sin(theta2) = p_d; theta2 comes from
// bisection on f(t) = -b cos(t) sin(t) - p_d over [-pi/4, 0].
struct TwoBusSolution {
  double v2 = 0.0;
  double theta2 = 0.0;
};

inline TwoBusSolution two_bus_bisection(double b, double p_d) {
  auto f = [b, p_d](double t) { return -b * std::cos(t) * std::sin(t) + p_d; };
  double lo = -M_PI / 4.0, hi = 0.0;
  if (!(f(lo) < 0.0 && f(hi) >= 0.0)) throw std::runtime_error("no bracketing");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  TwoBusSolution s;
  s.theta2 = 0.5 * (lo + hi);
  s.v2 = std::cos(s.theta2);
  return s;
}

// Brute-force LP: enumerates all dim-subsets of active rows, solves the
// square system and keeps the best feasible vertex. Only valid when the
// optimum is attained at a vertex, so callers must pass bounded problems.
struct BruteLpResult {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd x;
};

inline BruteLpResult brute_force_lp_max(const flexor::HPolyhedron& poly,
                                        const Eigen::VectorXd& c) {
  const int n = poly.dim();
  const int mi = poly.num_ineq();
  const int me = poly.num_eq();
  const int m = mi + me;
  BruteLpResult best;
  if (n == 0 || m < n) return best;

  auto row_of = [&](int r) -> Eigen::VectorXd {
    return r < mi ? Eigen::VectorXd(poly.a.row(r).transpose())
                  : Eigen::VectorXd(poly.c.row(r - mi).transpose());
  };
  auto rhs_of = [&](int r) { return r < mi ? poly.b(r) : poly.d(r - mi); };

  // Iterative combinations of m choose n.
  std::vector<int> combo(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) combo[static_cast<std::size_t>(i)] = i;
  while (true) {
    Eigen::MatrixXd mat(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
      mat.row(i) = row_of(combo[static_cast<std::size_t>(i)]).transpose();
      rhs(i) = rhs_of(combo[static_cast<std::size_t>(i)]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(rhs);
      bool ok = true;
      for (int r = 0; r < mi && ok; ++r)
        if (poly.a.row(r).dot(x) > poly.b(r) + 1e-7) ok = false;
      for (int r = 0; r < me && ok; ++r)
        if (std::abs(poly.c.row(r).dot(x) - poly.d(r)) > 1e-7) ok = false;
      if (ok) {
        const double v = c.dot(x);
        if (!best.feasible || v > best.value) {
          best.feasible = true;
          best.value = v;
          best.x = x;
        }
      }
    }
    // next combination
    int i = n - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == m - n + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j)
      combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

// LP-lift membership: z is in the projection of poly onto keep iff the slice
// {y : (z, y) in poly} is feasible. Feasibility is decided with a zero
// objective after pinning the keep coordinates.
inline bool lift_membership(const flexor::HPolyhedron& poly,
                            const std::vector<std::string>& keep,
                            const Eigen::VectorXd& z) {
  flexor::HPolyhedron pinned = poly;
  for (std::size_t j = 0; j < keep.size(); ++j)
    pinned.append_eq(pinned.unit_row(keep[j]), z(static_cast<int>(j)));
  const flexor::LpSolution s =
      flexor::lp_solve(pinned, Eigen::VectorXd::Zero(pinned.dim()), false);
  return s.status == flexor::LpStatus::optimal;
}

// Random bounded polytope with a guaranteed interior point: a box plus a few
// random halfplanes shifted to keep x0 strictly feasible.
inline flexor::HPolyhedron random_polytope(std::mt19937_64& rng, int dim,
                                           int extra_rows, double box = 10.0,
                                           Eigen::VectorXd* interior = nullptr) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> slackd(0.1, 1.0);
  std::vector<std::string> names;
  for (int j = 0; j < dim; ++j) names.push_back("x" + std::to_string(j));
  flexor::HPolyhedron p = flexor::HPolyhedron::over(names);

  Eigen::VectorXd x0(dim);
  for (int j = 0; j < dim; ++j) x0(j) = coef(rng);
  if (interior != nullptr) *interior = x0;

  const int rows = 2 * dim + extra_rows;
  p.a.resize(rows, dim);
  p.b.resize(rows);
  int r = 0;
  for (int j = 0; j < dim; ++j) {
    p.a.row(r).setZero();
    p.a(r, j) = 1.0;
    p.b(r) = box;
    ++r;
    p.a.row(r).setZero();
    p.a(r, j) = -1.0;
    p.b(r) = box;
    ++r;
  }
  for (int i = 0; i < extra_rows; ++i) {
    Eigen::VectorXd row(dim);
    for (int j = 0; j < dim; ++j) row(j) = coef(rng);
    p.a.row(r) = row.transpose();
    p.b(r) = row.dot(x0) + slackd(rng);
    ++r;
  }
  return p;
}

inline Eigen::VectorXd random_direction(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd d(dim);
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int j = 0; j < dim; ++j) d(j) = normal(rng);
    norm = d.norm();
  }
  return d / norm;
}

}  // namespace oracles
