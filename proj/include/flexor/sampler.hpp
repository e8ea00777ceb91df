#pragma once

// Nonlinear AC baseline. A successive-linear-programming optimizer walks the
// AC-feasible set (linearize, step inside a trust region, restore AC
// feasibility with Newton holding the generator setpoints, accept on merit
// decrease). On top of it: boundary sampling of 2D regions with grid
// refinement, coordinate-extreme sampling of the 7D region, the reference
// operating-point problem, and the comparison report between a sampled hull
// and a linearized region.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexor/aggregation.hpp"
#include "flexor/common.hpp"
#include "flexor/grid.hpp"
#include "flexor/polytope.hpp"
#include "flexor/powerflow.hpp"

namespace flexor {

// ---------------------------------------------------------------------------
// Samples

struct AcSample {
  Eigen::VectorXd z;          // coupling-space point at the AC solution
  StateVector state;
  Eigen::VectorXd pg, qg;     // generator setpoints, case generator order
  bool converged = false;
  bool pinned = false;        // produced with an auxiliary pinned coordinate
  std::string objective;      // direction label
  Eigen::VectorXd direction;  // coupling-space cost vector (may be empty)
  double mismatch = 0.0;
  std::string diagnostics;
};

struct SampledFor {
  std::vector<AcSample> samples;
  std::vector<std::array<double, 2>> hull;  // for 2D couplings
  int grid_refinement = 0;
};

// ---------------------------------------------------------------------------
// Coupling helpers on the nonlinear model

// Exact coupling values at an AC state.
inline Eigen::VectorXd coupling_values_ac(const GridCase& gc,
                                          const CouplingSpec& coupling,
                                          const StateVector& s) {
  Eigen::VectorXd z(static_cast<int>(coupling.entries.size()));
  for (int j = 0; j < z.size(); ++j) {
    const CouplingEntry& e = coupling.entries[static_cast<std::size_t>(j)];
    switch (e.kind) {
      case CouplingKind::branch_p:
      case CouplingKind::branch_q: {
        const Branch* found = nullptr;
        for (const Branch& br : gc.branches)
          if (br.is_interconnection && br.from == e.a && br.to == e.b) found = &br;
        if (found == nullptr) throw_data("coupling branch not found");
        const BranchFlow f = ac_branch_flow(gc, *found, s);
        z(j) = e.kind == CouplingKind::branch_p ? f.p : f.q;
        break;
      }
      case CouplingKind::bus_v:
        z(j) = s.v(gc.index_of(e.a));
        break;
      case CouplingKind::bus_p:
      case CouplingKind::bus_q: {
        const AdmittanceMatrix y = build_admittance(gc);
        const Injection inj = ac_injections(y, s);
        z(j) = e.kind == CouplingKind::bus_p ? inj.p(gc.index_of(e.a))
                                             : inj.q(gc.index_of(e.a));
        break;
      }
      case CouplingKind::angle_diff:
        z(j) = s.theta(gc.index_of(e.a)) - s.theta(gc.index_of(e.b));
        break;
    }
  }
  return z;
}

// Linear form over the feasible-set variables whose value equals the coupling
// direction c.z (used as the LP objective for direction solves).
inline Eigen::VectorXd coupling_objective_x(const HPolyhedron& poly,
                                            const CouplingSpec& coupling,
                                            const Eigen::VectorXd& c) {
  if (c.size() != static_cast<int>(coupling.entries.size()))
    throw_data("direction length does not match coupling");
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(poly.dim());
  for (int j = 0; j < c.size(); ++j) {
    const CouplingEntry& e = coupling.entries[static_cast<std::size_t>(j)];
    if (e.kind == CouplingKind::angle_diff) {
      obj(poly.index_of("theta_" + std::to_string(e.a))) += c(j);
      obj(poly.index_of("theta_" + std::to_string(e.b))) -= c(j);
    } else {
      obj(poly.index_of(e.name())) += c(j);
    }
  }
  return obj;
}

// ---------------------------------------------------------------------------
// Successive linear programming

// Smooth objective over the feasible-set variable vector.
struct SlpObjective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

inline SlpObjective linear_slp_objective(const Eigen::VectorXd& c) {
  SlpObjective obj;
  obj.value = [c](const Eigen::VectorXd& x) { return c.dot(x); };
  obj.gradient = [c](const Eigen::VectorXd&) { return c; };
  return obj;
}

// Reference and auxiliary constraints for a solve. Boundary references pin
// v = 1, theta = 0 at every boundary bus (enforced exactly through the
// restoration solve); extras pin named variables and are driven in through
// an LP penalty plus the merit function.
struct SlpPins {
  bool boundary_refs = true;
  std::vector<std::pair<std::string, double>> extra;
};

struct SlpOptions {
  double radius_init = tol::slp_radius_init;
  double radius_min = tol::slp_radius_min;
  double shrink = tol::slp_shrink;
  double expand = tol::slp_expand;
  double radius_max = 1.0;
  double step_tol = tol::slp_step;
  double mu = 1000.0;  // pin penalty weight (LP and merit)
  double feas_tol = tol::sample_cert;
  int max_iter = 150;
  Eigen::VectorXd start_pg, start_qg;  // generator order; zero when empty
};

namespace detail {

// Newton restoration: boundary buses act as slack with the reference values,
// generator buses as PQ at the given setpoints, loads as PQ. Returns the
// solved state.
inline NewtonResult restore_ac(const GridCase& gc, const AdmittanceMatrix& y,
                               const Eigen::VectorXd& pg, const Eigen::VectorXd& qg) {
  const int n = static_cast<int>(gc.buses.size());
  std::vector<BusSpec> spec(static_cast<std::size_t>(n));
  int g = 0;
  for (int k = 0; k < n; ++k) {
    const Bus& bus = gc.buses[static_cast<std::size_t>(k)];
    BusSpec& bs = spec[static_cast<std::size_t>(k)];
    if (bus.is_boundary) {
      bs.kind = BusKind::slack;
      bs.v_set = 1.0;
      bs.theta_set = 0.0;
      continue;
    }
    bs.kind = BusKind::pq;
    bs.p_set = -bus.p_demand;
    bs.q_set = -bus.q_demand;
    if (gc.generator_at(bus.id) != nullptr) {
      bs.p_set += pg(g);
      bs.q_set += qg(g);
      ++g;
    }
  }
  return newton_solve(gc, y, spec);
}

// Generator setpoints encoded in a feasible-set variable vector.
inline void extract_setpoints(const GridCase& gc, const HPolyhedron& poly,
                              const Eigen::VectorXd& x, Eigen::VectorXd& pg,
                              Eigen::VectorXd& qg) {
  const int g = static_cast<int>(gc.generators.size());
  pg.resize(g);
  qg.resize(g);
  for (int i = 0; i < g; ++i) {
    const std::string id = std::to_string(gc.generators[static_cast<std::size_t>(i)].bus);
    pg(i) = x(poly.index_of("pg_" + id));
    qg(i) = x(poly.index_of("qg_" + id));
  }
}

}  // namespace detail

// Local optimization over the AC-feasible set by successive linearization.
// Never throws for non-convergence: the returned sample carries a converged
// flag and diagnostics. The coupling argument only selects which values are
// reported as z.
inline AcSample slp_optimize(const GridCase& gc, const SlpObjective& objective,
                             const SlpPins& pins, const CouplingSpec& coupling,
                             const SlpOptions& opt = {}) {
  if (!pins.boundary_refs)
    throw_data("boundary references are required for AC sampling");
  const AdmittanceMatrix y = build_admittance(gc);
  const int gens = static_cast<int>(gc.generators.size());

  AcSample sample;
  sample.pinned = !pins.extra.empty();
  Eigen::VectorXd pg = opt.start_pg.size() == gens ? opt.start_pg
                                                   : Eigen::VectorXd::Zero(gens);
  Eigen::VectorXd qg = opt.start_qg.size() == gens ? opt.start_qg
                                                   : Eigen::VectorXd::Zero(gens);

  // Clamp the start into the generator boxes so restoration begins feasible.
  for (int i = 0; i < gens; ++i) {
    const Generator& gen = gc.generators[static_cast<std::size_t>(i)];
    pg(i) = std::min(std::max(pg(i), 0.0),
                     std::min(gen.f_max, gen.s_max * std::cos(gen.alpha)));
    const double qcap = pg(i) / gen.alpha;
    qg(i) = std::min(std::max(qg(i), -qcap), qcap);
  }

  StateVector state;
  try {
    const NewtonResult nr = detail::restore_ac(gc, y, pg, qg);
    state = nr.state;
    sample.mismatch = nr.mismatch;
  } catch (const Error& e) {
    sample.diagnostics = std::string("initial restoration failed: ") + e.what();
    sample.converged = false;
    return sample;
  }

  DsoFeasibleSet set = build_feasible_set(gc, linearize(gc, y, state));
  Eigen::VectorXd x_cur = set.anchor;

  auto pin_gap = [&](const Eigen::VectorXd& x) {
    double gap = 0.0;
    for (const auto& [name, value] : pins.extra)
      gap += std::abs(x(set.poly.index_of(name)) - value);
    return gap;
  };
  auto ineq_violation = [&](const Eigen::VectorXd& x) {
    if (set.poly.num_ineq() == 0) return 0.0;
    return (set.poly.a * x - set.poly.b).maxCoeff();
  };
  auto merit = [&](const Eigen::VectorXd& x) {
    return objective.value(x) + opt.mu * pin_gap(x);
  };

  double radius = opt.radius_init;
  double m_cur = merit(x_cur);
  std::string trace;
  int it = 0;
  bool stopped = false;

  // Curvature margins: when a restored candidate violates an inequality, the
  // row is tightened by the observed overshoot in later subproblems so the
  // next linear step lands inside. Without this the trust radius has to shrink
  // to the curvature scale and progress along a binding face crawls.
  Eigen::VectorXd margin = Eigen::VectorXd::Zero(set.poly.num_ineq());
  int margin_rejects = 0;

  for (; it < opt.max_iter; ++it) {
    // Linearized subproblem around the current AC state, with the boundary
    // references, pin penalties and the trust-region box.
    HPolyhedron lp = set.poly;
    lp.b -= margin;
    for (int bid : gc.boundary_ids()) {
      lp.append_eq(lp.unit_row("v_" + std::to_string(bid)), 1.0);
      lp.append_eq(lp.unit_row("theta_" + std::to_string(bid)), 0.0);
    }
    const int nx = lp.dim();
    Eigen::VectorXd c_lp = objective.gradient(x_cur);
    c_lp.conservativeResize(nx);

    std::vector<int> slack_cols;
    for (const auto& [name, value] : pins.extra) {
      const int pcol = lp.index_of(name);
      lp.append_var("slack_" + name);
      const int scol = lp.dim() - 1;
      slack_cols.push_back(scol);
      Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.dim());
      row(pcol) = 1.0;
      row(scol) = -1.0;
      lp.append_ineq(row, value);    // p - s <= value
      row(pcol) = -1.0;
      lp.append_ineq(row, -value);   // -p - s <= -value
      row.setZero();
      row(scol) = -1.0;
      lp.append_ineq(row, 0.0);      // s >= 0
    }
    for (int j = 0; j < nx; ++j) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(lp.dim());
      row(j) = 1.0;
      lp.append_ineq(row, x_cur(j) + radius);
      row(j) = -1.0;
      lp.append_ineq(row, -(x_cur(j) - radius));
    }
    Eigen::VectorXd c_full = Eigen::VectorXd::Zero(lp.dim());
    c_full.head(nx) = c_lp.head(nx);
    for (int scol : slack_cols) c_full(scol) = opt.mu;

    const LpSolution sol = lp_solve(lp, c_full, false);
    if (sol.status != LpStatus::optimal) {
      trace += "it " + std::to_string(it) + ": subproblem " +
               (sol.status == LpStatus::infeasible ? "infeasible" : "unbounded") +
               ", radius " + format_full(radius) + "\n";
      margin *= 0.5;  // over-tightening can empty the subproblem
      radius *= opt.shrink;
      if (radius <= opt.radius_min) {
        stopped = true;
        break;
      }
      continue;
    }
    const Eigen::VectorXd x_lp = sol.x.head(nx);
    const double step = (x_lp - x_cur).lpNorm<Eigen::Infinity>();
    if (step <= opt.step_tol) {
      stopped = true;
      break;
    }

    Eigen::VectorXd pg_new, qg_new;
    detail::extract_setpoints(gc, set.poly, x_lp, pg_new, qg_new);

    bool accepted = false;
    bool margin_updated = false;
    try {
      const NewtonResult nr = detail::restore_ac(gc, y, pg_new, qg_new);
      const DsoFeasibleSet cand = build_feasible_set(gc, linearize(gc, y, nr.state));
      const double viol = ineq_violation(cand.anchor);
      const double m_new = merit(cand.anchor);
      if (viol <= opt.feas_tol &&
          m_new < m_cur - 1e-12 * std::max(1.0, std::abs(m_cur))) {
        state = nr.state;
        set = cand;
        x_cur = set.anchor;
        pg = pg_new;
        qg = qg_new;
        m_cur = m_new;
        sample.mismatch = nr.mismatch;
        radius = std::min(radius * opt.expand, opt.radius_max);
        accepted = true;
        margin *= 0.5;  // let the margins relax as steps shrink
        trace += "it " + std::to_string(it) + ": step " + format_full(step) +
                 ", merit " + format_full(m_cur) + "\n";
      } else {
        if (viol > opt.feas_tol) {
          const Eigen::VectorXd resid = set.poly.a * cand.anchor - set.poly.b;
          for (int i = 0; i < resid.size(); ++i)
            if (resid(i) > opt.feas_tol)
              margin(i) = std::min(margin(i) + 1.1 * resid(i), 0.05);
          margin_updated = true;
        }
        trace += "it " + std::to_string(it) + ": rejected (violation " +
                 format_full(viol) + ", merit " + format_full(m_new) + ")\n";
      }
    } catch (const Error& e) {
      trace += "it " + std::to_string(it) + ": restoration failed: " + e.what() +
               "\n";
    }
    if (accepted) {
      margin_rejects = 0;
    } else {
      // A margin update retries at full radius first; only repeated failures
      // shrink the region.
      if (margin_updated && ++margin_rejects <= 2) continue;
      radius *= opt.shrink;
      if (radius <= opt.radius_min) {
        stopped = true;
        break;
      }
    }
  }

  sample.state = state;
  sample.pg = pg;
  sample.qg = qg;
  sample.z = coupling.entries.empty() ? Eigen::VectorXd()
                                      : coupling_values_ac(gc, coupling, state);
  sample.diagnostics = trace;

  // Certification: re-run the mismatch and the nonlinear inequality checks on
  // the final point; convergence is only claimed for certified points.
  const DsoFeasibleSet fin = build_feasible_set(gc, linearize(gc, y, state));
  const double viol = (fin.poly.a * fin.anchor - fin.poly.b).maxCoeff();
  sample.converged = stopped && sample.mismatch <= 1e-8 && viol <= opt.feas_tol;
  if (!stopped)
    sample.diagnostics += "iteration budget exhausted after " +
                          std::to_string(it) + " steps\n";
  return sample;
}

// ---------------------------------------------------------------------------
// Operating point

// Reference problem: maximize renewable feed-in, minimize reactive effort
// (objective sum of -c1 pg^2 + c2 qg^2) over the AC-feasible set with the
// boundary references applied, then linearize at the optimum.
inline OperatingPoint compute_operating_point(const GridCase& gc, double c1 = 1.0,
                                              double c2 = 1.0) {
  const int gens = static_cast<int>(gc.generators.size());
  const std::vector<std::string> names = detail::feasible_var_names(gc);
  HPolyhedron shape = HPolyhedron::over(names);
  std::vector<int> pg_cols, qg_cols;
  for (const Generator& gen : gc.generators) {
    pg_cols.push_back(shape.index_of("pg_" + std::to_string(gen.bus)));
    qg_cols.push_back(shape.index_of("qg_" + std::to_string(gen.bus)));
  }

  SlpObjective obj;
  obj.value = [pg_cols, qg_cols, c1, c2](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < pg_cols.size(); ++i) {
      v += -c1 * x(pg_cols[i]) * x(pg_cols[i]) + c2 * x(qg_cols[i]) * x(qg_cols[i]);
    }
    return v;
  };
  obj.gradient = [pg_cols, qg_cols, c1, c2](const Eigen::VectorXd& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (std::size_t i = 0; i < pg_cols.size(); ++i) {
      g(pg_cols[i]) = -2.0 * c1 * x(pg_cols[i]);
      g(qg_cols[i]) = 2.0 * c2 * x(qg_cols[i]);
    }
    return g;
  };

  SlpOptions opt;
  opt.start_pg.resize(gens);
  opt.start_qg = Eigen::VectorXd::Zero(gens);
  for (int i = 0; i < gens; ++i)
    opt.start_pg(i) = gc.generators[static_cast<std::size_t>(i)].f_max;

  const AcSample sample = slp_optimize(gc, obj, SlpPins{}, CouplingSpec{}, opt);
  if (!sample.converged)
    throw_numerical("operating-point optimization did not converge:\n" +
                    sample.diagnostics);
  const AdmittanceMatrix y = build_admittance(gc);
  return linearize(gc, y, sample.state);
}

// ---------------------------------------------------------------------------
// Sampling drivers

namespace detail {

// Sampling solves start from the anchor setpoints (full feed-in, no reactive
// effort), which the operating point certifies AC-feasible; a zero start can
// sit outside the voltage band on heavily loaded cases and strand the solver.
inline SlpOptions anchor_start(const GridCase& gc) {
  const int gens = static_cast<int>(gc.generators.size());
  SlpOptions opt;
  opt.start_pg.resize(gens);
  opt.start_qg = Eigen::VectorXd::Zero(gens);
  for (int i = 0; i < gens; ++i)
    opt.start_pg(i) = gc.generators[static_cast<std::size_t>(i)].f_max;
  return opt;
}

}  // namespace detail

// Boundary sampling of a 2D region: the 8 direction solves over {-1,0,1}^2,
// then a p-grid refinement fixing the first coordinate and extremizing the
// second. Solves start from the anchor setpoints. Throws when fewer than 3
// solves converge.
inline SampledFor sample_boundary(const GridCase& gc, const CouplingSpec& coupling,
                                  int n_grid = 15) {
  validate_coupling(gc, coupling);
  if (coupling.entries.size() != 2)
    throw_data("boundary sampling needs a 2-dimensional coupling");
  if (n_grid < 2) throw_data("n_grid must be at least 2");
  const std::vector<std::string> names = detail::feasible_var_names(gc);
  const HPolyhedron shape = HPolyhedron::over(names);

  SampledFor out;
  out.grid_refinement = n_grid;
  const SlpOptions opt = detail::anchor_start(gc);

  for (int cx = -1; cx <= 1; ++cx)
    for (int cy = -1; cy <= 1; ++cy) {
      if (cx == 0 && cy == 0) continue;
      Eigen::VectorXd dir(2);
      dir << cx, cy;
      const Eigen::VectorXd cobj = coupling_objective_x(shape, coupling, dir);
      AcSample s =
          slp_optimize(gc, linear_slp_objective(cobj), SlpPins{}, coupling, opt);
      s.objective = "dir_" + std::to_string(cx) + "_" + std::to_string(cy);
      s.direction = dir;
      out.samples.push_back(std::move(s));
    }

  double p_lo = std::numeric_limits<double>::infinity();
  double p_hi = -std::numeric_limits<double>::infinity();
  for (const AcSample& s : out.samples)
    if (s.converged) {
      p_lo = std::min(p_lo, s.z(0));
      p_hi = std::max(p_hi, s.z(0));
    }

  if (std::isfinite(p_lo) && p_hi > p_lo) {
    const std::string p_name = coupling.entries[0].name();
    for (int i = 0; i < n_grid; ++i) {
      const double p_fix = p_lo + (p_hi - p_lo) * i / (n_grid - 1);
      for (int sign = -1; sign <= 1; sign += 2) {
        Eigen::VectorXd dir(2);
        dir << 0, sign;
        const Eigen::VectorXd cobj = coupling_objective_x(shape, coupling, dir);
        SlpPins pins;
        pins.extra.emplace_back(p_name, p_fix);
        AcSample s =
            slp_optimize(gc, linear_slp_objective(cobj), pins, coupling, opt);
        s.objective = "grid_" + std::to_string(i) + (sign < 0 ? "_min" : "_max");
        s.direction = dir;
        out.samples.push_back(std::move(s));
      }
    }
  }

  int converged = 0;
  std::vector<std::array<double, 2>> pts;
  for (const AcSample& s : out.samples)
    if (s.converged) {
      ++converged;
      pts.push_back({s.z(0), s.z(1)});
    }
  if (converged < 3)
    throw_numerical("degenerate region: only " + std::to_string(converged) +
                    " boundary samples converged");
  out.hull = hull_2d(std::move(pts));
  return out;
}

// Coordinate-extreme sampling of the 7D region: +-e_j per coordinate plus the
// sign patterns over the two active-power coordinates, deduplicated. Solves
// start from the anchor setpoints.
inline std::vector<AcSample> sample_extremes_7d(const GridCase& gc,
                                                const CouplingSpec& coupling) {
  validate_coupling(gc, coupling);
  const int nz = static_cast<int>(coupling.entries.size());
  if (nz != 7) throw_data("extreme sampling expects the 7-dimensional coupling");
  const std::vector<std::string> names = detail::feasible_var_names(gc);
  const HPolyhedron shape = HPolyhedron::over(names);

  std::vector<std::pair<std::string, Eigen::VectorXd>> dirs;
  auto add_dir = [&dirs](const std::string& label, const Eigen::VectorXd& d) {
    for (const auto& [l, e] : dirs)
      if ((e - d).lpNorm<Eigen::Infinity>() == 0.0) return;
    dirs.emplace_back(label, d);
  };
  for (int j = 0; j < nz; ++j) {
    const std::string name = coupling.entries[static_cast<std::size_t>(j)].name();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(nz);
    d(j) = 1.0;
    add_dir("min_" + name, d);  // arg min e_j.z
    add_dir("max_" + name, Eigen::VectorXd(-d));
  }
  // Sign patterns over the two active-power coordinates (entries 0 and 3 of
  // the standard order p,q,v per interconnection).
  int p_first = -1, p_second = -1;
  for (int j = 0; j < nz; ++j)
    if (coupling.entries[static_cast<std::size_t>(j)].kind == CouplingKind::branch_p) {
      if (p_first < 0)
        p_first = j;
      else if (p_second < 0)
        p_second = j;
    }
  if (p_first < 0 || p_second < 0)
    throw_data("extreme sampling expects two active-power coupling entries");
  for (int s1 = -1; s1 <= 1; ++s1)
    for (int s2 = -1; s2 <= 1; ++s2) {
      if (s1 == 0 && s2 == 0) continue;
      Eigen::VectorXd d = Eigen::VectorXd::Zero(nz);
      d(p_first) = s1;
      d(p_second) = s2;
      add_dir("pp_" + std::to_string(s1) + "_" + std::to_string(s2), d);
    }

  std::vector<AcSample> samples;
  const SlpOptions opt = detail::anchor_start(gc);
  for (const auto& [label, d] : dirs) {
    const Eigen::VectorXd cobj = coupling_objective_x(shape, coupling, d);
    AcSample s =
        slp_optimize(gc, linear_slp_objective(cobj), SlpPins{}, coupling, opt);
    s.objective = label;
    s.direction = d;
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Comparison report

struct CompareReport {
  int samples_total = 0;
  int samples_converged = 0;
  int samples_inside = 0;
  double containment_fraction = 0.0;
  double area_sampled = 0.0;
  double area_linear = 0.0;
  double area_ratio = 0.0;           // sampled / linearized
  double max_outward_distance = 0.0; // Euclidean, from the linearized region
  int hull_vertices_outside_inflated = 0;
  double inflation_fraction = 0.0;
  int local_optimum_warnings = 0;
};

// Coordinate ranges (max - min support) of a bounded polytope.
inline Eigen::VectorXd coordinate_ranges(const HPolyhedron& poly) {
  Eigen::VectorXd r(poly.dim());
  for (int j = 0; j < poly.dim(); ++j) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(poly.dim());
    dir(j) = 1.0;
    const Support hi = support(poly, dir);
    const Support lo = support(poly, Eigen::VectorXd(-dir));
    if (hi.status != LpStatus::optimal || lo.status != LpStatus::optimal)
      throw_numerical("coordinate range undefined (empty or unbounded region)");
    r(j) = hi.value + lo.value;  // lo.value = max of -z_j = -min z_j
  }
  return r;
}

namespace detail {

// Euclidean distance from a point to a convex polygon given as CCW vertices;
// zero when inside.
inline double point_polygon_distance(const std::array<double, 2>& pt,
                                     const std::vector<std::array<double, 2>>& poly) {
  if (poly.empty()) return std::numeric_limits<double>::infinity();
  if (poly.size() == 1) {
    const double dx = pt[0] - poly[0][0];
    const double dy = pt[1] - poly[0][1];
    return std::sqrt(dx * dx + dy * dy);
  }
  bool inside = poly.size() >= 3;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    if (n == 2 && i == 1) break;  // a segment has one edge
    const double ex = b[0] - a[0];
    const double ey = b[1] - a[1];
    const double px = pt[0] - a[0];
    const double py = pt[1] - a[1];
    const double cross = ex * py - ey * px;
    if (cross < 0.0) inside = false;  // right of a CCW edge
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0.0 ? (px * ex + py * ey) / len2 : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const double dx = px - t * ex;
    const double dy = py - t * ey;
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
  }
  return inside ? 0.0 : best;
}

}  // namespace detail

// Compares a sampled 2D hull against a linearized 2D region: containment of
// converged samples and the hull-vertex check, both against the region
// inflated by a fraction of each coordinate's range, plus areas and the
// maximum outward distance from the uninflated region. The inflation band is
// the fidelity claim: a single-point linearization underestimates quadratic
// losses, so AC samples on far import-limited faces sit slightly outside the
// exact region no matter how the case is built.
inline CompareReport compare_for(const ForResult& linearized, const SampledFor& sampled,
                                 double inflation_fraction = 0.02) {
  if (linearized.poly.dim() != 2)
    throw_data("comparison expects a 2-dimensional linearized region");
  CompareReport rep;
  rep.inflation_fraction = inflation_fraction;

  const Shadow2d shadow =
      shadow_2d(linearized.poly, linearized.poly.vars[0], linearized.poly.vars[1]);
  rep.area_linear = shadow.kind == ShadowKind::polygon ? polygon_area(shadow.vertices)
                                                       : 0.0;
  rep.area_sampled = sampled.hull.size() >= 3 ? polygon_area(sampled.hull) : 0.0;
  rep.area_ratio = rep.area_linear > 0.0 ? rep.area_sampled / rep.area_linear : 0.0;

  const Eigen::VectorXd deltas = inflation_fraction * coordinate_ranges(linearized.poly);
  const HPolyhedron grown = inflate(linearized.poly, deltas);

  for (const AcSample& s : sampled.samples) {
    ++rep.samples_total;
    if (!s.converged) continue;
    ++rep.samples_converged;
    if (s.z.size() != 2) throw_data("sample dimension does not match region");
    if (contains(grown, s.z, tol::membership).inside) ++rep.samples_inside;
    rep.max_outward_distance =
        std::max(rep.max_outward_distance,
                 detail::point_polygon_distance({s.z(0), s.z(1)}, shadow.vertices));
  }
  rep.containment_fraction =
      rep.samples_converged > 0
          ? static_cast<double>(rep.samples_inside) / rep.samples_converged
          : 0.0;

  for (const auto& v : sampled.hull) {
    Eigen::VectorXd z(2);
    z << v[0], v[1];
    if (!contains(grown, z, tol::membership).inside) ++rep.hull_vertices_outside_inflated;
  }

  // Direction optimality audit over the unpinned solves: no other converged
  // sample may beat a direction's own minimizer by more than 1e-6.
  for (const AcSample& s : sampled.samples) {
    if (!s.converged || s.pinned || s.direction.size() == 0) continue;
    const double own = s.direction.dot(s.z);
    for (const AcSample& t : sampled.samples) {
      if (!t.converged || &t == &s) continue;
      if (s.direction.dot(t.z) < own - 1e-6) {
        ++rep.local_optimum_warnings;
        break;
      }
    }
  }
  return rep;
}

}  // namespace flexor
