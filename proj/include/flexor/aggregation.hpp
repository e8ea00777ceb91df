#pragma once

// Feasible-set assembly and operational-region computation. The distribution
// grid's linearized constraints become an H-polyhedron over per-bus and
// per-interconnection variables; coupling coordinates (interconnection flows,
// boundary voltages, the boundary angle difference) are projected out of it
// by equality elimination plus Fourier-Motzkin, optionally after pinning the
// boundary quantities (case variants) or aggregating the flows into sums.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexor/common.hpp"
#include "flexor/grid.hpp"
#include "flexor/polytope.hpp"
#include "flexor/powerflow.hpp"

namespace flexor {

// ---------------------------------------------------------------------------
// Coupling variables

enum class CouplingKind { branch_p, branch_q, bus_v, bus_p, bus_q, angle_diff };

// One coupling coordinate (or pinned quantity). For branch kinds (a, b) is
// the interconnection's (from, to) pair; for the bus kinds, a is a boundary
// bus (bus_p/bus_q are its net injection, i.e. the total exchange); for
// angle_diff the value is theta_a - theta_b.
struct CouplingEntry {
  CouplingKind kind = CouplingKind::bus_v;
  int a = 0;
  int b = 0;

  static CouplingEntry branch_p(int from, int to) {
    return {CouplingKind::branch_p, from, to};
  }
  static CouplingEntry branch_q(int from, int to) {
    return {CouplingKind::branch_q, from, to};
  }
  static CouplingEntry bus_v(int bus) { return {CouplingKind::bus_v, bus, 0}; }
  static CouplingEntry bus_p(int bus) { return {CouplingKind::bus_p, bus, 0}; }
  static CouplingEntry bus_q(int bus) { return {CouplingKind::bus_q, bus, 0}; }
  static CouplingEntry angle_diff(int first, int second) {
    return {CouplingKind::angle_diff, first, second};
  }

  std::string name() const {
    switch (kind) {
      case CouplingKind::branch_p:
        return "p_" + std::to_string(a) + "_" + std::to_string(b);
      case CouplingKind::branch_q:
        return "q_" + std::to_string(a) + "_" + std::to_string(b);
      case CouplingKind::bus_v:
        return "v_" + std::to_string(a);
      case CouplingKind::bus_p:
        return "p_" + std::to_string(a);
      case CouplingKind::bus_q:
        return "q_" + std::to_string(a);
      case CouplingKind::angle_diff:
        return "dtheta";
    }
    return "";
  }
};

struct CouplingSpec {
  std::vector<CouplingEntry> entries;                  // FOR coordinates, in order
  std::vector<std::pair<CouplingEntry, double>> fixed; // pinned, not coordinates
};

inline void validate_coupling(const GridCase& gc, const CouplingSpec& spec) {
  int angle_refs = 0;
  std::vector<std::string> seen;
  auto check_entry = [&](const CouplingEntry& e, bool is_coordinate) {
    switch (e.kind) {
      case CouplingKind::branch_p:
      case CouplingKind::branch_q: {
        bool found = false;
        for (const Branch& br : gc.branches)
          if (br.is_interconnection && br.from == e.a && br.to == e.b) found = true;
        if (!found)
          throw_data("coupling refers to (" + std::to_string(e.a) + "," +
                     std::to_string(e.b) + ") which is not an interconnection branch");
        break;
      }
      case CouplingKind::bus_v:
      case CouplingKind::bus_p:
      case CouplingKind::bus_q: {
        if (!gc.bus(e.a).is_boundary)
          throw_data("coupling bus " + std::to_string(e.a) +
                     " is not a boundary bus");
        break;
      }
      case CouplingKind::angle_diff: {
        if (e.a == e.b)
          throw_data("angle difference needs two distinct boundary buses");
        if (!gc.bus(e.a).is_boundary || !gc.bus(e.b).is_boundary)
          throw_data("angle difference references a non-boundary bus");
        ++angle_refs;
        break;
      }
    }
    if (is_coordinate) {
      const std::string n = e.name();
      for (const std::string& s : seen)
        if (s == n) throw_data("duplicate coupling coordinate \"" + n + "\"");
      seen.push_back(n);
    }
  };
  for (const CouplingEntry& e : spec.entries) check_entry(e, true);
  for (const auto& [e, value] : spec.fixed) {
    (void)value;
    check_entry(e, false);
  }
  if (angle_refs > 1)
    throw_data("at most one angle-difference convention may be active");
}

// The standard coupling for a grid with two interconnections: per branch in
// file order (p, q, from-side v), then the boundary angle difference.
inline CouplingSpec standard_coupling_7d(const GridCase& gc) {
  const std::vector<Branch> inter = gc.interconnections();
  if (inter.size() != 2)
    throw_data("the 7-dimensional coupling needs exactly two interconnections");
  CouplingSpec spec;
  for (const Branch& br : inter) {
    spec.entries.push_back(CouplingEntry::branch_p(br.from, br.to));
    spec.entries.push_back(CouplingEntry::branch_q(br.from, br.to));
    spec.entries.push_back(CouplingEntry::bus_v(br.from));
  }
  spec.entries.push_back(CouplingEntry::angle_diff(inter[0].from, inter[1].from));
  return spec;
}

// Total-exchange coupling for a merged grid with a single boundary bus: its
// net injection (p, q) with the voltage pinned to the reference value.
inline CouplingSpec standard_coupling_merged(const GridCase& gc) {
  const std::vector<int> bids = gc.boundary_ids();
  if (bids.size() != 1)
    throw_data("merged coupling needs exactly one boundary bus");
  CouplingSpec spec;
  spec.entries.push_back(CouplingEntry::bus_p(bids.front()));
  spec.entries.push_back(CouplingEntry::bus_q(bids.front()));
  spec.fixed.emplace_back(CouplingEntry::bus_v(bids.front()), 1.0);
  return spec;
}

// Interconnection (p, q) pairs only; the natural coupling for a grid with a
// single interconnection.
inline CouplingSpec standard_coupling_pq(const GridCase& gc) {
  const std::vector<Branch> inter = gc.interconnections();
  if (inter.empty()) throw_data("case has no interconnection branches");
  CouplingSpec spec;
  for (const Branch& br : inter) {
    spec.entries.push_back(CouplingEntry::branch_p(br.from, br.to));
    spec.entries.push_back(CouplingEntry::branch_q(br.from, br.to));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Case variants

enum class Variant { free, fixed_angle, fixed_all, merged_bus, aggregated_sum };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::free: return "free";
    case Variant::fixed_angle: return "fixed_angle";
    case Variant::fixed_all: return "fixed_all";
    case Variant::merged_bus: return "merged_bus";
    case Variant::aggregated_sum: return "aggregated_sum";
  }
  return "";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "free") return Variant::free;
  if (s == "fixed_angle") return Variant::fixed_angle;
  if (s == "fixed_all") return Variant::fixed_all;
  if (s == "merged_bus") return Variant::merged_bus;
  if (s == "aggregated_sum") return Variant::aggregated_sum;
  throw_data("unknown variant \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// Feasible set

// Linearized constraint set over named variables: per bus (pg_k, qg_k on
// generator buses), p_k, q_k, v_k, theta_k; per interconnection branch
// p_f_t, q_f_t. The anchor vector holds the operating point's own values.
struct DsoFeasibleSet {
  HPolyhedron poly;
  OperatingPoint op;
  GridCase grid;
  Eigen::VectorXd anchor;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> feasible_var_names(const GridCase& gc) {
  std::vector<std::string> names;
  for (const Bus& bus : gc.buses) {
    const std::string id = std::to_string(bus.id);
    if (gc.generator_at(bus.id) != nullptr) {
      names.push_back("pg_" + id);
      names.push_back("qg_" + id);
    }
    names.push_back("p_" + id);
    names.push_back("q_" + id);
    names.push_back("v_" + id);
    names.push_back("theta_" + id);
  }
  for (const Branch& br : gc.branches) {
    if (!br.is_interconnection) continue;
    const std::string tag = std::to_string(br.from) + "_" + std::to_string(br.to);
    names.push_back("p_" + tag);
    names.push_back("q_" + tag);
  }
  return names;
}

}  // namespace detail

// Assembles the linearized feasible set at the given operating point:
// equalities are the first-order injection model at every bus, the nodal
// composition p_k = pg_k - pd_k (generation absent on pure loads) at
// non-boundary buses, the linearized interconnection flow definitions and
// the angle anchor at the lowest-id boundary bus. Inequalities are the
// voltage band, generator bounds with the capability cone, and import-only
// interconnection flows. Operating-point violations of the inequality rows
// beyond 1e-6 are recorded as warnings.
inline DsoFeasibleSet build_feasible_set(const GridCase& gc, const OperatingPoint& op) {
  const int n = static_cast<int>(gc.buses.size());
  if (op.state.size() != n) throw_data("operating point does not match case");

  DsoFeasibleSet set;
  set.grid = gc;
  set.op = op;
  HPolyhedron poly = HPolyhedron::over(detail::feasible_var_names(gc));
  const int dim = poly.dim();

  std::vector<int> col_p(n), col_q(n), col_v(n), col_th(n);
  std::vector<int> col_pg(n, -1), col_qg(n, -1);
  for (int k = 0; k < n; ++k) {
    const std::string id = std::to_string(gc.buses[static_cast<std::size_t>(k)].id);
    col_p[static_cast<std::size_t>(k)] = poly.index_of("p_" + id);
    col_q[static_cast<std::size_t>(k)] = poly.index_of("q_" + id);
    col_v[static_cast<std::size_t>(k)] = poly.index_of("v_" + id);
    col_th[static_cast<std::size_t>(k)] = poly.index_of("theta_" + id);
    if (gc.generator_at(gc.buses[static_cast<std::size_t>(k)].id) != nullptr) {
      col_pg[static_cast<std::size_t>(k)] = poly.index_of("pg_" + id);
      col_qg[static_cast<std::size_t>(k)] = poly.index_of("qg_" + id);
    }
  }
  const std::vector<Branch> inter = gc.interconnections();

  // --- equalities
  int non_boundary = 0;
  for (const Bus& bus : gc.buses)
    if (!bus.is_boundary) ++non_boundary;
  const int me = 2 * n + 2 * non_boundary + 2 * static_cast<int>(inter.size()) + 1;
  poly.c = Eigen::MatrixXd::Zero(me, dim);
  poly.d = Eigen::VectorXd::Zero(me);
  int r = 0;

  // First-order injection model: p_k - Jp.(theta, v) = p0_k - Jp.(theta0, v0).
  const Eigen::MatrixXd& jac = op.jacobian;
  for (int k = 0; k < n; ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      const int jr = pass == 0 ? k : n + k;
      poly.c(r, pass == 0 ? col_p[static_cast<std::size_t>(k)]
                          : col_q[static_cast<std::size_t>(k)]) = 1.0;
      double rhs = pass == 0 ? op.injection.p(k) : op.injection.q(k);
      for (int j = 0; j < n; ++j) {
        poly.c(r, col_th[static_cast<std::size_t>(j)]) = -jac(jr, j);
        poly.c(r, col_v[static_cast<std::size_t>(j)]) = -jac(jr, n + j);
        rhs -= jac(jr, j) * op.state.theta(j) + jac(jr, n + j) * op.state.v(j);
      }
      poly.d(r) = rhs;
      ++r;
    }
  }

  // Nodal composition at non-boundary buses.
  for (int k = 0; k < n; ++k) {
    const Bus& bus = gc.buses[static_cast<std::size_t>(k)];
    if (bus.is_boundary) continue;
    poly.c(r, col_p[static_cast<std::size_t>(k)]) = 1.0;
    if (col_pg[static_cast<std::size_t>(k)] >= 0)
      poly.c(r, col_pg[static_cast<std::size_t>(k)]) = -1.0;
    poly.d(r) = -bus.p_demand;
    ++r;
    poly.c(r, col_q[static_cast<std::size_t>(k)]) = 1.0;
    if (col_qg[static_cast<std::size_t>(k)] >= 0)
      poly.c(r, col_qg[static_cast<std::size_t>(k)]) = -1.0;
    poly.d(r) = -bus.q_demand;
    ++r;
  }

  // Linearized interconnection flow definitions.
  for (const Branch& br : inter) {
    const int f = gc.index_of(br.from);
    const int t = gc.index_of(br.to);
    const LinearBranchFlow lf = linear_branch_flow_coeffs(gc, br, op.state);
    const std::string tag = std::to_string(br.from) + "_" + std::to_string(br.to);
    const BranchTerm* terms[2] = {&lf.p, &lf.q};
    const std::string names[2] = {"p_" + tag, "q_" + tag};
    for (int pass = 0; pass < 2; ++pass) {
      const BranchTerm& term = *terms[pass];
      poly.c(r, poly.index_of(names[pass])) = 1.0;
      poly.c(r, col_th[static_cast<std::size_t>(f)]) -= term.d_theta_from;
      poly.c(r, col_th[static_cast<std::size_t>(t)]) -= term.d_theta_to;
      poly.c(r, col_v[static_cast<std::size_t>(f)]) -= term.d_v_from;
      poly.c(r, col_v[static_cast<std::size_t>(t)]) -= term.d_v_to;
      poly.d(r) = term.c0 - term.d_theta_from * op.state.theta(f) -
                  term.d_theta_to * op.state.theta(t) -
                  term.d_v_from * op.state.v(f) - term.d_v_to * op.state.v(t);
      ++r;
    }
  }

  // Angle anchor at the lowest-id boundary bus.
  const std::vector<int> bids = gc.boundary_ids();
  if (bids.empty()) throw_data("case has no boundary bus to anchor the angle");
  poly.c(r, col_th[static_cast<std::size_t>(gc.index_of(bids.front()))]) = 1.0;
  poly.d(r) = 0.0;
  ++r;

  // --- inequalities
  int gens = static_cast<int>(gc.generators.size());
  const int mi = 2 * n + 5 * gens + static_cast<int>(inter.size());
  poly.a = Eigen::MatrixXd::Zero(mi, dim);
  poly.b = Eigen::VectorXd::Zero(mi);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(mi));
  r = 0;

  for (int k = 0; k < n; ++k) {
    const Bus& bus = gc.buses[static_cast<std::size_t>(k)];
    poly.a(r, col_v[static_cast<std::size_t>(k)]) = 1.0;
    poly.b(r) = bus.v_max;
    labels.push_back("v_" + std::to_string(bus.id) + " upper bound");
    ++r;
    poly.a(r, col_v[static_cast<std::size_t>(k)]) = -1.0;
    poly.b(r) = -bus.v_min;
    labels.push_back("v_" + std::to_string(bus.id) + " lower bound");
    ++r;
  }
  for (const Generator& gen : gc.generators) {
    const int k = gc.index_of(gen.bus);
    const int cp = col_pg[static_cast<std::size_t>(k)];
    const int cq = col_qg[static_cast<std::size_t>(k)];
    const std::string id = std::to_string(gen.bus);
    poly.a(r, cp) = 1.0;
    poly.b(r) = gen.f_max;
    labels.push_back("pg_" + id + " feed-in limit");
    ++r;
    poly.a(r, cp) = -1.0;
    poly.b(r) = 0.0;
    labels.push_back("pg_" + id + " non-negativity");
    ++r;
    poly.a(r, cp) = 1.0;
    poly.b(r) = gen.s_max * std::cos(gen.alpha);
    labels.push_back("pg_" + id + " apparent-power cap");
    ++r;
    poly.a(r, cq) = gen.alpha;
    poly.a(r, cp) = -1.0;
    poly.b(r) = 0.0;
    labels.push_back("qg_" + id + " capability cone upper");
    ++r;
    poly.a(r, cq) = -gen.alpha;
    poly.a(r, cp) = -1.0;
    poly.b(r) = 0.0;
    labels.push_back("qg_" + id + " capability cone lower");
    ++r;
  }
  for (const Branch& br : inter) {
    const std::string tag = std::to_string(br.from) + "_" + std::to_string(br.to);
    poly.a(r, poly.index_of("p_" + tag)) = -1.0;
    poly.b(r) = 0.0;
    labels.push_back("p_" + tag + " import direction");
    ++r;
  }

  // --- anchor vector and warnings
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < n; ++k) {
    const Bus& bus = gc.buses[static_cast<std::size_t>(k)];
    x0(col_p[static_cast<std::size_t>(k)]) = op.injection.p(k);
    x0(col_q[static_cast<std::size_t>(k)]) = op.injection.q(k);
    x0(col_v[static_cast<std::size_t>(k)]) = op.state.v(k);
    x0(col_th[static_cast<std::size_t>(k)]) = op.state.theta(k);
    if (col_pg[static_cast<std::size_t>(k)] >= 0) {
      x0(col_pg[static_cast<std::size_t>(k)]) = op.injection.p(k) + bus.p_demand;
      x0(col_qg[static_cast<std::size_t>(k)]) = op.injection.q(k) + bus.q_demand;
    }
  }
  for (const Branch& br : inter) {
    const BranchFlow f0 = ac_branch_flow(gc, br, op.state);
    const std::string tag = std::to_string(br.from) + "_" + std::to_string(br.to);
    x0(poly.index_of("p_" + tag)) = f0.p;
    x0(poly.index_of("q_" + tag)) = f0.q;
  }
  for (int i = 0; i < mi; ++i) {
    const double excess = poly.a.row(i).dot(x0) - poly.b(i);
    if (excess > 1e-6)
      set.warnings.push_back("operating point violates " +
                             labels[static_cast<std::size_t>(i)] + " by " +
                             format_full(excess));
  }

  set.poly = std::move(poly);
  set.anchor = std::move(x0);
  return set;
}

// Adds the boundary-condition rows of the case variants: fixed_angle pins the
// boundary angle difference to zero, fixed_all additionally pins both
// boundary voltages to 1. Requires exactly two boundary buses.
inline DsoFeasibleSet apply_boundary_variant(const DsoFeasibleSet& set, Variant variant) {
  if (variant == Variant::free) return set;
  if (variant != Variant::fixed_angle && variant != Variant::fixed_all)
    throw_data("boundary variant must be free, fixed_angle or fixed_all");
  const std::vector<int> bids = set.grid.boundary_ids();
  if (bids.size() != 2)
    throw_data("variant " + std::string(variant_name(variant)) +
               " needs exactly two boundary buses");
  DsoFeasibleSet out = set;
  const std::string va = "v_" + std::to_string(bids[0]);
  const std::string vb = "v_" + std::to_string(bids[1]);
  const std::string ta = "theta_" + std::to_string(bids[0]);
  const std::string tb = "theta_" + std::to_string(bids[1]);
  if (variant == Variant::fixed_all) {
    out.poly.append_eq(out.poly.unit_row(va), 1.0);
    out.poly.append_eq(out.poly.unit_row(vb), 1.0);
  }
  Eigen::VectorXd row = out.poly.unit_row(ta);
  row(out.poly.index_of(tb)) = -1.0;
  out.poly.append_eq(row, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Operational regions

struct ForStats {
  int eq_rows_eliminated = 0;
  int ineq_rows_initial = 0;  // inequalities entering the projection
  int ineq_rows_final = 0;
  int fm_steps = 0;
  int fm_max_rows = 0;
  double wall_ms = 0.0;  // not serialized; artifacts stay byte-stable
  std::vector<std::string> warnings;
};

struct ForResult {
  HPolyhedron poly;  // over the coupling coordinates, in coupling order
  CouplingSpec coupling;
  Variant variant = Variant::free;
  Variant table_case = Variant::free;  // underlying case for aggregated_sum
  ForStats stats;
  std::string op_hash;
};

// Deterministic digest of the linearization state, recorded in artifact
// metadata so regions can be traced to the operating point that produced them.
inline std::string operating_point_hash(const OperatingPoint& op) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (const char ch : s) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
  };
  for (int k = 0; k < op.state.size(); ++k) {
    mix(format_full(op.state.v(k)));
    mix(",");
    mix(format_full(op.state.theta(k)));
    mix(";");
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

namespace detail {

// Shared projection core: eliminate equalities with the coupling coordinates
// held, Fourier-Motzkin the remaining variables, re-attach residual
// coupling-only equality rows, canonicalize, and verify boundedness of every
// coordinate. An empty set yields a flagged-empty region, not an error.
inline HPolyhedron project_coupling(const HPolyhedron& poly,
                                    const std::vector<std::string>& keep,
                                    ForStats* stats) {
  auto empty_region = [&keep] {
    HPolyhedron e = HPolyhedron::over(keep);
    e.flagged_empty = true;
    return e;
  };
  if (poly.flagged_empty) return empty_region();

  EliminationResult elim = eliminate_equalities_ex(poly, keep);
  if (stats != nullptr)
    stats->eq_rows_eliminated = poly.num_eq() - elim.reduced.num_eq();
  HPolyhedron red = std::move(elim.reduced);
  if (red.flagged_empty) return empty_region();

  // Residual equality rows involve keep variables only; set them aside for
  // the inequality-only projection and re-attach afterwards.
  const Eigen::MatrixXd res_c = red.c;
  const Eigen::VectorXd res_d = red.d;
  const std::vector<std::string> red_vars = red.vars;
  red.c.resize(0, red.dim());
  red.d.resize(0);
  if (stats != nullptr) stats->ineq_rows_initial = red.num_ineq();

  FmStats fm;
  HPolyhedron proj = fm_project(red, keep, &fm);
  if (stats != nullptr) {
    stats->fm_steps = fm.steps;
    stats->fm_max_rows = fm.max_rows;
  }
  if (proj.flagged_empty) return empty_region();

  for (int i = 0; i < static_cast<int>(res_d.size()); ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(proj.dim());
    for (int j = 0; j < static_cast<int>(red_vars.size()); ++j) {
      if (res_c(i, j) == 0.0) continue;
      row(proj.index_of(red_vars[static_cast<std::size_t>(j)])) = res_c(i, j);
    }
    proj.append_eq(row, res_d(i));
  }
  proj = canonicalize(proj);
  if (proj.flagged_empty) return empty_region();
  if (stats != nullptr) stats->ineq_rows_final = proj.num_ineq();

  for (const std::string& name : keep) {
    Eigen::VectorXd dir = proj.unit_row(name);
    for (int sign = 0; sign < 2; ++sign) {
      if (support(proj, sign == 0 ? dir : Eigen::VectorXd(-dir)).status ==
          LpStatus::unbounded)
        throw_numerical("operational region unbounded in coordinate " + name);
    }
  }
  return proj;
}

}  // namespace detail

// Projects the feasible set onto the coupling coordinates. The variant tag
// only labels the result; variant rows must already be present in the set
// (see apply_boundary_variant).
inline ForResult compute_for(const DsoFeasibleSet& set, const CouplingSpec& coupling,
                             Variant variant = Variant::free) {
  validate_coupling(set.grid, coupling);
  if (coupling.entries.empty()) throw_data("coupling has no coordinates");

  HPolyhedron poly = set.poly;
  bool have_dtheta = false;
  auto theta_col = [&poly](int bus) {
    return poly.index_of("theta_" + std::to_string(bus));
  };
  for (const CouplingEntry& e : coupling.entries) {
    if (e.kind != CouplingKind::angle_diff) continue;
    poly.append_var("dtheta");
    Eigen::VectorXd row = Eigen::VectorXd::Zero(poly.dim());
    row(poly.index_of("dtheta")) = 1.0;
    row(theta_col(e.a)) = -1.0;
    row(theta_col(e.b)) = 1.0;
    poly.append_eq(row, 0.0);
    have_dtheta = true;
  }
  for (const auto& [e, value] : coupling.fixed) {
    if (e.kind == CouplingKind::angle_diff && !have_dtheta) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(poly.dim());
      row(theta_col(e.a)) = 1.0;
      row(theta_col(e.b)) = -1.0;
      poly.append_eq(row, value);
    } else {
      poly.append_eq(poly.unit_row(e.name()), value);
    }
  }

  std::vector<std::string> keep;
  for (const CouplingEntry& e : coupling.entries) keep.push_back(e.name());

  ForResult res;
  res.coupling = coupling;
  res.variant = variant;
  res.table_case = variant;
  res.op_hash = operating_point_hash(set.op);
  res.stats.warnings = set.warnings;
  res.poly = detail::project_coupling(poly, keep, &res.stats);
  return res;
}

// Aggregated region over the total interconnection flows p_sum, q_sum after
// applying the table variant. Requires exactly two interconnections.
inline ForResult compute_sum_for(const DsoFeasibleSet& set,
                                 Variant table = Variant::free) {
  const std::vector<Branch> inter = set.grid.interconnections();
  if (inter.size() != 2)
    throw_data("aggregated region needs exactly two interconnection branches");
  const DsoFeasibleSet varset = apply_boundary_variant(set, table);

  HPolyhedron poly = varset.poly;
  poly.append_var("p_sum");
  poly.append_var("q_sum");
  for (int pass = 0; pass < 2; ++pass) {
    const std::string prefix = pass == 0 ? "p_" : "q_";
    Eigen::VectorXd row = Eigen::VectorXd::Zero(poly.dim());
    row(poly.index_of(prefix + "sum")) = 1.0;
    for (const Branch& br : inter)
      row(poly.index_of(prefix + std::to_string(br.from) + "_" +
                        std::to_string(br.to))) = -1.0;
    poly.append_eq(row, 0.0);
  }

  ForResult res;
  res.variant = Variant::aggregated_sum;
  res.table_case = table;
  res.op_hash = operating_point_hash(set.op);
  res.stats.warnings = set.warnings;
  res.poly = detail::project_coupling(poly, {"p_sum", "q_sum"}, &res.stats);
  return res;
}

// Halfspace membership against a computed region.
inline Membership for_membership(const ForResult& result, const Eigen::VectorXd& z,
                                 double eps = tol::membership) {
  if (result.poly.flagged_empty) {
    Membership m;
    m.inside = false;
    m.worst_violation = std::numeric_limits<double>::infinity();
    m.worst_row = -1;
    return m;
  }
  return contains(result.poly, z, eps);
}

// The operating point's own coupling values (the Taylor anchor) in the
// coordinate order of the spec.
inline Eigen::VectorXd anchor_coupling_values(const DsoFeasibleSet& set,
                                              const CouplingSpec& coupling) {
  Eigen::VectorXd z(static_cast<int>(coupling.entries.size()));
  for (int j = 0; j < z.size(); ++j) {
    const CouplingEntry& e = coupling.entries[static_cast<std::size_t>(j)];
    if (e.kind == CouplingKind::angle_diff) {
      z(j) = set.op.state.theta(set.grid.index_of(e.a)) -
             set.op.state.theta(set.grid.index_of(e.b));
    } else if (e.kind == CouplingKind::bus_v) {
      z(j) = set.op.state.v(set.grid.index_of(e.a));
    } else {
      z(j) = set.anchor(set.poly.index_of(e.name()));
    }
  }
  return z;
}

// Metadata block recorded with serialized regions.
inline std::vector<std::pair<std::string, std::string>> for_meta(const ForResult& res) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("variant", variant_name(res.variant));
  if (res.variant == Variant::aggregated_sum)
    meta.emplace_back("table_case", variant_name(res.table_case));
  std::string labels;
  for (std::size_t j = 0; j < res.poly.vars.size(); ++j) {
    if (j > 0) labels += ",";
    labels += res.poly.vars[j];
  }
  meta.emplace_back("coupling", labels);
  meta.emplace_back("op_hash", res.op_hash);
  return meta;
}

inline std::string write_for_csv(const ForResult& res) {
  return write_polytope_csv(res.poly, for_meta(res));
}

}  // namespace flexor
