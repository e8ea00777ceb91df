#pragma once

// H-representation polytopes over named variables and the operations the
// projection pipeline needs: LP queries, canonical form, LP-based redundancy
// removal, equality elimination with an affine recovery map, Fourier-Motzkin
// projection, support functions, 2D shadows and convex hulls, CSV round trip.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexor/common.hpp"
#include "flexor/linprog.hpp"

namespace flexor {

// Closed convex set {x : a x <= b, c x = d} with one name per column.
struct HPolyhedron {
  std::vector<std::string> vars;
  Eigen::MatrixXd a;  // num_ineq x dim
  Eigen::VectorXd b;
  Eigen::MatrixXd c;  // num_eq x dim
  Eigen::VectorXd d;
  bool flagged_empty = false;

  static HPolyhedron over(std::vector<std::string> names) {
    HPolyhedron p;
    const int n = static_cast<int>(names.size());
    p.vars = std::move(names);
    p.a.resize(0, n);
    p.b.resize(0);
    p.c.resize(0, n);
    p.d.resize(0);
    return p;
  }

  int dim() const { return static_cast<int>(vars.size()); }
  int num_ineq() const { return static_cast<int>(b.size()); }
  int num_eq() const { return static_cast<int>(d.size()); }

  int index_of(const std::string& name) const {
    for (int j = 0; j < dim(); ++j)
      if (vars[j] == name) return j;
    throw_data("polyhedron has no variable \"" + name + "\"");
  }

  bool has_var(const std::string& name) const {
    for (const std::string& v : vars)
      if (v == name) return true;
    return false;
  }

  void append_ineq(const Eigen::VectorXd& row, double rhs) {
    const int m = num_ineq();
    a.conservativeResize(m + 1, dim());
    a.row(m) = row.transpose();
    b.conservativeResize(m + 1);
    b(m) = rhs;
  }

  void append_eq(const Eigen::VectorXd& row, double rhs) {
    const int m = num_eq();
    c.conservativeResize(m + 1, dim());
    c.row(m) = row.transpose();
    d.conservativeResize(m + 1);
    d(m) = rhs;
  }

  // Unit row helper for pinning or defining a single variable.
  Eigen::VectorXd unit_row(const std::string& name) const {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(dim());
    row(index_of(name)) = 1.0;
    return row;
  }

  // Appends a fresh variable as a zero column of every existing row.
  void append_var(const std::string& name) {
    if (has_var(name)) throw_data("variable \"" + name + "\" already present");
    vars.push_back(name);
    const int n = dim();
    a.conservativeResize(num_ineq(), n);
    if (num_ineq() > 0) a.col(n - 1).setZero();
    c.conservativeResize(num_eq(), n);
    if (num_eq() > 0) c.col(n - 1).setZero();
  }
};

struct LpSolution {
  LpStatus status = LpStatus::optimal;
  Eigen::VectorXd x;
  double value = 0.0;  // objective in the caller's sense
  Eigen::VectorXd ray;
};

// Optimizes objective.x over the polyhedron (minimize unless maximize).
inline LpSolution lp_solve(const HPolyhedron& poly, const Eigen::VectorXd& objective,
                           bool maximize = false) {
  if (static_cast<int>(objective.size()) != poly.dim())
    throw_data("objective length does not match polyhedron dimension");
  LpSolution out;
  if (poly.flagged_empty) {
    out.status = LpStatus::infeasible;
    out.x = Eigen::VectorXd::Zero(poly.dim());
    return out;
  }
  SimplexProblem sp;
  sp.a_ub = poly.a;
  sp.b_ub = poly.b;
  sp.a_eq = poly.c;
  sp.b_eq = poly.d;
  sp.c = maximize ? Eigen::VectorXd(-objective) : objective;
  const SimplexResult sr = simplex_solve(sp);
  out.status = sr.status;
  out.x = sr.x;
  out.ray = maximize ? Eigen::VectorXd(sr.ray) : sr.ray;
  out.value = objective.dot(out.x);
  return out;
}

struct Support {
  LpStatus status = LpStatus::optimal;  // optimal = finite support
  double value = 0.0;
  Eigen::VectorXd argmax;
};

// Support function h(dir) = max dir.x over the polyhedron.
inline Support support(const HPolyhedron& poly, const Eigen::VectorXd& dir) {
  const LpSolution s = lp_solve(poly, dir, true);
  Support out;
  out.status = s.status;
  out.value = s.value;
  out.argmax = s.x;
  return out;
}

namespace detail {

inline bool rows_close(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       double eps) {
  return (a - b).lpNorm<Eigen::Infinity>() <= eps;
}

}  // namespace detail

// Canonical form: inequality rows scaled to unit norm with coefficients below
// 1e-12 zeroed, sorted lexicographically, near-duplicates merged keeping the
// tighter right-hand side. Equality rows additionally fix the sign of their
// first nonzero coefficient. Idempotent.
inline HPolyhedron canonicalize(const HPolyhedron& poly) {
  HPolyhedron out = HPolyhedron::over(poly.vars);
  if (poly.flagged_empty) {
    out.flagged_empty = true;
    return out;
  }
  const int n = poly.dim();

  std::vector<std::pair<Eigen::VectorXd, double>> ineqs, eqs;
  for (int i = 0; i < poly.num_ineq(); ++i) {
    Eigen::VectorXd row = poly.a.row(i).transpose();
    double rhs = poly.b(i);
    const double norm = row.norm();
    if (norm <= tol::coeff_zero) {
      if (rhs < -tol::lp_feasibility) {
        out.flagged_empty = true;
        return out;
      }
      continue;  // 0 <= b is vacuous
    }
    row /= norm;
    rhs /= norm;
    for (int j = 0; j < n; ++j)
      if (std::abs(row(j)) < tol::coeff_zero) row(j) = 0.0;
    ineqs.emplace_back(std::move(row), rhs);
  }
  for (int i = 0; i < poly.num_eq(); ++i) {
    Eigen::VectorXd row = poly.c.row(i).transpose();
    double rhs = poly.d(i);
    const double norm = row.norm();
    if (norm <= tol::coeff_zero) {
      if (std::abs(rhs) > tol::lp_feasibility) {
        out.flagged_empty = true;
        return out;
      }
      continue;
    }
    row /= norm;
    rhs /= norm;
    for (int j = 0; j < n; ++j)
      if (std::abs(row(j)) < tol::coeff_zero) row(j) = 0.0;
    for (int j = 0; j < n; ++j) {
      if (row(j) == 0.0) continue;
      if (row(j) < 0.0) {
        row = -row;
        rhs = -rhs;
      }
      break;
    }
    eqs.emplace_back(std::move(row), rhs);
  }

  auto lex_less = [n](const std::pair<Eigen::VectorXd, double>& p,
                      const std::pair<Eigen::VectorXd, double>& q) {
    for (int j = 0; j < n; ++j) {
      if (p.first(j) < q.first(j)) return true;
      if (p.first(j) > q.first(j)) return false;
    }
    return p.second < q.second;
  };
  std::sort(ineqs.begin(), ineqs.end(), lex_less);
  std::sort(eqs.begin(), eqs.end(), lex_less);

  std::vector<std::pair<Eigen::VectorXd, double>> kept;
  for (auto& row : ineqs) {
    if (!kept.empty() && detail::rows_close(kept.back().first, row.first,
                                            tol::row_duplicate)) {
      kept.back().second = std::min(kept.back().second, row.second);
      continue;
    }
    kept.push_back(std::move(row));
  }
  out.a.resize(static_cast<int>(kept.size()), n);
  out.b.resize(static_cast<int>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.a.row(static_cast<int>(i)) = kept[i].first.transpose();
    out.b(static_cast<int>(i)) = kept[i].second;
  }

  std::vector<std::pair<Eigen::VectorXd, double>> kept_eq;
  for (auto& row : eqs) {
    if (!kept_eq.empty() &&
        detail::rows_close(kept_eq.back().first, row.first, tol::row_duplicate) &&
        std::abs(kept_eq.back().second - row.second) <= tol::row_duplicate)
      continue;
    kept_eq.push_back(std::move(row));
  }
  out.c.resize(static_cast<int>(kept_eq.size()), n);
  out.d.resize(static_cast<int>(kept_eq.size()));
  for (std::size_t i = 0; i < kept_eq.size(); ++i) {
    out.c.row(static_cast<int>(i)) = kept_eq[i].first.transpose();
    out.d(static_cast<int>(i)) = kept_eq[i].second;
  }
  return out;
}

namespace detail {

// Pairwise filter: each row is tested with an LP over the remaining rows; a
// row whose supporting LP stays below b_i + slack is dropped. Rows are
// visited in the current order, so the result is deterministic. An
// infeasible subproblem flags the set empty. O(m) LPs of size m. An optional
// strictly interior point recenters the subproblems so their slack basis
// starts feasible (phase 1 becomes a no-op); the drop decisions are
// unaffected because the shift cancels out of the comparison.
inline HPolyhedron dense_redundancy_filter(const HPolyhedron& poly,
                                           const Eigen::VectorXd* shift = nullptr) {
  const int m = poly.num_ineq();
  std::vector<bool> kept(static_cast<std::size_t>(m), true);
  Eigen::VectorXd b = poly.b;
  Eigen::VectorXd d = poly.d;
  if (shift != nullptr) {
    b -= poly.a * *shift;
    if (poly.num_eq() > 0) d -= poly.c * *shift;
  }

  for (int i = 0; i < m; ++i) {
    HPolyhedron rest = HPolyhedron::over(poly.vars);
    int rows = 0;
    for (int k = 0; k < m; ++k)
      if (kept[static_cast<std::size_t>(k)] && k != i) ++rows;
    rest.a.resize(rows, poly.dim());
    rest.b.resize(rows);
    int r = 0;
    for (int k = 0; k < m; ++k) {
      if (!kept[static_cast<std::size_t>(k)] || k == i) continue;
      rest.a.row(r) = poly.a.row(k);
      rest.b(r) = b(k);
      ++r;
    }
    rest.c = poly.c;
    rest.d = d;

    const LpSolution s = lp_solve(rest, poly.a.row(i).transpose(), true);
    if (s.status == LpStatus::infeasible) {
      HPolyhedron empty = HPolyhedron::over(poly.vars);
      empty.flagged_empty = true;
      return empty;
    }
    if (s.status == LpStatus::optimal && s.value <= b(i) + tol::redundancy_slack)
      kept[static_cast<std::size_t>(i)] = false;
  }

  HPolyhedron out = HPolyhedron::over(poly.vars);
  int rows = 0;
  for (bool k : kept)
    if (k) ++rows;
  out.a.resize(rows, poly.dim());
  out.b.resize(rows);
  int r = 0;
  for (int k = 0; k < m; ++k) {
    if (!kept[static_cast<std::size_t>(k)]) continue;
    out.a.row(r) = poly.a.row(k);
    out.b(r) = poly.b(k);
    ++r;
  }
  out.c = poly.c;
  out.d = poly.d;
  return out;
}

// Chebyshev-center LP for an inequality-only system. The radius is capped at
// one so unbounded sets still yield a point. Outcomes: a strictly interior
// point, proof of emptiness, or no usable interior (thin set).
struct InteriorProbe {
  enum class Outcome { interior, empty, none } outcome = Outcome::none;
  Eigen::VectorXd x;
};

inline InteriorProbe chebyshev_interior(const HPolyhedron& poly) {
  const int m = poly.num_ineq();
  const int n = poly.dim();
  Eigen::VectorXd norms(m);
  for (int i = 0; i < m; ++i) norms(i) = poly.a.row(i).norm();

  SimplexProblem sp;
  sp.a_ub.resize(m + 1, n + 1);
  sp.b_ub.resize(m + 1);
  sp.a_ub.block(0, 0, m, n) = poly.a;
  sp.a_ub.col(n).head(m) = norms;
  sp.b_ub.head(m) = poly.b;
  sp.a_ub.row(m).setZero();
  sp.a_ub(m, n) = 1.0;
  sp.b_ub(m) = 1.0;
  sp.c = Eigen::VectorXd::Zero(n + 1);
  sp.c(n) = -1.0;
  const SimplexResult sr = simplex_solve(sp);

  InteriorProbe probe;
  if (sr.status == LpStatus::infeasible) {
    probe.outcome = InteriorProbe::Outcome::empty;
    return probe;
  }
  if (sr.status != LpStatus::optimal || sr.x(n) < 1e-7) return probe;
  probe.outcome = InteriorProbe::Outcome::interior;
  probe.x = sr.x.head(n);
  return probe;
}

// Output-sensitive filter for large inequality-only systems (Clarkson). Each
// row is tested with an LP over the already-certified rows only: redundancy
// with respect to a subset implies redundancy overall. A row that survives
// its test yields a direction along which the set is left; shooting that ray
// from the strictly interior point x0 crosses some constraint first, and that
// constraint bounds a region all other rows admit, so it is certified
// non-redundant. Cost: O(m + h) LPs of size h, where h is the number of
// surviving rows. Returns nothing on numerical anomalies so the caller can
// use the dense filter instead. Deterministic: rows are visited in order and
// the ray scan keeps the smallest index on ties.
inline std::optional<HPolyhedron> clarkson_redundancy_filter(const HPolyhedron& poly,
                                                             const Eigen::VectorXd& x0) {
  const int m = poly.num_ineq();
  const int n = poly.dim();
  if ((poly.b - poly.a * x0).minCoeff() <= tol::lp_feasibility) {
    FLEXOR_LOG_DEBUG("filter: interior margin too small, dense fallback");
    return std::nullopt;
  }

  // Everything below works in coordinates centered on x0: right-hand sides
  // become the (positive) interior margins, so every E-subsystem LP starts
  // from a feasible slack basis and phase 1 never runs.
  const Eigen::VectorXd margins = poly.b - poly.a * x0;

  std::vector<char> essential(static_cast<std::size_t>(m), 0);
  std::vector<int> e_rows;  // certified rows in discovery order
  long lp_budget = 3L * m + 100;

  for (int i = 0; i < m; ++i) {
    if (essential[static_cast<std::size_t>(i)]) continue;
    for (;;) {
      if (--lp_budget < 0) {
        FLEXOR_LOG_DEBUG("filter: LP budget exhausted, dense fallback");
        return std::nullopt;
      }
      HPolyhedron esys = HPolyhedron::over(poly.vars);
      esys.a.resize(static_cast<int>(e_rows.size()), n);
      esys.b.resize(static_cast<int>(e_rows.size()));
      for (std::size_t r = 0; r < e_rows.size(); ++r) {
        esys.a.row(static_cast<int>(r)) = poly.a.row(e_rows[r]);
        esys.b(static_cast<int>(r)) = margins(e_rows[r]);
      }
      const LpSolution s = lp_solve(esys, poly.a.row(i).transpose(), true);

      // Direction that leaves the feasible set through row i's hyperplane.
      Eigen::VectorXd d;
      if (s.status == LpStatus::optimal) {
        if (s.value <= margins(i) + tol::redundancy_slack) break;  // redundant
        d = s.x;
      } else if (s.status == LpStatus::unbounded) {
        if (poly.a.row(i).dot(s.ray) <= tol::lp_pivot) {
          FLEXOR_LOG_DEBUG("filter: unbounded ray does not leave row %d", i);
          return std::nullopt;
        }
        d = s.ray;
      } else {
        return std::nullopt;  // E-subsystem infeasible cannot happen
      }

      // First constraint crossed from x0 along d. Certified rows are skipped:
      // the witness may drift past them by solver tolerances, but they cannot
      // genuinely be crossed first again. Ascending scan keeps ties on the
      // smallest index.
      int hit = -1;
      double t_min = std::numeric_limits<double>::infinity();
      const Eigen::VectorXd dens = poly.a * d;
      for (int k = 0; k < m; ++k) {
        if (essential[static_cast<std::size_t>(k)]) continue;
        if (dens(k) <= tol::lp_pivot) continue;
        const double t = margins(k) / dens(k);
        if (t < t_min) {
          t_min = t;
          hit = k;
        }
      }
      if (hit < 0) {
        FLEXOR_LOG_DEBUG("filter: ray shoot found no frontier row, dense fallback");
        return std::nullopt;
      }
      essential[static_cast<std::size_t>(hit)] = 1;
      e_rows.push_back(hit);
      if (hit == i) break;
    }
  }

  // Assemble survivors in input order; a final pairwise pass restores strict
  // minimality (ray-shoot ties can certify a row the others already imply).
  HPolyhedron out = HPolyhedron::over(poly.vars);
  int rows = 0;
  for (char k : essential)
    if (k) ++rows;
  out.a.resize(rows, n);
  out.b.resize(rows);
  int r = 0;
  for (int k = 0; k < m; ++k) {
    if (!essential[static_cast<std::size_t>(k)]) continue;
    out.a.row(r) = poly.a.row(k);
    out.b(r) = poly.b(k);
    ++r;
  }
  return dense_redundancy_filter(out, &x0);
}

}  // namespace detail

// Removes inequality rows implied by the others; the result describes the
// same set with b_i + slack drop semantics and is deterministic. Large
// inequality-only systems use the output-sensitive path, seeded by the
// supplied strictly interior point or else a Chebyshev-center LP; everything
// else (small systems, equality rows present, thin or anomalous geometry)
// uses the dense pairwise filter. An infeasible subproblem flags the set
// empty.
inline HPolyhedron redundancy_filter(const HPolyhedron& poly,
                                     const Eigen::VectorXd* interior = nullptr) {
  if (poly.flagged_empty || poly.num_ineq() == 0) return poly;
  if (poly.num_eq() == 0 && poly.num_ineq() > 24) {
    std::optional<HPolyhedron> fast;
    if (interior != nullptr &&
        (poly.b - poly.a * *interior).minCoeff() > tol::lp_feasibility) {
      fast = detail::clarkson_redundancy_filter(poly, *interior);
    } else {
      const detail::InteriorProbe probe = detail::chebyshev_interior(poly);
      if (probe.outcome == detail::InteriorProbe::Outcome::empty) {
        HPolyhedron empty = HPolyhedron::over(poly.vars);
        empty.flagged_empty = true;
        return empty;
      }
      if (probe.outcome == detail::InteriorProbe::Outcome::interior)
        fast = detail::clarkson_redundancy_filter(poly, probe.x);
      else
        FLEXOR_LOG_DEBUG("filter: no strict interior, dense fallback");
    }
    if (fast.has_value()) return *fast;
  }
  return detail::dense_redundancy_filter(poly);
}

// Affine recovery x_full = m x_reduced + c for equality elimination.
struct AffineMap {
  std::vector<std::string> full_names;
  std::vector<std::string> reduced_names;
  Eigen::MatrixXd m;
  Eigen::VectorXd c;

  Eigen::VectorXd apply(const Eigen::VectorXd& reduced) const {
    return m * reduced + c;
  }
};

namespace detail {

struct EliminationResult {
  HPolyhedron reduced;  // may retain keep-only equality rows
  AffineMap recover;
};

// Gaussian elimination over the equality rows. Pivot columns are chosen with
// the largest current coefficient among variables not in keep; rows whose
// support lies entirely inside keep survive as equality rows of the reduced
// system. Inconsistent rows flag the polyhedron empty.
inline EliminationResult eliminate_equalities_ex(const HPolyhedron& poly,
                                                 const std::vector<std::string>& keep) {
  const int n = poly.dim();
  std::vector<bool> keep_col(static_cast<std::size_t>(n), false);
  for (const std::string& name : keep)
    keep_col[static_cast<std::size_t>(poly.index_of(name))] = true;

  EliminationResult out;
  out.recover.full_names = poly.vars;

  if (poly.flagged_empty) {
    out.reduced = HPolyhedron::over(poly.vars);
    out.reduced.flagged_empty = true;
    out.recover.reduced_names = poly.vars;
    out.recover.m = Eigen::MatrixXd::Identity(n, n);
    out.recover.c = Eigen::VectorXd::Zero(n);
    return out;
  }

  // pivots: (column, row over all n columns + rhs) with the pivot coefficient
  // normalized to one.
  std::vector<std::pair<int, Eigen::VectorXd>> pivots;
  std::vector<std::pair<Eigen::VectorXd, double>> residual_eqs;
  std::vector<bool> eliminated(static_cast<std::size_t>(n), false);
  bool empty = false;

  for (int i = 0; i < poly.num_eq() && !empty; ++i) {
    Eigen::VectorXd row(n + 1);
    row.head(n) = poly.c.row(i).transpose();
    row(n) = poly.d(i);
    for (const auto& [pc, prow] : pivots) {
      const double f = row(pc);
      if (f != 0.0) row -= f * prow;
    }
    int pivot_col = -1;
    double best = tol::eq_pivot * std::max(1.0, row.head(n).lpNorm<Eigen::Infinity>());
    for (int j = 0; j < n; ++j) {
      if (keep_col[static_cast<std::size_t>(j)] || eliminated[static_cast<std::size_t>(j)])
        continue;
      if (std::abs(row(j)) > best) {
        best = std::abs(row(j));
        pivot_col = j;
      }
    }
    if (pivot_col < 0) {
      // Row involves keep variables only (or nothing).
      if (row.head(n).lpNorm<Eigen::Infinity>() <= tol::eq_pivot) {
        if (std::abs(row(n)) > tol::lp_feasibility) empty = true;
        continue;
      }
      residual_eqs.emplace_back(row.head(n), row(n));
      continue;
    }
    row /= row(pivot_col);
    for (auto& [pc, prow] : pivots) {
      const double f = prow(pivot_col);
      if (f != 0.0) prow -= f * row;
    }
    eliminated[static_cast<std::size_t>(pivot_col)] = true;
    pivots.emplace_back(pivot_col, std::move(row));
  }

  std::vector<int> survivors;
  for (int j = 0; j < n; ++j)
    if (!eliminated[static_cast<std::size_t>(j)]) survivors.push_back(j);
  const int nr = static_cast<int>(survivors.size());

  std::vector<std::string> reduced_names;
  for (int j : survivors) reduced_names.push_back(poly.vars[static_cast<std::size_t>(j)]);

  out.reduced = HPolyhedron::over(reduced_names);
  out.recover.reduced_names = reduced_names;
  out.recover.m = Eigen::MatrixXd::Zero(n, nr);
  out.recover.c = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < nr; ++r) out.recover.m(survivors[static_cast<std::size_t>(r)], r) = 1.0;
  for (const auto& [pc, prow] : pivots) {
    // x_pc = rhs - sum_j prow_j x_j over surviving columns.
    out.recover.c(pc) = prow(n);
    for (int r = 0; r < nr; ++r)
      out.recover.m(pc, r) = -prow(survivors[static_cast<std::size_t>(r)]);
  }

  if (empty) {
    out.reduced.flagged_empty = true;
    return out;
  }

  // Substitute into inequalities: a_red = a . m, b_red = b - a . c.
  out.reduced.a.resize(poly.num_ineq(), nr);
  out.reduced.b.resize(poly.num_ineq());
  for (int i = 0; i < poly.num_ineq(); ++i) {
    const Eigen::VectorXd full = poly.a.row(i).transpose();
    out.reduced.a.row(i) = (out.recover.m.transpose() * full).transpose();
    out.reduced.b(i) = poly.b(i) - full.dot(out.recover.c);
  }
  out.reduced.c.resize(static_cast<int>(residual_eqs.size()), nr);
  out.reduced.d.resize(static_cast<int>(residual_eqs.size()));
  for (std::size_t i = 0; i < residual_eqs.size(); ++i) {
    const Eigen::VectorXd full = residual_eqs[i].first;
    out.reduced.c.row(static_cast<int>(i)) =
        (out.recover.m.transpose() * full).transpose();
    out.reduced.d(static_cast<int>(i)) = residual_eqs[i].second - full.dot(out.recover.c);
  }
  out.reduced = canonicalize(out.reduced);
  return out;
}

}  // namespace detail

// Eliminates all equality rows by substitution. The reduced polyhedron keeps
// a subset of the original variables; recover maps reduced points back to
// full ones satisfying the equalities exactly.
inline std::pair<HPolyhedron, AffineMap> eliminate_equalities(const HPolyhedron& poly) {
  detail::EliminationResult r = detail::eliminate_equalities_ex(poly, {});
  if (r.reduced.num_eq() != 0)
    throw_numerical("equality elimination left residual rows");
  return {std::move(r.reduced), std::move(r.recover)};
}

// Row-count bookkeeping for one projection run.
struct FmStats {
  int steps = 0;     // variables eliminated
  int max_rows = 0;  // peak intermediate row count before filtering
};

// Fourier-Motzkin projection onto the keep variables, eliminating the others
// one at a time in greedy min(#positive x #negative) order with LP redundancy
// removal after each step. Output columns follow the keep order.
inline HPolyhedron fm_project(const HPolyhedron& poly,
                              const std::vector<std::string>& keep,
                              FmStats* stats = nullptr) {
  if (poly.num_eq() != 0)
    throw_data("fm_project requires an inequality-only system");
  for (const std::string& name : keep) poly.index_of(name);

  HPolyhedron cur = canonicalize(poly);

  // A strictly interior point seeds the output-sensitive redundancy filter.
  // Dropping the eliminated coordinate keeps it strictly interior to every
  // intermediate system, so the Chebyshev LP runs once, not per step; the
  // filter re-probes by itself if the carried margin degrades.
  std::optional<Eigen::VectorXd> interior;
  if (!cur.flagged_empty && cur.num_ineq() > 24) {
    const detail::InteriorProbe probe = detail::chebyshev_interior(cur);
    if (probe.outcome == detail::InteriorProbe::Outcome::interior)
      interior = probe.x;
  }
  cur = redundancy_filter(cur, interior ? &*interior : nullptr);

  auto is_kept = [&keep](const std::string& v) {
    return std::find(keep.begin(), keep.end(), v) != keep.end();
  };

  while (!cur.flagged_empty) {
    // Candidate variables still to eliminate.
    std::vector<int> cands;
    for (int j = 0; j < cur.dim(); ++j)
      if (!is_kept(cur.vars[static_cast<std::size_t>(j)])) cands.push_back(j);
    if (cands.empty()) break;

    // Refresh the carried interior point while the system is small; combined
    // rows can erode the margin, and probing a huge raw intermediate instead
    // would dwarf every other cost.
    if (cur.num_ineq() > 0) {
      const bool stale =
          !interior ||
          (cur.b - cur.a * *interior).minCoeff() <= 100 * tol::lp_feasibility;
      if (stale) {
        const detail::InteriorProbe probe = detail::chebyshev_interior(cur);
        if (probe.outcome == detail::InteriorProbe::Outcome::interior)
          interior = probe.x;
        else
          interior.reset();
      }
    }

    int best_var = -1;
    long best_score = 0;
    for (int j : cands) {
      long pos = 0, neg = 0;
      for (int i = 0; i < cur.num_ineq(); ++i) {
        if (cur.a(i, j) > tol::coeff_zero) ++pos;
        else if (cur.a(i, j) < -tol::coeff_zero) ++neg;
      }
      const long score = pos * neg;
      if (best_var < 0 || score < best_score) {
        best_var = j;
        best_score = score;
      }
    }

    std::vector<int> pass, pos_rows, neg_rows;
    for (int i = 0; i < cur.num_ineq(); ++i) {
      if (cur.a(i, best_var) > tol::coeff_zero) pos_rows.push_back(i);
      else if (cur.a(i, best_var) < -tol::coeff_zero) neg_rows.push_back(i);
      else pass.push_back(i);
    }
    const long total = static_cast<long>(pass.size()) +
                       static_cast<long>(pos_rows.size()) *
                           static_cast<long>(neg_rows.size());
    FLEXOR_LOG_DEBUG("fm: eliminate %s (%zu pos x %zu neg + %zu pass = %ld rows)",
                     cur.vars[static_cast<std::size_t>(best_var)].c_str(),
                     pos_rows.size(), neg_rows.size(), pass.size(), total);
    if (total > tol::fm_row_cap)
      throw_numerical("projection exceeded the intermediate row cap");
    if (stats != nullptr) {
      ++stats->steps;
      stats->max_rows = std::max(stats->max_rows, static_cast<int>(total));
    }

    HPolyhedron next = HPolyhedron::over(cur.vars);
    next.a.resize(static_cast<int>(total), cur.dim());
    next.b.resize(static_cast<int>(total));
    int r = 0;
    for (int i : pass) {
      next.a.row(r) = cur.a.row(i);
      next.b(r) = cur.b(i);
      ++r;
    }
    for (int i : pos_rows)
      for (int j : neg_rows) {
        const double wi = cur.a(i, best_var);
        const double wj = -cur.a(j, best_var);
        Eigen::VectorXd row = wj * cur.a.row(i).transpose() + wi * cur.a.row(j).transpose();
        row(best_var) = 0.0;
        next.a.row(r) = row.transpose();
        next.b(r) = wj * cur.b(i) + wi * cur.b(j);
        ++r;
      }

    // Drop the eliminated column before filtering.
    HPolyhedron dropped = HPolyhedron::over([&] {
      std::vector<std::string> names;
      for (int j = 0; j < next.dim(); ++j)
        if (j != best_var) names.push_back(next.vars[static_cast<std::size_t>(j)]);
      return names;
    }());
    dropped.a.resize(next.num_ineq(), next.dim() - 1);
    dropped.b = next.b;
    int cc = 0;
    for (int j = 0; j < next.dim(); ++j) {
      if (j == best_var) continue;
      dropped.a.col(cc++) = next.a.col(j);
    }
    if (interior) {
      Eigen::VectorXd reduced(interior->size() - 1);
      int rr = 0;
      for (int j = 0; j < static_cast<int>(interior->size()); ++j)
        if (j != best_var) reduced(rr++) = (*interior)(j);
      interior = std::move(reduced);
    }
    cur = redundancy_filter(canonicalize(dropped), interior ? &*interior : nullptr);
    FLEXOR_LOG_DEBUG("fm: filtered to %d rows", cur.num_ineq());
  }

  // Reorder columns to the requested keep order.
  HPolyhedron out = HPolyhedron::over(keep);
  out.flagged_empty = cur.flagged_empty;
  if (!cur.flagged_empty) {
    out.a.resize(cur.num_ineq(), out.dim());
    out.b = cur.b;
    out.c.resize(cur.num_eq(), out.dim());
    out.d = cur.d;
    for (int j = 0; j < out.dim(); ++j) {
      const int src = cur.index_of(keep[static_cast<std::size_t>(j)]);
      out.a.col(j) = cur.a.col(src);
      if (cur.num_eq() > 0) out.c.col(j) = cur.c.col(src);
    }
  }
  return canonicalize(out);
}

// Monotone-chain convex hull, counterclockwise, starting from the
// lexicographically smallest point; collinear points are dropped.
inline std::vector<std::array<double, 2>> hull_2d(
    std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double polygon_area(const std::vector<std::array<double, 2>>& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(twice);
}

enum class ShadowKind { polygon, segment, point, empty };

struct Shadow2d {
  ShadowKind kind = ShadowKind::empty;
  std::string var_x, var_y;
  std::vector<std::array<double, 2>> vertices;  // CCW for polygons
  HPolyhedron poly;                             // the projected 2D system
};

// Projects onto (var_x, var_y) and enumerates vertices. Equality rows are
// eliminated first; pins on the shadow coordinates survive and produce
// degenerate shadows. Throws when the shadow is unbounded.
inline Shadow2d shadow_2d(const HPolyhedron& poly, const std::string& var_x,
                          const std::string& var_y) {
  const std::vector<std::string> keep{var_x, var_y};
  detail::EliminationResult el = detail::eliminate_equalities_ex(poly, keep);

  Shadow2d out;
  out.var_x = var_x;
  out.var_y = var_y;

  HPolyhedron flat = el.reduced;
  HPolyhedron ineq_only = flat;
  ineq_only.c.resize(0, flat.dim());
  ineq_only.d.resize(0);
  HPolyhedron proj = fm_project(ineq_only, keep);
  // Re-attach surviving keep-only equality rows.
  for (int i = 0; i < flat.num_eq(); ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(2);
    row(0) = flat.c(i, flat.index_of(var_x));
    row(1) = flat.c(i, flat.index_of(var_y));
    proj.append_eq(row, flat.d(i));
  }
  proj = canonicalize(proj);
  out.poly = proj;
  if (proj.flagged_empty) {
    out.kind = ShadowKind::empty;
    return out;
  }

  for (int j = 0; j < 2; ++j)
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(2);
      dir(j) = sign;
      const Support s = support(proj, dir);
      if (s.status == LpStatus::infeasible) {
        out.kind = ShadowKind::empty;
        return out;
      }
      if (s.status == LpStatus::unbounded)
        throw_numerical("shadow unbounded in direction " + std::string(sign > 0 ? "+" : "-") +
                        (j == 0 ? var_x : var_y));
    }

  // Candidate vertices from all boundary-line pairs (equalities contribute
  // their own lines).
  std::vector<std::pair<Eigen::Vector2d, double>> lines;
  for (int i = 0; i < proj.num_ineq(); ++i)
    lines.emplace_back(Eigen::Vector2d(proj.a(i, 0), proj.a(i, 1)), proj.b(i));
  for (int i = 0; i < proj.num_eq(); ++i)
    lines.emplace_back(Eigen::Vector2d(proj.c(i, 0), proj.c(i, 1)), proj.d(i));

  auto feasible = [&proj](const Eigen::Vector2d& p) {
    for (int i = 0; i < proj.num_ineq(); ++i)
      if (proj.a(i, 0) * p(0) + proj.a(i, 1) * p(1) > proj.b(i) + 1e-8) return false;
    for (int i = 0; i < proj.num_eq(); ++i)
      if (std::abs(proj.c(i, 0) * p(0) + proj.c(i, 1) * p(1) - proj.d(i)) > 1e-8)
        return false;
    return true;
  };

  std::vector<std::array<double, 2>> candidates;
  const std::size_t nl = lines.size();
  for (std::size_t i = 0; i < nl; ++i)
    for (std::size_t j = i + 1; j < nl; ++j) {
      Eigen::Matrix2d m;
      m.row(0) = lines[i].first.transpose();
      m.row(1) = lines[j].first.transpose();
      const double det = m.determinant();
      if (std::abs(det) < 1e-10) continue;
      const Eigen::Vector2d p = m.inverse() * Eigen::Vector2d(lines[i].second, lines[j].second);
      if (feasible(p)) candidates.push_back({p(0), p(1)});
    }

  // Deduplicate within a tolerance before hulling.
  std::sort(candidates.begin(), candidates.end());
  std::vector<std::array<double, 2>> unique_pts;
  for (const auto& p : candidates) {
    bool dup = false;
    for (const auto& q : unique_pts)
      if (std::abs(p[0] - q[0]) <= 1e-8 && std::abs(p[1] - q[1]) <= 1e-8) dup = true;
    if (!dup) unique_pts.push_back(p);
  }

  out.vertices = hull_2d(unique_pts);
  if (out.vertices.size() >= 3)
    out.kind = ShadowKind::polygon;
  else if (out.vertices.size() == 2)
    out.kind = ShadowKind::segment;
  else if (out.vertices.size() == 1)
    out.kind = ShadowKind::point;
  else
    out.kind = ShadowKind::empty;
  return out;
}

struct Membership {
  bool inside = false;
  double worst_violation = 0.0;  // positive means outside
  int worst_row = -1;            // inequality row index, -1 when an equality
};

// Halfspace membership with the most violated row reported. Rows are assumed
// canonicalized (unit norms), so violations are geometric distances per row.
inline Membership contains(const HPolyhedron& poly, const Eigen::VectorXd& x,
                           double eps = tol::membership) {
  Membership out;
  if (poly.flagged_empty) {
    out.inside = false;
    out.worst_violation = std::numeric_limits<double>::infinity();
    return out;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < poly.num_ineq(); ++i) {
    const double v = poly.a.row(i).dot(x) - poly.b(i);
    if (v > worst) {
      worst = v;
      out.worst_row = i;
    }
  }
  for (int i = 0; i < poly.num_eq(); ++i) {
    const double v = std::abs(poly.c.row(i).dot(x) - poly.d(i));
    if (v > worst) {
      worst = v;
      out.worst_row = -1;
    }
  }
  if (poly.num_ineq() == 0 && poly.num_eq() == 0) worst = 0.0;
  out.worst_violation = worst;
  out.inside = worst <= eps;
  return out;
}

// Minkowski inflation by a per-coordinate box: b_i += sum_j |a_ij| delta_j.
// Equality rows widen into slabs, so degenerate polytopes gain thickness.
inline HPolyhedron inflate(const HPolyhedron& poly, const Eigen::VectorXd& deltas) {
  if (static_cast<int>(deltas.size()) != poly.dim())
    throw_data("inflation delta length does not match dimension");
  HPolyhedron out = poly;
  for (int i = 0; i < out.num_ineq(); ++i)
    out.b(i) += out.a.row(i).cwiseAbs().dot(deltas);
  for (int i = 0; i < poly.num_eq(); ++i) {
    const double width = poly.c.row(i).cwiseAbs().dot(deltas);
    out.append_ineq(poly.c.row(i), poly.d(i) + width);
    out.append_ineq(Eigen::VectorXd(-poly.c.row(i)), width - poly.d(i));
  }
  out.c.resize(0, out.dim());
  out.d.resize(0);
  return out;
}

// CSV round trip. Header names the columns (var:<name>,...,rhs); inequality
// rows are plain, equality rows carry a leading "eq" field. Optional metadata
// lines "# key=value" precede the header.
inline std::string write_polytope_csv(
    const HPolyhedron& poly,
    const std::vector<std::pair<std::string, std::string>>& meta = {}) {
  std::string out;
  for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
  if (poly.flagged_empty) out += "# empty=true\n";
  for (int j = 0; j < poly.dim(); ++j)
    out += (j ? ",var:" : "var:") + poly.vars[static_cast<std::size_t>(j)];
  out += ",rhs\n";
  for (int i = 0; i < poly.num_ineq(); ++i) {
    for (int j = 0; j < poly.dim(); ++j) out += format_full(poly.a(i, j)) + ",";
    out += format_full(poly.b(i)) + "\n";
  }
  for (int i = 0; i < poly.num_eq(); ++i) {
    out += "eq,";
    for (int j = 0; j < poly.dim(); ++j) out += format_full(poly.c(i, j)) + ",";
    out += format_full(poly.d(i)) + "\n";
  }
  return out;
}

struct PolytopeCsv {
  HPolyhedron poly;
  std::map<std::string, std::string> meta;
};

inline PolytopeCsv read_polytope_csv(const std::string& text) {
  PolytopeCsv out;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::vector<std::string> names;
  std::vector<std::pair<Eigen::VectorXd, double>> ineqs, eqs;

  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    return fields;
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.erase(body.begin());
      const auto pos = body.find('=');
      if (pos != std::string::npos)
        out.meta[body.substr(0, pos)] = body.substr(pos + 1);
      continue;
    }
    const std::vector<std::string> fields = split(line);
    if (!header_seen) {
      if (fields.size() < 2 || fields.back() != "rhs")
        throw_data("polytope CSV header must end with rhs");
      for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
        if (fields[j].rfind("var:", 0) != 0)
          throw_data("polytope CSV header fields must start with var:");
        names.push_back(fields[j].substr(4));
      }
      header_seen = true;
      continue;
    }
    const bool is_eq = fields.front() == "eq";
    const std::size_t offset = is_eq ? 1 : 0;
    if (fields.size() != names.size() + 1 + offset)
      throw_data("polytope CSV row has wrong field count");
    Eigen::VectorXd row(static_cast<int>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      try {
        row(static_cast<int>(j)) = std::stod(fields[j + offset]);
      } catch (const std::exception&) {
        throw_data("polytope CSV has a non-numeric coefficient");
      }
    }
    double rhs = 0.0;
    try {
      rhs = std::stod(fields.back());
    } catch (const std::exception&) {
      throw_data("polytope CSV has a non-numeric right-hand side");
    }
    if (is_eq)
      eqs.emplace_back(row, rhs);
    else
      ineqs.emplace_back(row, rhs);
  }
  if (!header_seen) throw_data("polytope CSV has no header");

  out.poly = HPolyhedron::over(names);
  out.poly.a.resize(static_cast<int>(ineqs.size()), out.poly.dim());
  out.poly.b.resize(static_cast<int>(ineqs.size()));
  for (std::size_t i = 0; i < ineqs.size(); ++i) {
    out.poly.a.row(static_cast<int>(i)) = ineqs[i].first.transpose();
    out.poly.b(static_cast<int>(i)) = ineqs[i].second;
  }
  out.poly.c.resize(static_cast<int>(eqs.size()), out.poly.dim());
  out.poly.d.resize(static_cast<int>(eqs.size()));
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    out.poly.c.row(static_cast<int>(i)) = eqs[i].first.transpose();
    out.poly.d(static_cast<int>(i)) = eqs[i].second;
  }
  if (out.meta.count("empty") && out.meta["empty"] == "true")
    out.poly.flagged_empty = true;
  return out;
}

}  // namespace flexor
