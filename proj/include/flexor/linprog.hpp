#pragma once

// Self-contained dense two-phase primal simplex over free variables:
//   minimize c.x  subject to  A x <= b,  E x = d.
// Free variables are split into positive parts, inequality rows get slacks,
// and phase 1 drives artificials out. Dantzig pricing switches to Bland's
// rule after 2(m+n) iterations to break cycling.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "flexor/common.hpp"

namespace flexor {

enum class LpStatus { optimal, infeasible, unbounded };

struct SimplexProblem {
  Eigen::MatrixXd a_ub;  // m1 x n
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;  // m2 x n
  Eigen::VectorXd b_eq;
  Eigen::VectorXd c;     // length n, minimized
};

struct SimplexResult {
  LpStatus status = LpStatus::optimal;
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd ray;  // descent ray in original coordinates when unbounded
};

namespace detail {

class SimplexTableau {
 public:
  explicit SimplexTableau(const SimplexProblem& p) : n_(static_cast<int>(p.c.size())) {
    const int m1 = static_cast<int>(p.b_ub.size());
    const int m2 = static_cast<int>(p.b_eq.size());
    m_ = m1 + m2;
    n_slack_ = m1;
    n_struct_ = 2 * n_ + n_slack_;
    row_dead_.assign(static_cast<std::size_t>(m_), false);

    Eigen::MatrixXd rows(m_, n_struct_);
    Eigen::VectorXd rhs(m_);
    rows.setZero();
    for (int i = 0; i < m1; ++i) {
      rows.block(i, 0, 1, n_) = p.a_ub.row(i);
      rows.block(i, n_, 1, n_) = -p.a_ub.row(i);
      rows(i, 2 * n_ + i) = 1.0;
      rhs(i) = p.b_ub(i);
    }
    for (int i = 0; i < m2; ++i) {
      rows.block(m1 + i, 0, 1, n_) = p.a_eq.row(i);
      rows.block(m1 + i, n_, 1, n_) = -p.a_eq.row(i);
      rhs(m1 + i) = p.b_eq(i);
    }
    for (int i = 0; i < m_; ++i)
      if (rhs(i) < 0.0) {
        rows.row(i) = -rows.row(i);
        rhs(i) = -rhs(i);
      }

    // Rows whose slack survived the sign flip start basic; the rest get
    // artificial columns.
    basis_.assign(m_, -1);
    std::vector<int> artificial_rows;
    for (int i = 0; i < m1; ++i) {
      if (rows(i, 2 * n_ + i) > 0.5)
        basis_[i] = 2 * n_ + i;
      else
        artificial_rows.push_back(i);
    }
    for (int i = m1; i < m_; ++i) artificial_rows.push_back(i);
    n_art_ = static_cast<int>(artificial_rows.size());

    t_.resize(m_, n_struct_ + n_art_ + 1);
    t_.setZero();
    t_.block(0, 0, m_, n_struct_) = rows;
    t_.col(n_struct_ + n_art_) = rhs;
    for (int a = 0; a < n_art_; ++a) {
      t_(artificial_rows[a], n_struct_ + a) = 1.0;
      basis_[artificial_rows[a]] = n_struct_ + a;
    }
    orig_ = t_;  // pristine copy for the post-solve basis polish
  }

  // Refactorizes the final basis against the original data, verifies primal
  // feasibility and reduced-cost optimality with fresh arithmetic, and writes
  // the refined basic values back. A false return means the pivot path ended
  // at a basis that is not actually optimal.
  bool polish(const Eigen::VectorXd& c) {
    std::vector<int> live;
    for (int i = 0; i < m_; ++i)
      if (!row_dead_[i]) live.push_back(i);
    const int k = static_cast<int>(live.size());
    if (k == 0) return true;
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(total_cols());
    for (int j = 0; j < n_; ++j) {
      cost(j) = c(j);
      cost(n_ + j) = -c(j);
    }
    Eigen::MatrixXd basis_mat(k, k);
    Eigen::VectorXd rb(k), cb(k);
    for (int r = 0; r < k; ++r) {
      rb(r) = orig_(live[r], rhs_col());
      cb(r) = cost(basis_[live[r]]);
      for (int s = 0; s < k; ++s)
        basis_mat(r, s) = orig_(live[r], basis_[live[s]]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_mat);
    const Eigen::VectorXd xb = lu.solve(rb);
    const double scale_b = 1.0 + rb.lpNorm<Eigen::Infinity>();
    if ((basis_mat * xb - rb).lpNorm<Eigen::Infinity>() > 1e-9 * scale_b)
      return false;  // basis numerically singular
    if (xb.minCoeff() < -1e-9 * scale_b) return false;  // not primal feasible
    const Eigen::VectorXd y = lu.transpose().solve(cb);
    const double scale_c = 1.0 + cb.lpNorm<Eigen::Infinity>();
    std::vector<char> is_basic(static_cast<std::size_t>(total_cols()), 0);
    for (int r = 0; r < k; ++r) is_basic[static_cast<std::size_t>(basis_[live[r]])] = 1;
    for (int j = 0; j < n_struct_; ++j) {
      if (is_basic[static_cast<std::size_t>(j)]) continue;
      double ajy = 0.0;
      for (int r = 0; r < k; ++r) ajy += orig_(live[r], j) * y(r);
      if (cost(j) - ajy < -1e-7 * scale_c) return false;  // not dual feasible
    }
    for (int r = 0; r < k; ++r) t_(live[r], rhs_col()) = xb(r);
    return true;
  }

  // Runs both phases; fills result status and the extended solution. With
  // bland set, Bland's rule is used from the first iteration (slow but
  // cycling-proof); used as a clean-slate retry after a failed audit.
  LpStatus run(const Eigen::VectorXd& c, bool bland = false) {
    bland_always_ = bland;
    if (n_art_ > 0) {
      Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total_cols());
      for (int a = 0; a < n_art_; ++a) phase1(n_struct_ + a) = 1.0;
      set_cost(phase1);
      const LpStatus st = optimize(false);
      if (st != LpStatus::optimal) return LpStatus::infeasible;
      if (objective() > tol::lp_feasibility) return LpStatus::infeasible;
      remove_artificials();
    }
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(total_cols());
    for (int j = 0; j < n_; ++j) {
      cost(j) = c(j);
      cost(n_ + j) = -c(j);
    }
    set_cost(cost);
    return optimize(true);
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i) {
      if (row_dead_[i]) continue;
      const int j = basis_[i];
      if (j < n_)
        x(j) += t_(i, rhs_col());
      else if (j < 2 * n_)
        x(j - n_) -= t_(i, rhs_col());
    }
    return x;
  }

  // Descent direction from the column that certified unboundedness.
  Eigen::VectorXd unbounded_ray() const {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(total_cols());
    delta(unbounded_col_) = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (row_dead_[i]) continue;
      delta(basis_[i]) = -t_(i, unbounded_col_);
    }
    Eigen::VectorXd ray = Eigen::VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) ray(j) = delta(j) - delta(n_ + j);
    return ray;
  }

 private:
  int total_cols() const { return n_struct_ + n_art_; }
  int rhs_col() const { return n_struct_ + n_art_; }

  void set_cost(const Eigen::VectorXd& c) {
    cost_ = Eigen::VectorXd::Zero(total_cols() + 1);
    cost_.head(total_cols()) = c;
    for (int i = 0; i < m_; ++i) {
      if (row_dead_[i]) continue;
      const double cb = c(basis_[i]);
      if (cb != 0.0) cost_ -= cb * t_.row(i).transpose();
    }
  }

  double objective() const { return -cost_(rhs_col()); }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < m_; ++i) {
      if (i == row || row_dead_[i]) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    const double f = cost_(col);
    if (f != 0.0) cost_ -= f * t_.row(row).transpose();
    basis_[row] = col;
  }

  // Phase-2 entering columns exclude artificials; allow_unbounded selects
  // whether a missing leaving row is a certificate or a phase-1 bug.
  LpStatus optimize(bool phase2) {
    const int cols = phase2 ? n_struct_ : total_cols();
    const long bland_after = bland_always_ ? 0 : 2L * (m_ + cols);
    const long cap = 10L * (m_ + cols) + 10000;
    for (long iter = 0;; ++iter) {
      if (iter > cap) throw_numerical("simplex iteration cap exceeded");
      int enter = -1;
      if (iter < bland_after) {
        double best = -tol::lp_pivot;
        for (int j = 0; j < cols; ++j)
          if (cost_(j) < best) {
            best = cost_(j);
            enter = j;
          }
      } else {
        for (int j = 0; j < cols; ++j)
          if (cost_(j) < -tol::lp_pivot) {
            enter = j;
            break;
          }
      }
      if (enter < 0) return LpStatus::optimal;

      // Two-pass ratio test: find the minimum ratio, then among rows within a
      // relative tie band pick the largest pivot element. Near-parallel rows
      // make degenerate ties common, and pivoting on a tiny element there
      // amplifies the whole tableau.
      int any = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (row_dead_[i]) continue;
        const double a = t_(i, enter);
        if (a <= tol::lp_pivot) continue;
        const double ratio = t_(i, rhs_col()) / a;
        if (any < 0 || ratio < best_ratio) {
          any = i;
          best_ratio = ratio;
        }
      }
      if (any < 0) {
        if (!phase2)
          throw_numerical("phase-1 subproblem unbounded (numerical breakdown)");
        unbounded_col_ = enter;
        return LpStatus::unbounded;
      }
      const double band = best_ratio + 1e-12 * (1.0 + std::abs(best_ratio));
      int leave = -1;
      double best_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (row_dead_[i]) continue;
        const double a = t_(i, enter);
        if (a <= tol::lp_pivot) continue;
        if (t_(i, rhs_col()) / a > band) continue;
        if (a > best_piv * (1.0 + 1e-12) ||
            (a > best_piv * (1.0 - 1e-12) && leave >= 0 &&
             basis_[i] < basis_[leave])) {
          leave = i;
          best_piv = a;
        }
      }
      if (std::abs(t_(leave, enter)) < tol::lp_pivot_breakdown)
        throw_numerical("simplex pivot below breakdown threshold");
      pivot(leave, enter);
    }
  }

  // After phase 1, pivot basic artificials onto structural columns; rows with
  // no structural entry are linearly dependent and get dropped.
  void remove_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (row_dead_[i] || basis_[i] < n_struct_) continue;
      int col = -1;
      double best = tol::lp_pivot;
      for (int j = 0; j < n_struct_; ++j)
        if (std::abs(t_(i, j)) > best) {
          best = std::abs(t_(i, j));
          col = j;
        }
      if (col >= 0)
        pivot(i, col);
      else
        row_dead_[i] = true;
    }
    for (int a = 0; a < n_art_; ++a) t_.col(n_struct_ + a).setZero();
  }

 private:
  std::vector<bool> row_dead_;
  int n_ = 0, m_ = 0, n_slack_ = 0, n_struct_ = 0, n_art_ = 0;
  int unbounded_col_ = -1;
  bool bland_always_ = false;
  Eigen::MatrixXd t_;
  Eigen::MatrixXd orig_;
  Eigen::VectorXd cost_;
  std::vector<int> basis_;
};

}  // namespace detail

inline SimplexResult simplex_solve(const SimplexProblem& p0) {
  // Power-of-two row equilibration. Scaling a row and its rhs by 2^-k is
  // exact in binary floating point and leaves the feasible set, the optimum
  // and the duals' signs unchanged, but it keeps pivot magnitudes comparable
  // when row norms span orders of magnitude, which Fourier-Motzkin output
  // routinely does.
  SimplexProblem p = p0;
  const auto equilibrate = [](Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double norm = a.row(i).cwiseAbs().maxCoeff();
      if (norm <= 0.0 || !std::isfinite(norm)) continue;
      const double s = std::exp2(-std::round(std::log2(norm)));
      if (s != 1.0) {
        a.row(i) *= s;
        b(i) *= s;
      }
    }
  };
  if (p.b_ub.size() > 0) equilibrate(p.a_ub, p.b_ub);
  if (p.b_eq.size() > 0) equilibrate(p.a_eq, p.b_eq);

  const int n = static_cast<int>(p.c.size());
  const int m = static_cast<int>(p.b_ub.size() + p.b_eq.size());
  SimplexResult res;
  if (m == 0) {
    // Unconstrained: any nonzero cost direction is a certificate.
    res.x = Eigen::VectorXd::Zero(n);
    if (p.c.lpNorm<Eigen::Infinity>() > tol::lp_pivot) {
      res.status = LpStatus::unbounded;
      res.ray = -p.c;
    } else {
      res.status = LpStatus::optimal;
      res.value = 0.0;
    }
    return res;
  }

  // Feasibility audit against the original data; a corrupted tableau can
  // otherwise terminate "optimal" at an infeasible point.
  const auto feas_error = [&p](const Eigen::VectorXd& x) {
    double err = 0.0;
    if (p.b_ub.size() > 0) err = (p.a_ub * x - p.b_ub).maxCoeff();
    if (p.b_eq.size() > 0)
      err = std::max(err, (p.a_eq * x - p.b_eq).lpNorm<Eigen::Infinity>());
    return err;
  };

  const auto finish = [&p, &res, &feas_error](detail::SimplexTableau& tab) {
    switch (res.status) {
      case LpStatus::optimal:
        res.x = tab.solution();
        if (feas_error(res.x) > 1e-7 * (1.0 + res.x.lpNorm<Eigen::Infinity>()))
          return false;
        res.value = p.c.dot(res.x);
        break;
      case LpStatus::unbounded: {
        res.x = tab.solution();
        res.ray = tab.unbounded_ray();
        // Certify: the ray must be feasible-improving within tolerance.
        const double rnorm = res.ray.lpNorm<Eigen::Infinity>();
        if (rnorm > 0.0) res.ray /= rnorm;
        const double scale = 1.0 + res.ray.lpNorm<Eigen::Infinity>();
        if (p.b_ub.size() > 0 && (p.a_ub * res.ray).maxCoeff() > 1e-7 * scale)
          throw_numerical("unbounded ray violates inequality rows");
        if (p.b_eq.size() > 0 &&
            (p.a_eq * res.ray).lpNorm<Eigen::Infinity>() > 1e-7 * scale)
          throw_numerical("unbounded ray violates equality rows");
        if (p.c.dot(res.ray) > -1e-9)
          throw_numerical("unbounded ray is not a descent direction");
        break;
      }
      case LpStatus::infeasible:
        res.x = Eigen::VectorXd::Zero(static_cast<int>(p.c.size()));
        break;
    }
    return true;
  };

  detail::SimplexTableau tableau(p);
  res.status = tableau.run(p.c);
  if (finish(tableau)) return res;

  // The audit caught an infeasible "optimal" point. First refactorize the
  // final basis against pristine data; if the basis itself is bad, rerun from
  // scratch under Bland's rule, which takes a different (and cycling-proof)
  // pivot path.
  if (res.status == LpStatus::optimal && tableau.polish(p.c) &&
      finish(tableau))
    return res;
  detail::SimplexTableau retry(p);
  res.status = retry.run(p.c, true);
  if (finish(retry)) return res;
  if (res.status == LpStatus::optimal && retry.polish(p.c) && finish(retry))
    return res;
  if (const char* dump = std::getenv("FLEXOR_LP_DUMP")) {  // TEMP instrumentation
    std::ofstream df(dump);
    df.precision(17);
    df << p.b_ub.size() << " " << p.b_eq.size() << " " << p.c.size() << "\n";
    df << p.a_ub << "\n" << p.b_ub.transpose() << "\n";
    df << p.a_eq << "\n" << p.b_eq.transpose() << "\n";
    df << p.c.transpose() << "\n";
  }
  std::ostringstream os;
  os << "simplex solution failed the feasibility audit (m_ub=" << p.b_ub.size()
     << " m_eq=" << p.b_eq.size() << " n=" << p.c.size()
     << " err=" << feas_error(retry.solution())
     << " xinf=" << retry.solution().lpNorm<Eigen::Infinity>() << ")";
  throw_numerical(os.str());
}

}  // namespace flexor
