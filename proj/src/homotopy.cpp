#include "deconv/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "deconv/errors.hpp"

namespace deconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative threshold declaring the restricted Gram matrix singular.
constexpr double kRankTol = 1e-10;

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

VectorXd scatter(Index n, const std::vector<Index>& where, const VectorXd& vals) {
  VectorXd out = VectorXd::Zero(n);
  for (std::size_t p = 0; p < where.size(); ++p) out[where[p]] = vals[static_cast<Index>(p)];
  return out;
}

Index position_of(const std::vector<Index>& v, Index j) {
  for (std::size_t p = 0; p < v.size(); ++p)
    if (v[p] == j) return static_cast<Index>(p);
  return -1;
}

// Candidate step events within one homotopy move. Leave-type events get
// priority on exact ties so the working sets stay sign-consistent; among
// equals the smallest coordinate index wins.
struct StepEvent {
  double step = kInf;
  int kind = -1;  // solver-specific
  Index index = -1;
  int sign = 0;
};

class EventScan {
public:
  explicit EventScan(double tie_tol) : tie_tol_(tie_tol) {}

  void add(double step, int kind, Index index, int sign, bool allow_zero, int priority) {
    if (!std::isfinite(step)) return;
    if (allow_zero) {
      if (step < -tie_tol_) return;
      step = std::max(step, 0.0);
    } else {
      if (step <= tie_tol_) return;
    }
    events_.push_back({{step, kind, index, sign}, priority});
    min_step_ = std::min(min_step_, step);
  }

  bool empty() const { return events_.empty(); }

  StepEvent pick(bool* tied) const {
    const StepEvent* best = nullptr;
    int best_priority = -1;
    Index count = 0;
    for (const auto& [ev, priority] : events_) {
      if (ev.step > min_step_ + tie_tol_) continue;
      ++count;
      if (best == nullptr || priority > best_priority ||
          (priority == best_priority && ev.index < best->index)) {
        best = &ev;
        best_priority = priority;
      }
    }
    if (tied) *tied = count > 1;
    StepEvent out = *best;
    out.step = std::max(min_step_, 0.0);
    return out;
  }

private:
  double tie_tol_;
  double min_step_ = kInf;
  std::vector<std::pair<StepEvent, int>> events_;
};

// Cholesky factor of the restricted Gram matrix, grown one column at a
// time. Removal refactorizes; drops are rare on realistic paths.
class GrowingCholesky {
public:
  explicit GrowingCholesky(Index capacity)
      : l_(MatrixXd::Zero(capacity, capacity)), gram_(MatrixXd::Zero(capacity, capacity)) {}

  Index size() const { return k_; }

  bool add(const VectorXd& cross, double diag) {
    VectorXd ell;
    double pivot2 = diag;
    if (k_ > 0) {
      ell = l_.topLeftCorner(k_, k_).triangularView<Eigen::Lower>().solve(cross);
      pivot2 -= ell.squaredNorm();
    }
    if (!(pivot2 > kRankTol * std::max(diag, 1e-300))) return false;
    if (k_ > 0) {
      l_.block(k_, 0, 1, k_) = ell.transpose();
      gram_.block(k_, 0, 1, k_) = cross.transpose();
      gram_.block(0, k_, k_, 1) = cross;
    }
    l_(k_, k_) = std::sqrt(pivot2);
    gram_(k_, k_) = diag;
    ++k_;
    return true;
  }

  void remove(Index pos) {
    const Index m = k_ - 1;
    for (Index r = pos; r < m; ++r) gram_.row(r).head(k_) = gram_.row(r + 1).head(k_);
    for (Index c = pos; c < m; ++c) gram_.col(c).head(m) = gram_.col(c + 1).head(m);
    k_ = m;
    if (k_ > 0) {
      Eigen::LLT<MatrixXd> llt(gram_.topLeftCorner(k_, k_));
      if (llt.info() != Eigen::Success)
        throw SolverStallError("active Gram matrix lost positive definiteness");
      l_.topLeftCorner(k_, k_) = llt.matrixL();
    }
  }

  VectorXd solve(const VectorXd& rhs) const {
    auto l = l_.topLeftCorner(k_, k_);
    VectorXd u = l.triangularView<Eigen::Lower>().solve(rhs);
    return l.transpose().triangularView<Eigen::Upper>().solve(u);
  }

private:
  MatrixXd l_, gram_;
  Index k_ = 0;
};

// Inverse of the (nonsymmetric) cross-Gram matrix  M = A_dual^T A_primal,
// maintained across support pivots with rank-one/bordering updates and a
// full LU rebuild whenever a pivot is too small. Rows of M are indexed by
// the dual support, columns by the primal support; P = M^{-1}.
class CrossGramInverse {
public:
  explicit CrossGramInverse(Index capacity)
      : m_(MatrixXd::Zero(capacity, capacity)), p_(MatrixXd::Zero(capacity, capacity)) {}

  Index size() const { return k_; }
  Index rebuilds() const { return rebuilds_; }

  // M u = rhs
  VectorXd solve(const VectorXd& rhs) const { return p_.topLeftCorner(k_, k_) * rhs; }
  // M^T u = rhs
  VectorXd solve_adjoint(const VectorXd& rhs) const {
    return p_.topLeftCorner(k_, k_).transpose() * rhs;
  }

  bool grow(const VectorXd& new_row, const VectorXd& new_col, double corner) {
    const Index k = k_;
    m_.block(k, 0, 1, k) = new_row.transpose();
    m_.block(0, k, k, 1) = new_col;
    m_(k, k) = corner;
    bool ok = false;
    if (k > 0) {
      auto p = p_.topLeftCorner(k, k);
      VectorXd u = p * new_col;
      Eigen::RowVectorXd w = new_row.transpose() * p;
      const double sigma = corner - new_row.dot(u);
      if (std::abs(sigma) > pivot_floor(corner)) {
        p_.topLeftCorner(k, k) += (u * w) / sigma;
        p_.block(0, k, k, 1) = -u / sigma;
        p_.block(k, 0, 1, k) = -w / sigma;
        p_(k, k) = 1.0 / sigma;
        ok = true;
      }
    } else if (std::abs(corner) > pivot_floor(corner)) {
      p_(0, 0) = 1.0 / corner;
      ok = true;
    }
    ++k_;
    return finish(ok);
  }

  bool remove(Index row_pos, Index col_pos) {
    const Index k = k_;
    const double pivot = p_(col_pos, row_pos);
    bool ok = false;
    if (std::abs(pivot) > 1e-12) {
      VectorXd pc = p_.col(row_pos).head(k);
      Eigen::RowVectorXd pr = p_.row(col_pos).head(k);
      p_.topLeftCorner(k, k) -= (pc * pr) / pivot;
      drop_matrix_row_col(p_, col_pos, row_pos, k);
      ok = true;
    }
    drop_matrix_row_col(m_, row_pos, col_pos, k);
    --k_;
    return finish(ok);
  }

  bool replace_row(Index row_pos, const VectorXd& new_row) {
    const Index k = k_;
    Eigen::RowVectorXd delta = new_row.transpose() - m_.row(row_pos).head(k);
    m_.row(row_pos).head(k) = new_row.transpose();
    auto p = p_.topLeftCorner(k, k);
    const double denom = 1.0 + (delta * p.col(row_pos))(0);
    bool ok = false;
    if (std::abs(denom) > 1e-12) {
      VectorXd pc = p.col(row_pos);
      Eigen::RowVectorXd dp = delta * p;
      p_.topLeftCorner(k, k) -= (pc * dp) / denom;
      ok = true;
    }
    return finish(ok);
  }

  bool replace_col(Index col_pos, const VectorXd& new_col) {
    const Index k = k_;
    VectorXd delta = new_col - m_.col(col_pos).head(k);
    m_.col(col_pos).head(k) = new_col;
    auto p = p_.topLeftCorner(k, k);
    const double denom = 1.0 + (p.row(col_pos) * delta)(0);
    bool ok = false;
    if (std::abs(denom) > 1e-12) {
      VectorXd pd = p * delta;
      Eigen::RowVectorXd pr = p.row(col_pos);
      p_.topLeftCorner(k, k) -= (pd * pr) / denom;
      ok = true;
    }
    return finish(ok);
  }

private:
  static double pivot_floor(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

  static void drop_matrix_row_col(MatrixXd& m, Index row, Index col, Index k) {
    for (Index r = row; r < k - 1; ++r) m.row(r).head(k) = m.row(r + 1).head(k);
    for (Index c = col; c < k - 1; ++c) m.col(c).head(k - 1) = m.col(c + 1).head(k - 1);
  }

  bool finish(bool incremental_ok) {
    ++updates_;
    if (incremental_ok && updates_ % 128 != 0) return true;
    return rebuild();
  }

  bool rebuild() {
    ++rebuilds_;
    if (k_ == 0) return true;
    Eigen::FullPivLU<MatrixXd> lu(m_.topLeftCorner(k_, k_));
    lu.setThreshold(kRankTol);
    if (!lu.isInvertible()) return false;
    p_.topLeftCorner(k_, k_) = lu.inverse();
    return true;
  }

  MatrixXd m_, p_;
  Index k_ = 0;
  Index updates_ = 0;
  Index rebuilds_ = 0;
};

void emit_segment(HomotopyPath& path, double lambda_high, double lambda_low,
                  const std::vector<Index>& active, const std::vector<int>& signs,
                  const VectorXd& solution) {
  PathSegment seg;
  seg.lambda_high = lambda_high;
  seg.lambda_low = lambda_low;
  std::vector<std::pair<Index, int>> ordered(active.size());
  for (std::size_t p = 0; p < active.size(); ++p) ordered[p] = {active[p], signs[p]};
  std::sort(ordered.begin(), ordered.end());
  seg.support.reserve(ordered.size());
  seg.signs.reserve(ordered.size());
  for (const auto& [j, z] : ordered) {
    seg.support.push_back(j);
    seg.signs.push_back(z);
  }
  seg.solution_high = solution;
  path.segments.push_back(std::move(seg));
}

void check_inputs(const LinearDesign& design, const VectorXd& y, const char* who) {
  if (y.size() != design.size())
    throw InvalidParameterError(std::string(who) + ": dimension mismatch");
  if (!y.allFinite()) throw InvalidParameterError(std::string(who) + ": non-finite response");
}

Index argmax_abs_smallest_index(const VectorXd& v, double tie_tol, bool* tied) {
  const double top = v.cwiseAbs().maxCoeff();
  Index pick = -1;
  Index count = 0;
  for (Index j = 0; j < v.size(); ++j) {
    if (std::abs(v[j]) >= top - tie_tol) {
      ++count;
      if (pick < 0) pick = j;
    }
  }
  if (tied) *tied = count > 1;
  return pick;
}

}  // namespace

std::string to_string(SolverKind kind) {
  return kind == SolverKind::lasso ? "lasso" : "dantzig";
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "lasso") return SolverKind::lasso;
  if (s == "dantzig") return SolverKind::dantzig;
  throw InvalidParameterError("unknown solver kind: " + s);
}

// ---------------------------------------------------------------------------
// LASSO path
//
// Objective: lambda*||s||_1 + ||y - A s||_2^2. Stationarity on the active
// set B with signs z reads 2 A_B^T (y - A s) = lambda * z, so inside a
// segment s_B(lambda) = G^{-1}(A_B^T y - lambda/2 * z) with G = A_B^T A_B:
// the solution is affine in lambda with slope d/2, d = G^{-1} z per unit
// decrease. Off-support correlations c_j = 2 A_j^T (y - A s) move linearly
// as well; an event occurs when some |c_j| catches the shrinking boundary
// lambda (activation) or an active coefficient crosses zero (drop).
// ---------------------------------------------------------------------------

HomotopyPath lasso_path(const LinearDesign& design, const VectorXd& y) {
  check_inputs(design, y, "lasso_path");
  const Index n = design.size();

  HomotopyPath path;
  path.solver_kind = SolverKind::lasso;
  path.terminal_solution = VectorXd::Zero(n);

  VectorXd c0 = 2.0 * design.apply_adjoint(y);
  const double lambda0 = n > 0 ? c0.cwiseAbs().maxCoeff() : 0.0;
  path.lambda0 = lambda0;
  if (lambda0 == 0.0) return path;

  enum { kEnter = 0, kDrop = 1 };

  std::vector<Index> active;
  std::vector<int> signs;
  std::vector<char> is_active(static_cast<std::size_t>(n), 0);
  GrowingCholesky chol(n);

  bool tied = false;
  const Index j0 = argmax_abs_smallest_index(c0, 1e-12 * (1.0 + lambda0), &tied);
  if (tied) ++path.diagnostics.tie_events;
  if (!chol.add(VectorXd(), design.gram(j0, j0))) {
    path.diagnostics.rank_limited = true;
    path.terminal_lambda = lambda0;
    return path;
  }
  active.push_back(j0);
  signs.push_back(sign_of(c0[j0]));
  is_active[static_cast<std::size_t>(j0)] = 1;

  VectorXd s = VectorXd::Zero(n);
  double lam = lambda0;
  Index stall = 0;
  Index blocked = -1;  // freshly dropped coordinate; may not re-enter at this lambda
  const Index max_iter = 100 * n + 1000;

  for (Index iter = 0;; ++iter) {
    path.diagnostics.iterations = iter;
    if (iter > max_iter) throw SolverStallError("lasso_path: iteration limit exceeded");

    const Index k = static_cast<Index>(active.size());
    VectorXd z(k);
    for (Index p = 0; p < k; ++p) z[p] = signs[static_cast<std::size_t>(p)];

    VectorXd d, v;
    if (k > 0) {
      d = chol.solve(z);
      v = design.apply_adjoint(design.apply(scatter(n, active, d)));
    } else {
      v = VectorXd::Zero(n);
    }
    VectorXd c = 2.0 * design.apply_adjoint(y - design.apply(s));

    const double tie_tol = 1e-12 * std::max(1.0, lam);
    EventScan scan(tie_tol);
    for (Index j = 0; j < n; ++j) {
      if (is_active[static_cast<std::size_t>(j)] || j == blocked) continue;
      const double den_pos = 1.0 - v[j];
      if (std::abs(den_pos) > 1e-14) scan.add((lam - c[j]) / den_pos, kEnter, j, +1, true, 0);
      const double den_neg = 1.0 + v[j];
      if (std::abs(den_neg) > 1e-14) scan.add((lam + c[j]) / den_neg, kEnter, j, -1, true, 0);
    }
    for (Index p = 0; p < k; ++p) {
      if (d[p] != 0.0)
        scan.add(-2.0 * s[active[static_cast<std::size_t>(p)]] / d[p], kDrop,
                 active[static_cast<std::size_t>(p)], 0, false, 1);
    }

    StepEvent ev;
    bool have_event = false;
    if (!scan.empty()) {
      bool tie = false;
      ev = scan.pick(&tie);
      if (tie) ++path.diagnostics.tie_events;
      have_event = ev.step < lam;
    }

    const double delta = have_event ? ev.step : lam;
    const double lam_next = std::max(lam - delta, 0.0);

    if (delta > 0.0) {
      emit_segment(path, lam, lam_next, active, signs, s);
      for (Index p = 0; p < k; ++p) s[active[static_cast<std::size_t>(p)]] += delta * d[p] * 0.5;
      stall = 0;
      blocked = -1;
    } else if (++stall > 4 * n + 8) {
      throw SolverStallError("lasso_path: no progress in lambda");
    }

    if (!have_event || lam_next == 0.0) {
      path.terminal_lambda = 0.0;
      path.terminal_solution = s;
      break;
    }

    if (ev.kind == kDrop) {
      const Index pos = position_of(active, ev.index);
      s[ev.index] = 0.0;
      chol.remove(pos);
      active.erase(active.begin() + pos);
      signs.erase(signs.begin() + pos);
      is_active[static_cast<std::size_t>(ev.index)] = 0;
      blocked = ev.index;
    } else {
      VectorXd cross(k);
      for (Index p = 0; p < k; ++p)
        cross[p] = design.gram(active[static_cast<std::size_t>(p)], ev.index);
      if (!chol.add(cross, design.gram(ev.index, ev.index))) {
        path.diagnostics.rank_limited = true;
        path.terminal_lambda = lam_next;
        path.terminal_solution = s;
        break;
      }
      active.push_back(ev.index);
      signs.push_back(ev.sign);
      is_active[static_cast<std::size_t>(ev.index)] = 1;
    }
    lam = lam_next;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Dantzig selector path (primal-dual homotopy)
//
// Optimality for  min ||s||_1 s.t. ||A^T(y - A s)||_inf <= lambda  pairs a
// primal support Gp (signs zp) with a dual support Gd (signs zd):
//   A_Gd^T (y - A s) = lambda * zd,      |A_j^T (y - A s)| <= lambda,
//   (A^T A x)_Gp     = zp,               |(A^T A x)_j|     <= 1,
// with x supported on Gd, sign(x) = zd. Inside a segment the primal moves
// affinely (direction M^{-1} zd, M = A_Gd^T A_Gp) while the dual stays
// fixed; each critical lambda swaps one element in/out of a support, and a
// single dual pivot rebalances the pair before the primal resumes.
// ---------------------------------------------------------------------------

HomotopyPath dantzig_path(const LinearDesign& design, const VectorXd& y) {
  check_inputs(design, y, "dantzig_path");
  const Index n = design.size();

  HomotopyPath path;
  path.solver_kind = SolverKind::dantzig;
  path.terminal_solution = VectorXd::Zero(n);

  VectorXd c = design.apply_adjoint(y);
  const double lambda0 = n > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
  path.lambda0 = lambda0;
  if (lambda0 == 0.0) return path;

  enum { kEnterDual = 0, kLeavePrimal = 1, kEnterPrimal = 2, kLeaveDual = 3 };

  std::vector<Index> primal, dual;
  std::vector<int> zp, zd;
  std::vector<char> in_primal(static_cast<std::size_t>(n), 0),
      in_dual(static_cast<std::size_t>(n), 0);
  CrossGramInverse inv(n);

  VectorXd s = VectorXd::Zero(n);
  VectorXd x = VectorXd::Zero(n);
  double lam = lambda0;
  Index stall = 0;
  Index blocked_dual = -1;    // constraint that just deactivated at this lambda
  Index blocked_primal = -1;  // coefficient that just left at this lambda
  int blocked_primal_sign = 0;
  const Index max_iter = 100 * n + 1000;
  Index iter = 0;

  auto rank_limit_stop = [&](double at_lambda) {
    path.diagnostics.rank_limited = true;
    path.terminal_lambda = at_lambda;
    path.terminal_solution = s;
  };

  // One dual pivot: move x along direction dx (supported on the dual set,
  // plus optionally a fresh coordinate gamma) until either a dual
  // constraint |(A^T A x)_j| reaches 1 (a primal coordinate enters) or an
  // x entry crosses zero (a dual constraint leaves). Returns false when the
  // cross-Gram update detects a rank deficiency.
  auto dual_pivot = [&](const VectorXd& dx_active, Index gamma, int gamma_sign,
                        Index freed_primal, int freed_sign, double at_lambda) -> bool {
    const Index k = static_cast<Index>(dual.size());
    VectorXd dx = scatter(n, dual, dx_active);
    if (gamma >= 0) dx[gamma] = gamma_sign;

    VectorXd psi = design.apply_adjoint(design.apply(x));
    VectorXd phi = design.apply_adjoint(design.apply(dx));

    const double tie_tol = 1e-12;
    EventScan scan(tie_tol);
    for (Index j = 0; j < n; ++j) {
      if (in_primal[static_cast<std::size_t>(j)]) continue;
      if (std::abs(phi[j]) < 1e-14) continue;
      const double t_pos = (1.0 - psi[j]) / phi[j];
      const double t_neg = (-1.0 - psi[j]) / phi[j];
      const bool same_side_block = (j == freed_primal);
      if (!(same_side_block && freed_sign > 0)) scan.add(t_pos, kEnterPrimal, j, +1, true, 0);
      if (!(same_side_block && freed_sign < 0)) scan.add(t_neg, kEnterPrimal, j, -1, true, 0);
    }
    for (Index p = 0; p < k; ++p) {
      const Index i = dual[static_cast<std::size_t>(p)];
      if (dx[i] != 0.0) scan.add(-x[i] / dx[i], kLeaveDual, i, 0, false, 1);
    }
    if (scan.empty()) throw SolverStallError("dantzig_path: unbounded dual pivot");
    bool tie = false;
    const StepEvent ev = scan.pick(&tie);
    if (tie) ++path.diagnostics.dual_tie_events;

    x += ev.step * dx;

    if (ev.kind == kEnterPrimal) {
      const Index j = ev.index;
      const int sgn = ev.sign;
      if (gamma >= 0) {
        // supports grow together: new dual row gamma, new primal column j
        VectorXd row(k), col(k);
        for (Index p = 0; p < k; ++p) {
          row[p] = design.gram(gamma, primal[static_cast<std::size_t>(p)]);
          col[p] = design.gram(dual[static_cast<std::size_t>(p)], j);
        }
        if (!inv.grow(row, col, design.gram(gamma, j))) return false;
        dual.push_back(gamma);
        zd.push_back(gamma_sign);
        in_dual[static_cast<std::size_t>(gamma)] = 1;
      } else {
        // freed primal column is replaced by the fresh entrant
        const Index pos = position_of(primal, freed_primal);
        VectorXd col(k);
        for (Index p = 0; p < k; ++p) col[p] = design.gram(dual[static_cast<std::size_t>(p)], j);
        if (!inv.replace_col(pos, col)) return false;
        primal.erase(primal.begin() + pos);
        zp.erase(zp.begin() + pos);
        primal.push_back(j);
        zp.push_back(sgn);
        // the replaced column lives at position pos; keep entry order aligned
        std::rotate(primal.begin() + pos, primal.end() - 1, primal.end());
        std::rotate(zp.begin() + pos, zp.end() - 1, zp.end());
        in_primal[static_cast<std::size_t>(j)] = 1;
        return true;
      }
      primal.push_back(j);
      zp.push_back(sgn);
      in_primal[static_cast<std::size_t>(j)] = 1;
      return true;
    }

    // kLeaveDual
    const Index i = ev.index;
    x[i] = 0.0;
    const Index pos = position_of(dual, i);
    if (gamma >= 0) {
      // departing dual row is replaced by the fresh constraint gamma
      const Index kp = static_cast<Index>(primal.size());
      VectorXd row(kp);
      for (Index p = 0; p < kp; ++p)
        row[p] = design.gram(gamma, primal[static_cast<std::size_t>(p)]);
      if (!inv.replace_row(pos, row)) return false;
      dual[static_cast<std::size_t>(pos)] = gamma;
      zd[static_cast<std::size_t>(pos)] = gamma_sign;
      in_dual[static_cast<std::size_t>(i)] = 0;
      in_dual[static_cast<std::size_t>(gamma)] = 1;
    } else {
      // both supports shrink: drop dual row i and freed primal column
      const Index cpos = position_of(primal, freed_primal);
      if (!inv.remove(pos, cpos)) return false;
      dual.erase(dual.begin() + pos);
      zd.erase(zd.begin() + pos);
      in_dual[static_cast<std::size_t>(i)] = 0;
      primal.erase(primal.begin() + cpos);
      zp.erase(zp.begin() + cpos);
    }
    blocked_dual = i;
    (void)at_lambda;
    return true;
  };

  // Initialization: the largest correlation pins the first active
  // constraint; the first dual pivot brings in the first primal element.
  {
    bool tied = false;
    const Index g0 = argmax_abs_smallest_index(c, 1e-12 * (1.0 + lambda0), &tied);
    if (tied) ++path.diagnostics.tie_events;
    if (!dual_pivot(VectorXd(), g0, sign_of(c[g0]), -1, 0, lam)) {
      rank_limit_stop(lam);
      return path;
    }
  }

  for (;; ++iter) {
    path.diagnostics.iterations = iter;
    path.diagnostics.factor_rebuilds = inv.rebuilds();
    if (iter > max_iter) throw SolverStallError("dantzig_path: iteration limit exceeded");

    const Index k = static_cast<Index>(primal.size());
    VectorXd zdv(k);
    for (Index p = 0; p < k; ++p) zdv[p] = zd[static_cast<std::size_t>(p)];

    VectorXd d, g;
    if (k > 0) {
      d = inv.solve(zdv);
      g = design.apply_adjoint(design.apply(scatter(n, primal, d)));
    } else {
      g = VectorXd::Zero(n);
    }
    c = design.apply_adjoint(y - design.apply(s));

    const double tie_tol = 1e-12 * std::max(1.0, lam);
    EventScan scan(tie_tol);
    for (Index j = 0; j < n; ++j) {
      if (in_dual[static_cast<std::size_t>(j)] || j == blocked_dual) continue;
      const double den_pos = 1.0 - g[j];
      if (std::abs(den_pos) > 1e-14) scan.add((lam - c[j]) / den_pos, kEnterDual, j, +1, true, 0);
      const double den_neg = 1.0 + g[j];
      if (std::abs(den_neg) > 1e-14) scan.add((lam + c[j]) / den_neg, kEnterDual, j, -1, true, 0);
    }
    for (Index p = 0; p < k; ++p) {
      const Index i = primal[static_cast<std::size_t>(p)];
      if (d[p] != 0.0) scan.add(-s[i] / d[p], kLeavePrimal, i, 0, false, 1);
    }

    StepEvent ev;
    bool have_event = false;
    if (!scan.empty()) {
      bool tie = false;
      ev = scan.pick(&tie);
      if (tie) ++path.diagnostics.dual_tie_events;
      have_event = ev.step < lam;
    }

    const double delta = have_event ? ev.step : lam;
    const double lam_next = std::max(lam - delta, 0.0);

    if (delta > 0.0) {
      emit_segment(path, lam, lam_next, primal, zp, s);
      for (Index p = 0; p < k; ++p) s[primal[static_cast<std::size_t>(p)]] += delta * d[p];
      stall = 0;
      blocked_dual = -1;
      blocked_primal = -1;
      blocked_primal_sign = 0;
    } else if (++stall > 4 * n + 8) {
      throw SolverStallError("dantzig_path: no progress in lambda");
    }

    if (!have_event || lam_next == 0.0) {
      path.terminal_lambda = 0.0;
      path.terminal_solution = s;
      break;
    }

    bool ok;
    if (ev.kind == kLeavePrimal) {
      const Index i_out = ev.index;
      const Index pos = position_of(primal, i_out);
      const int freed_sign = zp[static_cast<std::size_t>(pos)];
      s[i_out] = 0.0;
      in_primal[static_cast<std::size_t>(i_out)] = 0;
      blocked_primal = i_out;
      blocked_primal_sign = freed_sign;
      // relax the freed stationarity row inward
      VectorXd rhs = VectorXd::Zero(k);
      rhs[pos] = -static_cast<double>(freed_sign);
      VectorXd dx = inv.solve_adjoint(rhs);
      ok = dual_pivot(dx, -1, 0, i_out, freed_sign, lam_next);
    } else {
      const Index gamma = ev.index;
      const int zg = ev.sign;
      VectorXd dx;
      if (k > 0) {
        VectorXd q(k);
        for (Index p = 0; p < k; ++p)
          q[p] = design.gram(primal[static_cast<std::size_t>(p)], gamma);
        dx = inv.solve_adjoint(-static_cast<double>(zg) * q);
      }
      ok = dual_pivot(dx, gamma, zg, blocked_primal, blocked_primal_sign, lam_next);
    }
    if (!ok) {
      rank_limit_stop(lam_next);
      break;
    }
    lam = lam_next;
  }
  return path;
}

VectorXd solution_at(const HomotopyPath& path, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidParameterError("solution_at: lambda must be >= 0");
  const Index n = path.length();
  if (lambda >= path.lambda0 || path.segments.empty()) {
    if (lambda < path.terminal_lambda)
      throw OutOfRangeError("solution_at: lambda below the terminal point of a truncated path");
    return VectorXd::Zero(n);
  }
  if (lambda < path.terminal_lambda - 1e-15 * std::max(1.0, path.terminal_lambda))
    throw OutOfRangeError("solution_at: lambda below the terminal point of a truncated path");
  lambda = std::max(lambda, path.terminal_lambda);

  // segments are ordered by decreasing lambda
  std::size_t lo = 0, hi = path.segments.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (lambda >= path.segments[mid].lambda_high)
      hi = mid;
    else
      lo = mid;
  }
  const PathSegment& seg = path.segments[lo];
  if (lambda >= seg.lambda_high) return seg.solution_high;
  const VectorXd& low_solution = (lo + 1 < path.segments.size())
                                     ? path.segments[lo + 1].solution_high
                                     : path.terminal_solution;
  if (lambda <= seg.lambda_low) return low_solution;
  const double t = (seg.lambda_high - lambda) / (seg.lambda_high - seg.lambda_low);
  return (1.0 - t) * seg.solution_high + t * low_solution;
}

nlohmann::json path_to_json(const HomotopyPath& path) {
  nlohmann::json j;
  j["solver_kind"] = to_string(path.solver_kind);
  j["lambda0"] = path.lambda0;
  j["terminal_lambda"] = path.terminal_lambda;
  j["rank_limited"] = path.diagnostics.rank_limited;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : path.segments) {
    nlohmann::json js;
    js["lambda_high"] = seg.lambda_high;
    js["lambda_low"] = seg.lambda_low;
    js["support"] = seg.support;
    js["signs"] = seg.signs;
    segs.push_back(std::move(js));
  }
  j["segments"] = std::move(segs);
  return j;
}

PathExport path_export_from_json(const nlohmann::json& j) {
  PathExport out;
  out.solver_kind = j.at("solver_kind").get<std::string>();
  solver_kind_from_string(out.solver_kind);  // validate
  out.lambda0 = j.at("lambda0").get<double>();
  out.terminal_lambda = j.at("terminal_lambda").get<double>();
  for (const auto& js : j.at("segments")) {
    PathExport::Segment seg;
    seg.lambda_high = js.at("lambda_high").get<double>();
    seg.lambda_low = js.at("lambda_low").get<double>();
    seg.support = js.at("support").get<std::vector<Index>>();
    seg.signs = js.at("signs").get<std::vector<int>>();
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace deconv
