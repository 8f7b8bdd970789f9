#pragma once

// Dense two-phase tableau simplex. Entering variables follow Dantzig's rule
// and fall back to Bland's rule during runs of degenerate pivots, which
// rules out cycling.

#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace salmatch {

enum class Sense { le, eq, ge };
enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct LpRow {
  Vec coeffs;  // dense, one entry per variable
  Sense sense = Sense::le;
  double rhs = 0.0;
};

/// min (or max) c.x subject to rows and lower <= x <= upper.
struct GeneralLP {
  Vec objective;
  bool maximize = false;
  std::vector<LpRow> rows;
  Vec lower, upper;  // default 0 and +inf

  explicit GeneralLP(std::size_t num_vars = 0)
      : objective(num_vars, 0.0), lower(num_vars, 0.0), upper(num_vars, std::numeric_limits<double>::infinity()) {}

  std::size_t num_vars() const { return objective.size(); }

  std::size_t add_var(double lo = 0.0, double hi = std::numeric_limits<double>::infinity(), double cost = 0.0) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    for (auto& r : rows) r.coeffs.push_back(0.0);
    return objective.size() - 1;
  }

  LpRow& add_row(Sense sense, double rhs) {
    rows.push_back(LpRow{Vec(num_vars(), 0.0), sense, rhs});
    return rows.back();
  }
};

struct SolveResult {
  LpStatus status = LpStatus::infeasible;
  double value = 0.0;
  Vec x;

  bool optimal() const { return status == LpStatus::optimal; }
};

namespace detail {

class Tableau {
 public:
  // Standard form: min c.x, A x = b (b >= 0), x >= 0. Column `cols` holds b.
  Tableau(std::vector<Vec> a, Vec b, std::size_t cols) : rows_(a.size()), cols_(cols), t_(std::move(a)) {
    for (std::size_t i = 0; i < rows_; ++i) t_[i].push_back(b[i]);
    basis_.assign(rows_, -1);
  }

  std::size_t rows() const { return rows_; }
  std::vector<int>& basis() { return basis_; }
  Vec& row(std::size_t i) { return t_[i]; }
  double rhs(std::size_t i) const { return t_[i][cols_]; }

  // Minimises cost over the current basic feasible solution. `allowed`
  // masks columns that may enter. Returns false when unbounded.
  bool optimise(const Vec& cost, const std::vector<char>& allowed) {
    Vec reduced = reduced_costs(cost);
    int degenerate_streak = 0;
    const std::size_t max_iter = 50000 + 200 * (rows_ + cols_);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      const bool bland = degenerate_streak > 50;
      int enter = -1;
      double best = -kPivotTol;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (!allowed[j] || reduced[j] >= -kPivotTol) continue;
        if (bland) {
          enter = static_cast<int>(j);
          break;
        }
        if (reduced[j] < best) {
          best = reduced[j];
          enter = static_cast<int>(j);
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_; ++i) {
        const double aij = t_[i][enter];
        if (aij <= kPivotTol) continue;
        const double q = t_[i][cols_] / aij;
        if (q < ratio - 1e-12 || (q <= ratio + 1e-12 && leave >= 0 && basis_[i] < basis_[leave])) {
          ratio = q;
          leave = static_cast<int>(i);
        }
      }
      if (leave < 0) return false;
      degenerate_streak = ratio <= 1e-12 ? degenerate_streak + 1 : 0;
      pivot(static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
      const double f = reduced[enter];
      const Vec& pr = t_[leave];
      for (std::size_t j = 0; j <= cols_; ++j) reduced[j] -= f * pr[j];
    }
    throw Error(ErrorCode::precondition, "simplex iteration limit exceeded");
  }

  void pivot(std::size_t r, std::size_t c) {
    Vec& pr = t_[r];
    const double inv = 1.0 / pr[c];
    for (double& v : pr) v *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == r) continue;
      Vec& ri = t_[i];
      const double f = ri[c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) ri[j] -= f * pr[j];
      ri[c] = 0.0;
    }
    basis_[r] = static_cast<int>(c);
  }

  Vec reduced_costs(const Vec& cost) const {
    Vec red(cols_ + 1, 0.0);
    for (std::size_t j = 0; j < cols_; ++j) red[j] = cost[j];
    for (std::size_t i = 0; i < rows_; ++i) {
      const double cb = cost[static_cast<std::size_t>(basis_[i])];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) red[j] -= cb * t_[i][j];
    }
    return red;
  }

  Vec solution() const {
    Vec x(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) x[static_cast<std::size_t>(basis_[i])] = t_[i][cols_];
    return x;
  }

  static constexpr double kPivotTol = 1e-10;

 private:
  std::size_t rows_, cols_;
  std::vector<Vec> t_;
  std::vector<int> basis_;
};

}  // namespace detail

inline SolveResult lp_solve(const GeneralLP& lp) {
  const std::size_t nv = lp.num_vars();
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& r : lp.rows) {
    if (r.coeffs.size() != nv) throw Error(ErrorCode::input, "lp_solve: row length differs from variable count");
  }

  // Map each original variable onto non-negative standard-form columns:
  // x = lo + x' (finite lo), x = hi - x' (only hi finite), or x = x+ - x-.
  struct Map {
    int pos = -1, neg = -1;
    double shift = 0.0;
    double sign = 1.0;
  };
  std::vector<Map> map(nv);
  std::size_t cols = 0;
  for (std::size_t j = 0; j < nv; ++j) {
    if (std::isfinite(lp.lower[j])) {
      map[j] = {static_cast<int>(cols++), -1, lp.lower[j], 1.0};
    } else if (std::isfinite(lp.upper[j])) {
      map[j] = {static_cast<int>(cols++), -1, lp.upper[j], -1.0};
    } else {
      map[j].pos = static_cast<int>(cols++);
      map[j].neg = static_cast<int>(cols++);
    }
  }

  struct StdRow {
    Vec a;
    Sense sense;
    double rhs;
  };
  std::vector<StdRow> srows;
  auto push_row = [&](const Vec& coeffs, Sense sense, double rhs) {
    StdRow s{Vec(cols, 0.0), sense, rhs};
    for (std::size_t j = 0; j < nv; ++j) {
      const double c = coeffs[j];
      if (c == 0.0) continue;
      const Map& mp = map[j];
      if (mp.neg >= 0) {
        s.a[mp.pos] += c;
        s.a[mp.neg] -= c;
      } else {
        s.a[mp.pos] += c * mp.sign;
        s.rhs -= c * mp.shift;
      }
    }
    srows.push_back(std::move(s));
  };
  for (const auto& r : lp.rows) push_row(r.coeffs, r.sense, r.rhs);
  for (std::size_t j = 0; j < nv; ++j) {
    if (std::isfinite(lp.lower[j]) && std::isfinite(lp.upper[j])) {
      if (lp.upper[j] < lp.lower[j] - kTol) return {LpStatus::infeasible, 0.0, {}};
      Vec e(nv, 0.0);
      e[j] = 1.0;
      push_row(e, Sense::le, lp.upper[j]);
    }
  }

  // Slacks, then artificials where no slack can start in the basis.
  const std::size_t m = srows.size();
  std::size_t num_slack = 0;
  for (auto& s : srows) {
    if (s.rhs < 0) {
      for (double& v : s.a) v = -v;
      s.rhs = -s.rhs;
      if (s.sense == Sense::le) {
        s.sense = Sense::ge;
      } else if (s.sense == Sense::ge) {
        s.sense = Sense::le;
      }
    }
    if (s.sense != Sense::eq) ++num_slack;
  }
  std::size_t num_art = 0;
  for (const auto& s : srows) {
    if (s.sense != Sense::le) ++num_art;
  }
  const std::size_t total = cols + num_slack + num_art;
  std::vector<Vec> a(m, Vec(total, 0.0));
  Vec b(m);
  std::vector<int> init_basis(m, -1);
  std::size_t slack = cols, art = cols + num_slack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < cols; ++j) a[i][j] = srows[i].a[j];
    b[i] = srows[i].rhs;
    if (srows[i].sense == Sense::le) {
      a[i][slack] = 1.0;
      init_basis[i] = static_cast<int>(slack++);
    } else {
      if (srows[i].sense == Sense::ge) a[i][slack++] = -1.0;
      a[i][art] = 1.0;
      init_basis[i] = static_cast<int>(art++);
    }
  }

  detail::Tableau tab(std::move(a), std::move(b), total);
  tab.basis() = init_basis;

  std::vector<char> allowed(total, 1);
  if (num_art > 0) {
    Vec phase1(total, 0.0);
    for (std::size_t j = cols + num_slack; j < total; ++j) phase1[j] = 1.0;
    tab.optimise(phase1, allowed);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<std::size_t>(tab.basis()[i]) >= cols + num_slack) infeas += tab.rhs(i);
    }
    if (infeas > 1e-7) return {LpStatus::infeasible, 0.0, {}};
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<std::size_t>(tab.basis()[i]) < cols + num_slack) continue;
      for (std::size_t j = 0; j < cols + num_slack; ++j) {
        if (std::abs(tab.row(i)[j]) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = cols + num_slack; j < total; ++j) allowed[j] = 0;
  }

  Vec cost(total, 0.0);
  const double dir = lp.maximize ? -1.0 : 1.0;
  for (std::size_t j = 0; j < nv; ++j) {
    const double c = dir * lp.objective[j];
    const Map& mp = map[j];
    if (mp.neg >= 0) {
      cost[mp.pos] += c;
      cost[mp.neg] -= c;
    } else {
      cost[mp.pos] += c * mp.sign;
    }
  }
  if (!tab.optimise(cost, allowed)) return {LpStatus::unbounded, dir * -inf, {}};

  const Vec xs = tab.solution();
  SolveResult res;
  res.status = LpStatus::optimal;
  res.x.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j) {
    const Map& mp = map[j];
    res.x[j] = mp.neg >= 0 ? xs[mp.pos] - xs[mp.neg] : mp.shift + mp.sign * xs[mp.pos];
  }
  double v = 0.0;
  for (std::size_t j = 0; j < nv; ++j) v += lp.objective[j] * res.x[j];
  res.value = v;
  return res;
}

}  // namespace salmatch
