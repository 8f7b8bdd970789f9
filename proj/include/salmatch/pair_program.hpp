#pragma once

// Per-pair perturbation programs: can a post-normalised perturbation of one
// salience vector, restricted to a support Q and an l_p ball, make the
// candidate score at least as high as the current partner?

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "lp.hpp"
#include "market.hpp"
#include "numeric.hpp"

namespace salmatch {

/// Program data for one (b, a, Q) triple. `gap` is u(partner) - u(candidate);
/// the candidate blocks once s_hat . gap <= 0.
struct PairProgram {
  Vec base;                 // s(b)
  Vec gap;                  // Delta(b; a | mu)
  std::vector<int> support; // Q, sorted; all coordinates means full-support mode
  Norm norm = Norm::linf;

  int dim() const { return static_cast<int>(base.size()); }
  bool full_support() const { return static_cast<int>(support.size()) == dim(); }
};

struct PairSolution {
  bool feasible = false;      // pair_feasible: a blocking perturbation exists
  double radius = kUnbounded; // pair_min_radius: optimal radius, +inf if none
  Vec s_hat;                  // witness (empty when none)
  double scale = 1.0;         // lambda of the witness
};

/// All non-empty supports of size <= k over m coordinates, lexicographic by
/// index sequence. With k >= m only the full support is returned.
inline std::vector<std::vector<int>> supports(int m, int k) {
  if (k < 1) throw Error(ErrorCode::input, "support budget k must be at least 1");
  std::vector<std::vector<int>> out;
  if (k >= m) {
    std::vector<int> all(m);
    for (int i = 0; i < m; ++i) all[i] = i;
    out.push_back(std::move(all));
    return out;
  }
  std::vector<int> cur;
  auto rec = [&](auto&& self, int from) -> void {
    for (int i = from; i < m; ++i) {
      cur.push_back(i);
      out.push_back(cur);
      if (static_cast<int>(cur.size()) < k) self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

namespace detail {

struct PairLayout {
  std::vector<char> in_q;
  double off_mass = 0.0;   // sum of s_i off the support
  bool has_lambda = false; // proportionality constraint is not vacuous
};

inline PairLayout layout(const PairProgram& prog) {
  const int m = prog.dim();
  if (static_cast<int>(prog.gap.size()) != m) throw Error(ErrorCode::input, "pair program: gap length differs from m");
  PairLayout l;
  l.in_q.assign(m, 0);
  for (int i : prog.support) {
    if (i < 0 || i >= m) throw Error(ErrorCode::input, "pair program: support index out of range");
    l.in_q[i] = 1;
  }
  for (int i = 0; i < m; ++i) {
    if (!l.in_q[i]) l.off_mass += prog.base[i];
  }
  l.has_lambda = l.off_mass > 0.0;
  return l;
}

// Variables: s_hat[0..m), lambda (m), r (m+1), z[0..m) for l1 (m+2..).
inline GeneralLP pair_lp(const PairProgram& prog, const PairLayout& l, bool blocking_row) {
  const int m = prog.dim();
  const std::size_t nv = static_cast<std::size_t>(m) + 2 + (prog.norm == Norm::l1 ? m : 0);
  GeneralLP lp(nv);
  const std::size_t lam = m, rv = m + 1;
  lp.lower[lam] = l.has_lambda ? kLambdaMin : 1.0;
  if (!l.has_lambda) lp.upper[lam] = 1.0;
  {
    auto& row = lp.add_row(Sense::eq, 1.0);
    for (int i = 0; i < m; ++i) row.coeffs[i] = 1.0;
  }
  for (int i = 0; i < m; ++i) {
    if (l.in_q[i]) continue;
    auto& row = lp.add_row(Sense::eq, 0.0);
    row.coeffs[i] = 1.0;
    row.coeffs[lam] = -prog.base[i];
  }
  if (blocking_row) {
    auto& row = lp.add_row(Sense::le, 0.0);
    for (int i = 0; i < m; ++i) row.coeffs[i] = prog.gap[i];
  }
  if (prog.norm == Norm::linf) {
    for (int i = 0; i < m; ++i) {
      auto& up = lp.add_row(Sense::le, prog.base[i]);
      up.coeffs[i] = 1.0;
      up.coeffs[rv] = -1.0;
      auto& dn = lp.add_row(Sense::le, -prog.base[i]);
      dn.coeffs[i] = -1.0;
      dn.coeffs[rv] = -1.0;
    }
  } else {
    for (int i = 0; i < m; ++i) {
      const std::size_t z = static_cast<std::size_t>(m) + 2 + i;
      auto& up = lp.add_row(Sense::le, prog.base[i]);
      up.coeffs[i] = 1.0;
      up.coeffs[z] = -1.0;
      auto& dn = lp.add_row(Sense::le, -prog.base[i]);
      dn.coeffs[i] = -1.0;
      dn.coeffs[z] = -1.0;
    }
    auto& sum = lp.add_row(Sense::le, 0.0);
    for (int i = 0; i < m; ++i) sum.coeffs[static_cast<std::size_t>(m) + 2 + i] = 1.0;
    sum.coeffs[rv] = -1.0;
  }
  return lp;
}

inline Vec clean_simplex_point(Vec v) {
  double sum = 0.0;
  for (double& x : v) {
    x = std::max(x, 0.0);
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

// Least l2 distance by enumerating active sets of the inequality system in
// the reduced variables (s_hat on Q, lambda).
inline PairSolution l2_min_radius(const PairProgram& prog, const PairLayout& l) {
  const int m = prog.dim();
  if (m > 8) throw Error(ErrorCode::unsupported, "l2 pair program supports m <= 8");
  std::vector<int> q;
  for (int i = 0; i < m; ++i) {
    if (l.in_q[i]) q.push_back(i);
  }
  double sigma2 = 0.0, off_gap = 0.0;
  for (int i = 0; i < m; ++i) {
    if (l.in_q[i]) continue;
    sigma2 += prog.base[i] * prog.base[i];
    off_gap += prog.base[i] * prog.gap[i];
  }
  const bool lam = l.has_lambda;
  const int d = static_cast<int>(q.size()) + (lam ? 1 : 0);

  Eigen::VectorXd x0(d), w(d);
  for (int j = 0; j < static_cast<int>(q.size()); ++j) {
    x0[j] = prog.base[q[j]];
    w[j] = 1.0;
  }
  if (lam) {
    x0[d - 1] = 1.0;
    w[d - 1] = sigma2;
  }

  // Equality: sum over Q plus off-support mass times lambda equals 1.
  Eigen::RowVectorXd a_eq = Eigen::RowVectorXd::Ones(d);
  const double b_eq = 1.0;
  if (lam) a_eq[d - 1] = l.off_mass;
  // Inequalities g.x <= h.
  std::vector<Eigen::RowVectorXd> g;
  std::vector<double> h;
  for (int j = 0; j < static_cast<int>(q.size()); ++j) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(d);
    row[j] = -1.0;
    g.push_back(row);
    h.push_back(0.0);
  }
  if (lam) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(d);
    row[d - 1] = -1.0;
    g.push_back(row);
    h.push_back(-kLambdaMin);
  }
  {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(d);
    for (int j = 0; j < static_cast<int>(q.size()); ++j) row[j] = prog.gap[q[j]];
    if (lam) row[d - 1] = off_gap;
    g.push_back(row);
    h.push_back(0.0);
  }

  const int nin = static_cast<int>(g.size());
  PairSolution best;
  double best_obj = kUnbounded;
  Eigen::VectorXd best_x;
  for (unsigned mask = 0; mask < (1u << nin); ++mask) {
    const int active = std::popcount(mask);
    if (active + 1 > d) continue;
    Eigen::MatrixXd a(active + 1, d);
    Eigen::VectorXd rhs(active + 1);
    a.row(0) = a_eq;
    rhs[0] = b_eq;
    int r = 1;
    for (int c = 0; c < nin; ++c) {
      if (mask & (1u << c)) {
        a.row(r) = g[c];
        rhs[r] = h[c];
        ++r;
      }
    }
    const Eigen::MatrixXd winv_at = w.cwiseInverse().asDiagonal() * a.transpose();
    const Eigen::MatrixXd gram = a * winv_at;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rank() < gram.rows()) continue;
    const Eigen::VectorXd y = lu.solve(a * x0 - rhs);
    const Eigen::VectorXd x = x0 - winv_at * y;
    bool ok = true;
    for (int c = 0; c < nin && ok; ++c) {
      if (g[c].dot(x) > h[c] + 1e-12) ok = false;
    }
    if (!ok) continue;
    const double obj = (x - x0).cwiseProduct(w).dot(x - x0);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
  }
  if (!std::isfinite(best_obj)) return best;

  Vec s_hat(m, 0.0);
  const double lambda = lam ? best_x[d - 1] : 1.0;
  for (int j = 0; j < static_cast<int>(q.size()); ++j) s_hat[q[j]] = best_x[j];
  for (int i = 0; i < m; ++i) {
    if (!l.in_q[i]) s_hat[i] = lambda * prog.base[i];
  }
  best.s_hat = clean_simplex_point(std::move(s_hat));
  best.scale = lambda;
  best.radius = norm(sub(best.s_hat, prog.base), Norm::l2);
  best.feasible = true;
  return best;
}

// Slides the least-distance witness toward the domain vertex with the most
// negative margin while staying inside the radius.
inline PairSolution l2_push(const PairProgram& prog, const PairLayout& l, PairSolution sol, double r) {
  const int m = prog.dim();
  Vec best_v;
  double best_margin = dot(sol.s_hat, prog.gap);
  double best_scale = sol.scale;
  auto consider = [&](Vec v, double scale) {
    const double margin = dot(v, prog.gap);
    if (margin < best_margin) {
      best_margin = margin;
      best_v = std::move(v);
      best_scale = scale;
    }
  };
  const double lam_lo = l.has_lambda ? kLambdaMin : 1.0;
  for (int i = 0; i < m; ++i) {
    if (!l.in_q[i]) continue;
    Vec v(m, 0.0);
    for (int j = 0; j < m; ++j) {
      if (!l.in_q[j]) v[j] = lam_lo * prog.base[j];
    }
    v[i] = 1.0 - lam_lo * l.off_mass;
    consider(std::move(v), lam_lo);
  }
  if (l.has_lambda) {
    Vec v(m, 0.0);
    for (int j = 0; j < m; ++j) {
      if (!l.in_q[j]) v[j] = prog.base[j] / l.off_mass;
    }
    consider(std::move(v), 1.0 / l.off_mass);
  }
  if (best_v.empty()) return sol;
  auto point = [&](double t) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x[i] = (1.0 - t) * sol.s_hat[i] + t * best_v[i];
    return x;
  };
  double lo = 0.0, hi = 1.0;
  if (norm(sub(point(1.0), prog.base), Norm::l2) > r) {
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm(sub(point(mid), prog.base), Norm::l2) <= r ? lo : hi) = mid;
    }
  } else {
    lo = 1.0;
  }
  sol.s_hat = clean_simplex_point(point(lo));
  sol.scale = (1.0 - lo) * sol.scale + lo * best_scale;
  sol.radius = norm(sub(sol.s_hat, prog.base), Norm::l2);
  return sol;
}

inline PairSolution from_lp(const PairProgram& prog, const SolveResult& res) {
  PairSolution out;
  const int m = prog.dim();
  Vec s_hat(res.x.begin(), res.x.begin() + m);
  out.s_hat = clean_simplex_point(std::move(s_hat));
  out.scale = res.x[static_cast<std::size_t>(m)];
  out.radius = norm(sub(out.s_hat, prog.base), prog.norm);
  out.feasible = true;
  return out;
}

}  // namespace detail

/// r^min(b; a | Q): the least radius at which the candidate can block.
/// Returns radius = +inf (and no witness) when no admissible point blocks.
inline PairSolution pair_min_radius(const PairProgram& prog) {
  const auto l = detail::layout(prog);
  if (prog.norm == Norm::l2) return detail::l2_min_radius(prog, l);
  GeneralLP lp = detail::pair_lp(prog, l, true);
  lp.objective[static_cast<std::size_t>(prog.dim()) + 1] = 1.0;
  const SolveResult res = lp_solve(lp);
  if (!res.optimal()) return {};
  return detail::from_lp(prog, res);
}

/// Is there an admissible perturbation within radius r under which the
/// candidate blocks? The witness minimises the perturbed margin s_hat . gap.
inline PairSolution pair_feasible(const PairProgram& prog, double r) {
  if (r < 0) throw Error(ErrorCode::input, "pair_feasible: radius must be non-negative");
  const auto l = detail::layout(prog);
  if (prog.norm == Norm::l2) {
    PairSolution sol = detail::l2_min_radius(prog, l);
    if (!sol.feasible || sol.radius > r + 1e-12) return {};
    return detail::l2_push(prog, l, std::move(sol), r);
  }
  GeneralLP lp = detail::pair_lp(prog, l, false);
  const std::size_t rv = static_cast<std::size_t>(prog.dim()) + 1;
  lp.lower[rv] = r;
  lp.upper[rv] = r;
  for (int i = 0; i < prog.dim(); ++i) lp.objective[static_cast<std::size_t>(i)] = prog.gap[i];
  const SolveResult res = lp_solve(lp);
  if (!res.optimal() || res.value > 1e-12) return {};
  return detail::from_lp(prog, res);
}

}  // namespace salmatch
