#pragma once

// Stable-matching polytope relaxations: the global upper bound on the best
// achievable radius, its restriction to a sublattice, and the cost lower
// bound with vulnerability cuts.
//
// The upper bound uses a robust form of the stability rows: for radius r,
// b's partner a' only counts as covering the pair (a, b) if no admissible
// perturbation within r makes b weakly prefer a to a'. Integral points of
// this polytope are exactly the stable matchings with r* > r, so the
// largest feasible r bounds max r* and is attained at a pair threshold.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "lp.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "pair_program.hpp"
#include "parallel.hpp"
#include "stable.hpp"

namespace salmatch {

/// y[a][b]; rows and columns sum to one.
using FractionalMatching = std::vector<Vec>;

struct FractionalResult {
  SolveResult solve;
  FractionalMatching y;  // empty unless optimal
};

struct UbResult {
  double value = kUnbounded;             // +inf when no radius is binding
  bool integral = false;                 // optimizer below the bound is a 0/1 point
  std::optional<Matching> matching;      // decoded when integral
  FractionalMatching y;
};

/// Decodes y as a matching when every entry is within 1e-6 of {0, 1}.
inline std::optional<Matching> decode_integral(const FractionalMatching& y) {
  const int n = static_cast<int>(y.size());
  std::vector<int> a_to_b(n, -1);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (std::abs(y[a][b] - 1.0) <= 1e-6) {
        if (a_to_b[a] != -1) return std::nullopt;
        a_to_b[a] = b;
      } else if (std::abs(y[a][b]) > 1e-6) {
        return std::nullopt;
      }
    }
    if (a_to_b[a] == -1) return std::nullopt;
  }
  try {
    return Matching::from_a(std::move(a_to_b));
  } catch (const Error&) {
    return std::nullopt;
  }
}

class Relaxation {
 public:
  Relaxation(const Instance& inst, const SalienceProfile& S, int k, Norm p, int workers = 1)
      : P_(preferences(inst, S)), n_(inst.n()) {
    if (k < 1 || k > inst.m) throw Error(ErrorCode::input, "k must lie in [1, m]");
    // thr_[b][x][y]: least radius at which b weakly prefers y to x.
    thr_.assign(n_, std::vector<Vec>(n_, Vec(n_, kUnbounded)));
    const auto qs = supports(inst.m, k);
    std::vector<std::array<int, 3>> jobs;
    for (int b = 0; b < n_; ++b) {
      for (int x = 0; x < n_; ++x) {
        for (int y = 0; y < n_; ++y) {
          if (x != y) jobs.push_back({b, x, y});
        }
      }
    }
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
      const auto [b, x, y] = jobs[i];
      const Vec gap = sub(inst.attributes[x], inst.attributes[y]);
      double best = kUnbounded;
      for (const auto& q : qs) best = std::min(best, pair_min_radius(PairProgram{S[b].values(), gap, q, p}).radius);
      thr_[b][x][y] = best;
    });
  }

  const Preferences& prefs() const { return P_; }
  int n() const { return n_; }

  /// Radius needed for b to weakly prefer y over x.
  double threshold(int b, int x, int y) const { return thr_[b][x][y]; }

  /// The polytope at radius r. `strict` drops a partner whose threshold is
  /// exactly r; r < 0 gives the plain stable-matching polytope.
  GeneralLP polytope(double r, bool strict, const std::vector<std::pair<int, int>>& zero = {}) const {
    GeneralLP lp(static_cast<std::size_t>(n_) * n_);
    for (int a = 0; a < n_; ++a) {
      auto& row = lp.add_row(Sense::eq, 1.0);
      for (int b = 0; b < n_; ++b) row.coeffs[var(a, b)] = 1.0;
    }
    for (int b = 0; b < n_; ++b) {
      auto& row = lp.add_row(Sense::eq, 1.0);
      for (int a = 0; a < n_; ++a) row.coeffs[var(a, b)] = 1.0;
    }
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < n_; ++b) {
        auto& row = lp.add_row(Sense::ge, 1.0);
        for (int pos = 0; pos <= P_.a_rank[a][b]; ++pos) row.coeffs[var(a, P_.a_list[a][pos])] = 1.0;
        for (int pos = 0; pos < P_.b_rank[b][a]; ++pos) {
          const int a2 = P_.b_list[b][pos];
          const double t = thr_[b][a2][a];
          if (r < 0 || t > r || (!strict && t >= r)) row.coeffs[var(a2, b)] = 1.0;
        }
      }
    }
    for (const auto& [a, b] : zero) lp.upper[var(a, b)] = 0.0;
    return lp;
  }

  FractionalResult solve(const GeneralLP& lp) const {
    FractionalResult out;
    out.solve = lp_solve(lp);
    if (out.solve.optimal()) {
      out.y.assign(n_, Vec(n_, 0.0));
      for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) out.y[a][b] = out.solve.x[var(a, b)];
      }
    }
    return out;
  }

  /// Is the polytope at radius r non-empty? r = 0 is the plain polytope.
  bool feasible(double r, const std::vector<std::pair<int, int>>& zero = {}) const {
    return solve(polytope(r == 0.0 ? -1.0 : r, false, zero)).solve.optimal();
  }

  /// Largest r keeping the polytope non-empty, found exactly among the
  /// pair thresholds.
  UbResult upper_bound(const std::vector<std::pair<int, int>>& zero = {}) const {
    UbResult out;
    FractionalResult last = solve(polytope(-1.0, false, zero));
    if (!last.solve.optimal()) {
      // Restriction excludes every stable matching.
      out.value = -kUnbounded;
      return out;
    }
    Vec cand{0.0};
    for (int b = 0; b < n_; ++b) {
      for (int x = 0; x < n_; ++x) {
        for (int y = 0; y < n_; ++y) {
          if (x != y && P_.b_prefers(b, x, y) && std::isfinite(thr_[b][x][y])) cand.push_back(thr_[b][x][y]);
        }
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    // First candidate whose strict polytope is empty.
    std::size_t lo = 0, hi = cand.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (solve(polytope(cand[mid], true, zero)).solve.optimal()) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo > 0) last = solve(polytope(cand[lo - 1], true, zero));
    out.value = lo < cand.size() ? cand[lo] : kUnbounded;
    out.y = last.y;
    out.matching = decode_integral(out.y);
    out.integral = out.matching.has_value();
    return out;
  }

  /// Pairs (a, b) that b ranks below its partner in mu.
  std::vector<std::pair<int, int>> below(const Matching& mu) const {
    std::vector<std::pair<int, int>> out;
    for (int b = 0; b < n_; ++b) {
      for (int a = 0; a < n_; ++a) {
        if (P_.b_prefers(b, mu.partner_of_b[b], a)) out.emplace_back(a, b);
      }
    }
    return out;
  }

  /// Upper bound over the stable matchings that B weakly prefers to mu.
  UbResult restricted_upper_bound(const Matching& mu) const { return upper_bound(below(mu)); }

  /// Vulnerability cuts y_ab' + y_a'b <= 1, as (a, b', a', b) quadruples.
  std::vector<std::array<int, 4>> cuts(double tau) const {
    std::vector<std::array<int, 4>> out;
    for (int a = 0; a < n_; ++a) {
      for (int a2 = 0; a2 < n_; ++a2) {
        if (a2 == a) continue;
        for (int b = 0; b < n_; ++b) {
          if (!(thr_[b][a2][a] < tau - 1e-9)) continue;
          for (int b2 = 0; b2 < n_; ++b2) {
            if (b2 != b && P_.a_prefers(a, b, b2)) out.push_back({a, b2, a2, b});
          }
        }
      }
    }
    return out;
  }

  /// Adds violated cuts until none remain; the optimum equals that of the
  /// LP carrying every cut.
  FractionalResult cost_lower_bound(const std::vector<Vec>& costs, double tau) const {
    GeneralLP lp = polytope(-1.0, false);
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < n_; ++b) lp.objective[var(a, b)] = costs[a][b];
    }
    const auto all = cuts(tau);
    std::vector<char> added(all.size(), 0);
    while (true) {
      FractionalResult res = solve(lp);
      if (!res.solve.optimal()) return res;
      bool any = false;
      for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& [a, b2, a2, b] = all[i];
        if (added[i] || res.y[a][b2] + res.y[a2][b] <= 1.0 + 1e-9) continue;
        auto& row = lp.add_row(Sense::le, 1.0);
        row.coeffs[var(a, b2)] = 1.0;
        row.coeffs[var(a2, b)] = 1.0;
        added[i] = 1;
        any = true;
      }
      if (!any) return res;
    }
  }

  std::size_t var(int a, int b) const { return static_cast<std::size_t>(a) * n_ + b; }

 private:
  Preferences P_;
  int n_;
  std::vector<std::vector<Vec>> thr_;
};

/// Solves an LP over the stable-matching polytope with extra rows.
inline FractionalResult rothblum_feasible(const Instance& inst, const SalienceProfile& S,
                                          const std::vector<LpRow>& extra = {}, const Vec& objective = {}) {
  const Relaxation rel(inst, S, inst.m, Norm::linf);
  GeneralLP lp = rel.polytope(-1.0, false);
  for (const auto& row : extra) lp.rows.push_back(row);
  if (!objective.empty()) lp.objective = objective;
  return rel.solve(lp);
}

inline bool ub_feasible(const Instance& inst, const SalienceProfile& S, double r, int k, Norm p) {
  if (r < 0) throw Error(ErrorCode::input, "radius must be non-negative");
  return Relaxation(inst, S, k, p).feasible(r);
}

inline UbResult global_ub(const Instance& inst, const SalienceProfile& S, int k, Norm p, double eps_ub = 1e-4) {
  if (!(eps_ub > 0.0)) throw Error(ErrorCode::input, "eps_ub must be positive");
  return Relaxation(inst, S, k, p).upper_bound();
}

inline UbResult restricted_ub(const Instance& inst, const SalienceProfile& S, const DownSet& d, int k, Norm p,
                              double eps_ub = 1e-4) {
  if (!(eps_ub > 0.0)) throw Error(ErrorCode::input, "eps_ub must be positive");
  const Relaxation rel(inst, S, k, p);
  const auto poset = build_rotation_poset(rel.prefs());
  return rel.restricted_upper_bound(matching_from_downset(poset, d));
}

/// LP lower bound on the least cost of a stable matching with r* >= tau.
inline double cost_lb(const Instance& inst, const SalienceProfile& S, const std::vector<Vec>& costs, double tau, int k,
                      Norm p) {
  if (tau < 0) throw Error(ErrorCode::input, "tau must be non-negative");
  const auto res = Relaxation(inst, S, k, p).cost_lower_bound(costs, tau);
  return res.solve.optimal() ? res.solve.value : kUnbounded;
}

}  // namespace salmatch
