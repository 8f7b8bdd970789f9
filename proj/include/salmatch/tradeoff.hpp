#pragma once

// Robustness-cost tradeoff: least-cost stable matching whose base radius
// reaches tau (maximum-weight closure on the rotation poset), breakpoints of
// that step function, and the frontier with the LP lower bound.

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "maxflow.hpp"
#include "parallel.hpp"
#include "relaxation.hpp"
#include "robustness.hpp"
#include "stable.hpp"

namespace salmatch {

/// costs[a][b].
using CostTable = std::vector<Vec>;

inline double matching_cost(const CostTable& c, const Matching& mu) {
  double total = 0.0;
  for (int a = 0; a < mu.size(); ++a) total += c[a][mu.partner_of_a[a]];
  return total;
}

inline void check_costs(const Instance& inst, const CostTable& c) {
  if (static_cast<int>(c.size()) != inst.n()) throw Error(ErrorCode::input, "costs: one row per A-agent required");
  for (const auto& row : c) {
    if (static_cast<int>(row.size()) != inst.n()) throw Error(ErrorCode::input, "costs: one entry per B-agent required");
    for (double x : row) {
      if (!std::isfinite(x)) throw Error(ErrorCode::input, "costs: entries must be finite");
    }
  }
}

/// Smallest margin ratio s(b).(u(a) - u(a')) / U(b@a) over the a' that b
/// ranks below a; +inf when a is b's last choice.
inline double pair_ratio(const Instance& inst, const SalienceProfile& S, const std::vector<int>& order, int a, int b,
                         Norm p) {
  const auto at = std::find(order.begin(), order.end(), a);
  if (at + 1 == order.end()) return kUnbounded;
  double u = 0.0;
  for (int x = 0; x < inst.n(); ++x) {
    if (x != a) u = std::max(u, norm(sub(inst.attributes[a], inst.attributes[x]), dual(p)));
  }
  if (u <= 0.0) throw Error(ErrorCode::degenerate_instance, "all attribute vectors coincide");
  double best = kUnbounded;
  for (auto it = at + 1; it != order.end(); ++it) {
    best = std::min(best, dot(S[b].values(), sub(inst.attributes[a], inst.attributes[*it])) / u);
  }
  return best;
}

/// ok[a][b]: b may be matched to a when the base radius must reach tau.
inline std::vector<std::vector<char>> base_feasible_matchings_constraint(const Instance& inst,
                                                                         const SalienceProfile& S, double tau,
                                                                         Norm p) {
  if (tau < 0) throw Error(ErrorCode::input, "tau must be non-negative");
  const int n = inst.n();
  std::vector<std::vector<char>> ok(n, std::vector<char>(n, 1));
  for (int b = 0; b < n; ++b) {
    const auto order = induced_ranking(inst, S, b);
    for (int a = 0; a < n; ++a) ok[a][b] = pair_ratio(inst, S, order, a, b, p) >= tau - 1e-9;
  }
  return ok;
}

struct MinCostResult {
  bool feasible = false;
  Matching matching;
  DownSet downset;
  double cost = kUnbounded;
  double base = 0.0;  // base radius of the matching at the requested eps_base
};

/// Least-cost stable matching using only admissible pairs. A forbidden pair
/// (a, b) lives between the rotation that creates it and the one that
/// removes it, so excluding it is a closure constraint on the poset.
inline MinCostResult min_cost_given_base_radius(const Instance& inst, const SalienceProfile& S, const CostTable& costs,
                                                double tau, Norm p, double eps_base = 0.01,
                                                const RotationPoset* cached = nullptr) {
  check_costs(inst, costs);
  const int n = inst.n();
  const auto ok = base_feasible_matchings_constraint(inst, S, tau, p);
  std::optional<RotationPoset> own;
  if (!cached) own = build_rotation_poset(inst, S);
  const RotationPoset& poset = cached ? *cached : *own;
  const int R = poset.size();

  std::vector<std::vector<int>> creator(n, std::vector<int>(n, -1)), remover(n, std::vector<int>(n, -1));
  std::vector<std::vector<char>> occurs(n, std::vector<char>(n, 0));
  for (int a = 0; a < n; ++a) occurs[a][poset.mu_a.partner_of_a[a]] = 1;
  std::vector<double> delta(R, 0.0);
  for (const auto& rho : poset.rotations) {
    for (const auto& [a, b] : rho.produced()) {
      creator[a][b] = rho.id;
      occurs[a][b] = 1;
      delta[rho.id] += costs[a][b];
    }
    for (const auto& [a, b] : rho.cycle) {
      remover[a][b] = rho.id;
      delta[rho.id] -= costs[a][b];
    }
  }

  // implies[x] lists y with x in D => y in D.
  std::vector<std::vector<int>> implies(R);
  for (int r = 0; r < R; ++r) implies[r] = poset.preds[r];
  std::vector<int> forced_in, forced_out;
  MinCostResult out;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (!occurs[a][b] || ok[a][b]) continue;
      const int in = creator[a][b], rm = remover[a][b];
      if (in < 0 && rm < 0) return out;
      if (in < 0) {
        forced_in.push_back(rm);
      } else if (rm < 0) {
        forced_out.push_back(in);
      } else {
        implies[in].push_back(rm);
      }
    }
  }

  std::vector<char> must(R, 0), banned(R, 0);
  {
    std::vector<int> stack(forced_in);
    for (int r : stack) must[r] = 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y : implies[x]) {
        if (!must[y]) {
          must[y] = 1;
          stack.push_back(y);
        }
      }
    }
    std::vector<std::vector<int>> implied_by(R);
    for (int x = 0; x < R; ++x) {
      for (int y : implies[x]) implied_by[y].push_back(x);
    }
    stack = forced_out;
    for (int r : stack) banned[r] = 1;
    while (!stack.empty()) {
      const int y = stack.back();
      stack.pop_back();
      for (int x : implied_by[y]) {
        if (!banned[x]) {
          banned[x] = 1;
          stack.push_back(x);
        }
      }
    }
  }
  for (int r = 0; r < R; ++r) {
    if (must[r] && banned[r]) return out;
  }

  // Maximum-weight closure over the free rotations with weight -delta.
  const int s = R, t = R + 1;
  MaxFlow flow(R + 2);
  double big = 1.0;
  for (double d : delta) big += std::abs(d);
  for (int r = 0; r < R; ++r) {
    if (must[r] || banned[r]) continue;
    if (-delta[r] > 0) flow.add_edge(s, r, -delta[r]);
    if (-delta[r] < 0) flow.add_edge(r, t, delta[r]);
    for (int y : implies[r]) {
      if (!must[y]) flow.add_edge(r, y, big);
    }
  }
  flow.run(s, t);
  const auto side = flow.source_side(s);

  DownSet d = DownSet::empty(static_cast<std::size_t>(R));
  for (int r = 0; r < R; ++r) {
    if (must[r] || (!banned[r] && side[r])) d.members[static_cast<std::size_t>(r)] = true;
  }
  out.feasible = true;
  out.downset = d;
  out.matching = matching_from_downset(poset, d);
  out.cost = matching_cost(costs, out.matching);
  out.base = base_radius(inst, S, out.matching, p, eps_base);
  return out;
}

/// Every margin ratio at which a pair's admissibility can change.
inline std::vector<double> breakpoints(const Instance& inst, const SalienceProfile& S, Norm p) {
  std::vector<double> out;
  const int n = inst.n();
  for (int b = 0; b < n; ++b) {
    const auto order = induced_ranking(inst, S, b);
    for (int a = 0; a < n; ++a) {
      const double r = pair_ratio(inst, S, order, a, b, p);
      if (std::isfinite(r)) out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end());
  std::vector<double> merged;
  for (double x : out) {
    if (merged.empty() || x - merged.back() > 1e-12) merged.push_back(x);
  }
  return merged;
}

struct FrontierPoint {
  double tau = 0.0;
  double c_ub = kUnbounded;  // +inf when no stable matching passes
  double c_lb = 0.0;
  std::optional<Matching> matching_ub;
};

/// Points at tau = 0 and at each breakpoint t and t + 1e-6.
inline std::vector<FrontierPoint> frontier(const Instance& inst, const SalienceProfile& S, const CostTable& costs,
                                           Norm p, int k, double eps_base = 0.01, int workers = 1) {
  check_costs(inst, costs);
  std::vector<double> taus{0.0};
  for (double t : breakpoints(inst, S, p)) {
    taus.push_back(t);
    taus.push_back(t + 1e-6);
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  const Relaxation rel(inst, S, k, p, workers);
  const RotationPoset poset = build_rotation_poset(rel.prefs());
  std::vector<FrontierPoint> pts(taus.size());
  parallel_for(taus.size(), workers, [&](std::size_t i) {
    FrontierPoint& pt = pts[i];
    pt.tau = taus[i];
    const auto ub = min_cost_given_base_radius(inst, S, costs, pt.tau, p, eps_base, &poset);
    if (ub.feasible) {
      pt.c_ub = ub.cost;
      pt.matching_ub = ub.matching;
    }
    const auto lb = rel.cost_lower_bound(costs, pt.tau);
    pt.c_lb = lb.solve.optimal() ? lb.solve.value : kUnbounded;
  });
  return pts;
}

}  // namespace salmatch
