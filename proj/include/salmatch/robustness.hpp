#pragma once

// Robustness verification, pairwise thresholds, the exact radius r*(mu),
// the dual attribute gap and the closed-form base radius.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "pair_program.hpp"
#include "parallel.hpp"

namespace salmatch {

/// Blocking witness: b's salience replaced by `perturbation` makes (a, b) block.
struct Witness {
  int a = -1, b = -1;
  Perturbation perturbation;
  double distance = 0.0;
};

struct PairThreshold {
  int a = -1, b = -1;
  double radius = kUnbounded;
  std::vector<int> support;  // argmin Q
  PairSolution solution;
  bool attained = true;  // false when a loses the tie-break, so the radius is an infimum
};

struct RobustnessReport {
  double radius = kUnbounded;
  std::optional<PairThreshold> critical;  // (a, b, Q) of the minimum
  std::optional<Witness> witness;
  std::map<std::pair<int, int>, double> per_pair;  // (a, b) -> r^min(b; a)
};

struct VerifyResult {
  bool robust = true;
  std::optional<Witness> witness;
};

namespace detail {

inline void require_stable(const Instance& inst, const SalienceProfile& S, const Matching& mu) {
  if (const auto bp = find_blocking_pair(inst, S, mu)) {
    throw Error(ErrorCode::unstable_matching, "matching is not stable: (" + inst.a_names[bp->first] + ", " +
                                                  inst.b_names[bp->second] + ") blocks");
  }
}

inline void check_budget(const Instance& inst, int k) {
  if (k < 1 || k > inst.m) throw Error(ErrorCode::input, "k must lie in [1, m]");
}

inline PairProgram program(const Instance& inst, const SalienceProfile& S, const Matching& mu, int b, int a,
                           std::vector<int> q, Norm p) {
  return PairProgram{S[b].values(), attribute_gap(inst, mu, b, a), std::move(q), p};
}

inline Witness make_witness(int a, int b, const std::vector<int>& q, const PairSolution& sol, const SalienceVector& s,
                            Norm p) {
  Witness w;
  w.a = a;
  w.b = b;
  w.perturbation.agent = b;
  w.perturbation.support = q;
  w.perturbation.new_vector = SalienceVector::make(sol.s_hat);
  w.perturbation.scale = sol.scale;
  w.distance = perturbation_distance(s, w.perturbation.new_vector, p);
  return w;
}

struct Task {
  int b, a;
  std::vector<int> q;
};

inline std::vector<Task> tasks(const Instance& inst, const Matching& mu, int k) {
  std::vector<Task> out;
  const auto qs = supports(inst.m, k);
  for (int b = 0; b < inst.n(); ++b) {
    for (int a : blockers(inst, mu, b)) {
      for (const auto& q : qs) out.push_back({b, a, q});
    }
  }
  return out;
}

}  // namespace detail

/// Is mu (k, r, p)-robust? On failure the witness is the first blocking
/// (b, a, Q) in index order.
inline VerifyResult verify_robust(const Instance& inst, const SalienceProfile& S, const Matching& mu, int k, double r,
                                  Norm p, int workers = 1) {
  detail::check_budget(inst, k);
  if (r < 0) throw Error(ErrorCode::input, "radius must be non-negative");
  detail::require_stable(inst, S, mu);
  const auto tasks = detail::tasks(inst, mu, k);
  std::vector<PairSolution> sols(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    sols[i] = pair_feasible(detail::program(inst, S, mu, t.b, t.a, t.q, p), r);
  });
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (sols[i].feasible) {
      const auto& t = tasks[i];
      return {false, detail::make_witness(t.a, t.b, t.q, sols[i], S[t.b], p)};
    }
  }
  return {};
}

/// r^min(b; a): minimum over supports |Q| <= k of the pair program.
inline PairThreshold pair_threshold(const Instance& inst, const SalienceProfile& S, const Matching& mu, int b, int a,
                                    int k, Norm p) {
  detail::check_budget(inst, k);
  check_matching(inst, mu);
  const auto h = blockers(inst, mu, b);
  if (std::find(h.begin(), h.end(), a) == h.end()) {
    throw Error(ErrorCode::precondition, "pair_threshold: " + inst.a_names[a] + " does not prefer " + inst.b_names[b]);
  }
  PairThreshold best;
  best.a = a;
  best.b = b;
  for (const auto& q : supports(inst.m, k)) {
    PairSolution sol = pair_min_radius(detail::program(inst, S, mu, b, a, q, p));
    if (sol.radius < best.radius - 1e-12) {
      best.radius = sol.radius;
      best.support = q;
      best.solution = std::move(sol);
    }
  }
  best.attained = inst.tie_position(a) < inst.tie_position(mu.partner_of_b[b]);
  return best;
}

/// r*(mu): the least pairwise threshold, with its canonical (b, a, Q) argmin.
inline RobustnessReport robustness_radius(const Instance& inst, const SalienceProfile& S, const Matching& mu, int k,
                                          Norm p, int workers = 1) {
  detail::check_budget(inst, k);
  detail::require_stable(inst, S, mu);
  std::vector<std::pair<int, int>> pairs;
  for (int b = 0; b < inst.n(); ++b) {
    for (int a : blockers(inst, mu, b)) pairs.emplace_back(b, a);
  }
  std::vector<PairThreshold> th(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    th[i] = pair_threshold(inst, S, mu, pairs[i].first, pairs[i].second, k, p);
  });
  RobustnessReport rep;
  for (auto& t : th) {
    rep.per_pair[{t.a, t.b}] = t.radius;
    if (t.radius < rep.radius - 1e-12) {
      rep.radius = t.radius;
      rep.critical = t;
    }
  }
  if (rep.critical) {
    rep.witness = detail::make_witness(rep.critical->a, rep.critical->b, rep.critical->support,
                                       rep.critical->solution, S[rep.critical->b], p);
  }
  return rep;
}

/// U_{p*}(b): the largest dual-norm gap between b's partner and any other a.
inline double dual_gap(const Instance& inst, const Matching& mu, int b, Norm p) {
  check_matching(inst, mu);
  if (inst.n() < 2) throw Error(ErrorCode::precondition, "dual_gap needs at least two A-agents");
  const int partner = mu.partner_of_b[b];
  double best = 0.0;
  for (int a = 0; a < inst.n(); ++a) {
    if (a != partner) best = std::max(best, norm(sub(inst.attributes[partner], inst.attributes[a]), dual(p)));
  }
  if (best <= 0.0) throw Error(ErrorCode::degenerate_instance, "all attribute vectors coincide");
  return best;
}

/// Base inner radius (1 - eps) min_b min_{a below partner} margin / U_{p*}(b).
inline double base_radius(const Instance& inst, const SalienceProfile& S, const Matching& mu, Norm p,
                          double eps_base = 0.01) {
  if (!(eps_base >= 0.0 && eps_base < 1.0)) throw Error(ErrorCode::input, "eps_base must lie in [0, 1)");
  detail::require_stable(inst, S, mu);
  if (inst.n() >= 2 && std::all_of(inst.attributes.begin(), inst.attributes.end(),
                                   [&](const Vec& u) { return u == inst.attributes[0]; })) {
    throw Error(ErrorCode::degenerate_instance, "all attribute vectors coincide");
  }
  double best = kUnbounded;
  for (int b = 0; b < inst.n(); ++b) {
    const auto order = induced_ranking(inst, S, b);
    const int partner = mu.partner_of_b[b];
    const auto at = std::find(order.begin(), order.end(), partner);
    if (at + 1 == order.end()) continue;
    const double u = dual_gap(inst, mu, b, p);
    for (auto it = at + 1; it != order.end(); ++it) {
      const double margin = dot(S[b].values(), attribute_gap(inst, mu, b, *it));
      best = std::min(best, margin / u);
    }
  }
  return is_unbounded(best) ? best : (1.0 - eps_base) * best;
}

}  // namespace salmatch
