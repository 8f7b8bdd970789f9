#pragma once

// Anytime best-first search over down-sets of the rotation poset for the
// stable matching with the largest exact robustness radius.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "relaxation.hpp"
#include "robustness.hpp"
#include "stable.hpp"

namespace salmatch {

struct SearchNode {
  DownSet downset;
  double ub = kUnbounded;
  Matching matching;
  std::optional<double> exact_radius;
};

struct TraceEvent {
  std::string event;  // init, expand, improve, prune, certify, budget
  double lb = 0.0;
  double ub_frontier = 0.0;
  std::string node;
};

struct SearchState {
  double lb = -kUnbounded;
  Matching best;
  DownSet best_downset;
  std::vector<SearchNode> frontier;  // best first
  long expansions = 0;
  bool certified = false;
  std::vector<TraceEvent> trace;

  /// max(lb, largest frontier bound): every stable matching has r* below it.
  double ub_frontier() const { return frontier.empty() ? lb : std::max(lb, frontier.front().ub); }
};

struct SearchOptions {
  long budget = -1;         // maximum expansions, negative for none
  double eps_ub = 1e-4;
  bool exhaustive = false;  // no certificate stop; ties go to the lexicographically smallest matching
  int workers = 1;
};

/// LB from the B-optimal matching.
inline std::pair<Matching, double> lb_init(const Instance& inst, const SalienceProfile& S, int k, Norm p,
                                           int workers = 1) {
  Matching mu_b = deferred_acceptance(inst, S, Side::B);
  const double r = robustness_radius(inst, S, mu_b, k, p, workers).radius;
  return {std::move(mu_b), r};
}

namespace detail {

// Larger ub first, then smaller |D|, then smaller rotation-id list.
inline bool node_before(const SearchNode& x, const SearchNode& y) {
  if (x.ub != y.ub) return x.ub > y.ub;
  const auto cx = x.downset.count(), cy = y.downset.count();
  if (cx != cy) return cx < cy;
  return x.downset.ids() < y.downset.ids();
}

}  // namespace detail

inline SearchState most_robust_anytime(const Instance& inst, const SalienceProfile& S, int k, Norm p,
                                       const SearchOptions& opt = {}) {
  if (!(opt.eps_ub > 0.0)) throw Error(ErrorCode::input, "eps_ub must be positive");
  const Relaxation rel(inst, S, k, p, opt.workers);
  const RotationPoset poset = build_rotation_poset(rel.prefs());
  const std::size_t R = static_cast<std::size_t>(poset.size());

  SearchState st;
  auto [mu_b, r_b] = lb_init(inst, S, k, p, opt.workers);
  st.lb = r_b;
  st.best = std::move(mu_b);
  st.best_downset = DownSet::full(R);

  std::set<std::string> seen;
  auto push = [&](SearchNode node) {
    const auto at = std::lower_bound(st.frontier.begin(), st.frontier.end(), node, detail::node_before);
    st.frontier.insert(at, std::move(node));
  };
  auto log = [&](std::string event, const std::string& key) {
    st.trace.push_back({std::move(event), st.lb, st.ub_frontier(), key});
  };
  auto prunable = [&](double ub) { return opt.exhaustive ? ub < st.lb - 1e-12 : ub <= st.lb + opt.eps_ub; };

  {
    SearchNode root;
    root.downset = DownSet::empty(R);
    root.matching = poset.mu_a;
    root.ub = rel.restricted_upper_bound(root.matching).value;
    seen.insert(root.downset.key());
    push(std::move(root));
  }
  log("init", st.frontier.front().downset.key());

  while (true) {
    if (opt.exhaustive) {
      std::erase_if(st.frontier, [&](const SearchNode& node) { return prunable(node.ub); });
    } else if (!st.frontier.empty() && prunable(st.frontier.front().ub)) {
      // Sorted by ub, so every remaining node is prunable too.
      for (const auto& node : st.frontier) log("prune", node.downset.key());
      st.frontier.clear();
    }
    if (st.frontier.empty()) {
      st.certified = true;
      log("certify", "");
      break;
    }
    if (opt.budget >= 0 && st.expansions >= opt.budget) {
      log("budget", "");
      break;
    }

    SearchNode node = std::move(st.frontier.front());
    st.frontier.erase(st.frontier.begin());
    ++st.expansions;
    node.exact_radius = robustness_radius(inst, S, node.matching, k, p, opt.workers).radius;
    const double r = *node.exact_radius;
    const bool tie = r == st.lb || std::abs(r - st.lb) <= 1e-12;
    const bool improved = (!tie && r > st.lb) || (opt.exhaustive && tie && node.matching < st.best);
    if (improved) {
      st.lb = r;
      st.best = node.matching;
      st.best_downset = node.downset;
    }

    std::vector<SearchNode> children;
    for (int rho : exposed_rotations(poset, node.downset)) {
      DownSet d = node.downset.with(rho);
      if (!seen.insert(d.key()).second) continue;
      SearchNode child;
      child.matching = eliminate_unchecked(node.matching, poset.rotations[rho]);
      child.downset = std::move(d);
      children.push_back(std::move(child));
    }
    parallel_for(children.size(), opt.workers, [&](std::size_t i) {
      children[i].ub = rel.restricted_upper_bound(children[i].matching).value;
    });
    std::vector<std::string> pruned;
    for (auto& child : children) {
      if (prunable(child.ub)) {
        pruned.push_back(child.downset.key());
      } else {
        push(std::move(child));
      }
    }
    for (const auto& key : pruned) log("prune", key);
    if (improved) log("improve", node.downset.key());
    log("expand", node.downset.key());
  }
  return st;
}

}  // namespace salmatch
