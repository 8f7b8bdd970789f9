#pragma once

// Market model: agents, attribute vectors, salience-induced rankings,
// stability predicates and post-normalised salience perturbations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace salmatch {

/// A point of the probability simplex. Construction validates and repairs
/// drift up to kTol by renormalising; anything larger is rejected.
class SalienceVector {
 public:
  SalienceVector() = default;

  static SalienceVector make(Vec w) {
    if (w.empty()) throw Error(ErrorCode::input, "salience vector is empty");
    double sum = 0.0;
    for (double& x : w) {
      if (!std::isfinite(x)) throw Error(ErrorCode::input, "salience component is not finite");
      if (x < -kTol) throw Error(ErrorCode::input, "salience component is negative");
      if (x < 0.0) x = 0.0;
      sum += x;
    }
    if (std::abs(sum - 1.0) > kTol) {
      throw Error(ErrorCode::non_simplex, "salience row sum " + std::to_string(sum) + " is not 1");
    }
    // leave rounding noise alone, so that re-reading a written row is exact
    if (std::abs(sum - 1.0) > 1e-12) {
      for (double& x : w) x /= sum;
    }
    SalienceVector s;
    s.w_ = std::move(w);
    return s;
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const Vec& values() const { return w_; }
  operator std::span<const double>() const { return w_; }

  friend bool operator==(const SalienceVector&, const SalienceVector&) = default;

 private:
  Vec w_;
};

/// One salience row per B-agent, indexed by B-agent index.
using SalienceProfile = std::vector<SalienceVector>;

/// Bijection A -> B with its cached inverse. Agents are referred to by index.
struct Matching {
  std::vector<int> partner_of_a;  // a -> b
  std::vector<int> partner_of_b;  // b -> a

  static Matching from_a(std::vector<int> a_to_b) {
    Matching mu;
    const int n = static_cast<int>(a_to_b.size());
    mu.partner_of_b.assign(n, -1);
    for (int a = 0; a < n; ++a) {
      const int b = a_to_b[a];
      if (b < 0 || b >= n || mu.partner_of_b[b] != -1) {
        throw Error(ErrorCode::input, "matching is not a bijection");
      }
      mu.partner_of_b[b] = a;
    }
    mu.partner_of_a = std::move(a_to_b);
    return mu;
  }

  int size() const { return static_cast<int>(partner_of_a.size()); }

  friend bool operator==(const Matching& x, const Matching& y) { return x.partner_of_a == y.partner_of_a; }
  friend auto operator<=>(const Matching& x, const Matching& y) { return x.partner_of_a <=> y.partner_of_a; }
};

/// A two-sided market whose B side ranks A by salience-weighted attribute
/// scores. All per-agent tables are indexed by agent index; names are kept
/// for I/O only.
struct Instance {
  int m = 0;
  std::vector<std::string> a_names, b_names;
  std::vector<Vec> attributes;             // per a, length m
  std::vector<std::vector<int>> a_prefs;   // per a, b indices best first
  SalienceProfile salience;                // per b
  std::vector<int> tie_break;              // a indices, earliest wins ties
  std::optional<std::vector<Vec>> costs;   // costs[a][b]

  int n() const { return static_cast<int>(a_names.size()); }

  int a_index(const std::string& name) const { return find(a_names, name, "A"); }
  int b_index(const std::string& name) const { return find(b_names, name, "B"); }

  /// Position of b in a's static list (0 = top).
  int rank_a(int a, int b) const {
    const auto& list = a_prefs[a];
    return static_cast<int>(std::find(list.begin(), list.end(), b) - list.begin());
  }

  /// True iff a strictly prefers b to b2.
  bool a_prefers(int a, int b, int b2) const { return rank_a(a, b) < rank_a(a, b2); }

  int tie_position(int a) const {
    return static_cast<int>(std::find(tie_break.begin(), tie_break.end(), a) - tie_break.begin());
  }

  /// Checks every structural invariant; throws Error naming the offending field.
  void validate() const {
    const int sz = n();
    if (sz < 1) throw Error(ErrorCode::input, "a_agents: market must have at least one agent per side");
    if (static_cast<int>(b_names.size()) != sz) {
      throw Error(ErrorCode::input, "b_agents: |A| and |B| differ");
    }
    if (m < 2) throw Error(ErrorCode::input, "m: attribute dimension must be at least 2");
    if (static_cast<int>(attributes.size()) != sz) throw Error(ErrorCode::missing_field, "attributes: one row per A-agent required");
    for (int a = 0; a < sz; ++a) {
      if (static_cast<int>(attributes[a].size()) != m) {
        throw Error(ErrorCode::input, "attributes." + a_names[a] + ": length differs from m");
      }
      for (double x : attributes[a]) {
        if (!std::isfinite(x) || x < 0.0) {
          throw Error(ErrorCode::input, "attributes." + a_names[a] + ": components must be finite and non-negative");
        }
      }
    }
    if (static_cast<int>(a_prefs.size()) != sz) throw Error(ErrorCode::missing_field, "a_prefs: one list per A-agent required");
    for (int a = 0; a < sz; ++a) {
      if (!is_permutation(a_prefs[a], sz)) {
        throw Error(ErrorCode::non_permutation, "a_prefs." + a_names[a] + ": not a permutation of B");
      }
    }
    if (static_cast<int>(salience.size()) != sz) throw Error(ErrorCode::missing_field, "salience: one row per B-agent required");
    for (int b = 0; b < sz; ++b) {
      if (static_cast<int>(salience[b].size()) != m) {
        throw Error(ErrorCode::input, "salience." + b_names[b] + ": length differs from m");
      }
    }
    if (!is_permutation(tie_break, sz)) throw Error(ErrorCode::non_permutation, "tie_break: not a permutation of A");
    if (costs) {
      if (static_cast<int>(costs->size()) != sz) throw Error(ErrorCode::input, "costs: one row per A-agent required");
      for (const auto& row : *costs) {
        if (static_cast<int>(row.size()) != sz) throw Error(ErrorCode::input, "costs: one entry per B-agent required");
        for (double c : row) {
          if (!std::isfinite(c)) throw Error(ErrorCode::input, "costs: entries must be finite");
        }
      }
    }
  }

  static bool is_permutation(const std::vector<int>& v, int n) {
    if (static_cast<int>(v.size()) != n) return false;
    std::vector<char> seen(n, 0);
    for (int x : v) {
      if (x < 0 || x >= n || seen[x]) return false;
      seen[x] = 1;
    }
    return true;
  }

 private:
  static int find(const std::vector<std::string>& names, const std::string& name, const char* side) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorCode::input, std::string("unknown ") + side + "-agent '" + name + "'");
    return static_cast<int>(it - names.begin());
  }
};

/// Salience-weighted score s . u.
inline double score(std::span<const double> s, std::span<const double> u) {
  if (s.size() != u.size()) throw Error(ErrorCode::input, "score: dimension mismatch");
  return dot(s, u);
}

/// True iff b (with salience s) ranks a strictly above a2: higher score, or
/// an equal score with a earlier in the tie-break order.
inline bool b_prefers(const Instance& inst, std::span<const double> s, int a, int a2) {
  if (a == a2) return false;
  const double x = dot(s, inst.attributes[a]);
  const double y = dot(s, inst.attributes[a2]);
  if (x != y) return x > y;
  return inst.tie_position(a) < inst.tie_position(a2);
}

inline std::vector<int> induced_ranking(const Instance& inst, const SalienceProfile& S, int b) {
  if (b < 0 || b >= inst.n()) throw Error(ErrorCode::input, "induced_ranking: unknown B-agent");
  const auto& s = S[b].values();
  std::vector<int> order(inst.tie_break);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return dot(s, inst.attributes[x]) > dot(s, inst.attributes[y]);
  });
  return order;
}

inline void check_matching(const Instance& inst, const Matching& mu) {
  if (mu.size() != inst.n()) throw Error(ErrorCode::input, "matching size differs from market size");
}

inline bool is_blocking_pair(const Instance& inst, const SalienceProfile& S, const Matching& mu, int a, int b) {
  check_matching(inst, mu);
  if (mu.partner_of_a[a] == b) return false;
  return inst.a_prefers(a, b, mu.partner_of_a[a]) && b_prefers(inst, S[b].values(), a, mu.partner_of_b[b]);
}

/// Returns the first blocking pair (a, b) in index order, if any.
inline std::optional<std::pair<int, int>> find_blocking_pair(const Instance& inst, const SalienceProfile& S,
                                                             const Matching& mu) {
  check_matching(inst, mu);
  for (int a = 0; a < inst.n(); ++a) {
    for (int b = 0; b < inst.n(); ++b) {
      if (is_blocking_pair(inst, S, mu, a, b)) return std::make_pair(a, b);
    }
  }
  return std::nullopt;
}

inline bool is_stable(const Instance& inst, const SalienceProfile& S, const Matching& mu) {
  return !find_blocking_pair(inst, S, mu).has_value();
}

/// H_mu(b): the A-agents that strictly prefer b to their current partner.
inline std::vector<int> blockers(const Instance& inst, const Matching& mu, int b) {
  check_matching(inst, mu);
  std::vector<int> out;
  for (int a = 0; a < inst.n(); ++a) {
    if (mu.partner_of_a[a] != b && inst.a_prefers(a, b, mu.partner_of_a[a])) out.push_back(a);
  }
  return out;
}

/// Attribute gap u(partner of b) - u(a).
inline Vec attribute_gap(const Instance& inst, const Matching& mu, int b, int a) {
  return sub(inst.attributes[mu.partner_of_b[b]], inst.attributes[a]);
}

/// Pre-normalised perturbation: returns (s + delta) / sum(s + delta).
inline SalienceVector apply_perturbation(const SalienceVector& s, std::span<const double> delta) {
  if (delta.size() != s.size()) throw Error(ErrorCode::input, "apply_perturbation: dimension mismatch");
  Vec w(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    w[i] = s[i] + delta[i];
    if (w[i] < -kTol) throw Error(ErrorCode::input, "apply_perturbation: perturbed component is negative");
    w[i] = std::max(w[i], 0.0);
    total += w[i];
  }
  if (total <= 1e-12) throw Error(ErrorCode::degenerate_perturbation, "apply_perturbation: normalisation constant vanishes");
  for (double& x : w) x /= total;
  return SalienceVector::make(std::move(w));
}

inline double perturbation_distance(const SalienceVector& s, const SalienceVector& s_hat, Norm p) {
  return norm(sub(s_hat.values(), s.values()), p);
}

/// Post-normalised perturbation of one B-agent's salience vector.
struct Perturbation {
  int agent = -1;
  std::vector<int> support;  // coordinates allowed to move freely (Q)
  SalienceVector new_vector;
  double scale = 1.0;        // lambda: new_vector[i] = scale * s[i] off the support
};

inline bool is_admissible(const SalienceVector& s, const Perturbation& pert, int k, double r, Norm p) {
  if (static_cast<int>(pert.support.size()) > k) return false;
  if (!(pert.scale > 0.0)) return false;
  std::vector<char> in_q(s.size(), 0);
  for (int i : pert.support) {
    if (i < 0 || i >= static_cast<int>(s.size())) return false;
    in_q[i] = 1;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!in_q[i] && std::abs(pert.new_vector[i] - pert.scale * s[i]) > kTol) return false;
  }
  return perturbation_distance(s, pert.new_vector, p) <= r + kTol;
}

/// Substitutes one salience row, for re-checking stability under a witness.
inline SalienceProfile with_row(SalienceProfile S, int b, SalienceVector row) {
  S[b] = std::move(row);
  return S;
}

}  // namespace salmatch
