#pragma once

// Classical stable-marriage machinery on strict ordinal preferences:
// deferred acceptance, a brute-force enumeration oracle, rotations and the
// rotation poset with its down-set encoding of the stable matchings.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "market.hpp"

namespace salmatch {

/// Complete strict preference lists for both sides, with rank tables.
struct Preferences {
  int n = 0;
  std::vector<std::vector<int>> a_list, b_list;  // best first
  std::vector<std::vector<int>> a_rank, b_rank;  // a_rank[a][b] = position of b in a's list

  static Preferences from_lists(std::vector<std::vector<int>> a_list, std::vector<std::vector<int>> b_list) {
    Preferences p;
    p.n = static_cast<int>(a_list.size());
    if (static_cast<int>(b_list.size()) != p.n) throw Error(ErrorCode::input, "preference sides differ in size");
    p.a_rank = ranks(a_list, p.n);
    p.b_rank = ranks(b_list, p.n);
    p.a_list = std::move(a_list);
    p.b_list = std::move(b_list);
    return p;
  }

  bool a_prefers(int a, int b, int b2) const { return a_rank[a][b] < a_rank[a][b2]; }
  bool b_prefers(int b, int a, int a2) const { return b_rank[b][a] < b_rank[b][a2]; }

 private:
  static std::vector<std::vector<int>> ranks(const std::vector<std::vector<int>>& lists, int n) {
    std::vector<std::vector<int>> r(n, std::vector<int>(n, -1));
    for (int x = 0; x < n; ++x) {
      if (!Instance::is_permutation(lists[x], n)) throw Error(ErrorCode::non_permutation, "preference list is not a permutation");
      for (int pos = 0; pos < n; ++pos) r[x][lists[x][pos]] = pos;
    }
    return r;
  }
};

/// Ordinal preferences realised by a salience profile (B lists are induced rankings).
inline Preferences preferences(const Instance& inst, const SalienceProfile& S) {
  std::vector<std::vector<int>> b_lists(inst.n());
  for (int b = 0; b < inst.n(); ++b) b_lists[b] = induced_ranking(inst, S, b);
  return Preferences::from_lists(inst.a_prefs, std::move(b_lists));
}

inline bool is_blocking_pair(const Preferences& P, const Matching& mu, int a, int b) {
  return mu.partner_of_a[a] != b && P.a_prefers(a, b, mu.partner_of_a[a]) && P.b_prefers(b, a, mu.partner_of_b[b]);
}

inline bool is_stable(const Preferences& P, const Matching& mu) {
  for (int a = 0; a < P.n; ++a) {
    for (int b = 0; b < P.n; ++b) {
      if (is_blocking_pair(P, mu, a, b)) return false;
    }
  }
  return true;
}

enum class Side { A, B };

struct DaRun {
  Matching matching;
  long proposals = 0;
};

/// Deferred acceptance with the given side proposing; also reports the
/// number of proposals made.
inline DaRun deferred_acceptance_run(const Preferences& P, Side proposing) {
  const int n = P.n;
  const auto& prop_list = proposing == Side::A ? P.a_list : P.b_list;
  const auto& recv_rank = proposing == Side::A ? P.b_rank : P.a_rank;
  std::vector<int> next(n, 0), held(n, -1), engaged(n, -1);
  std::vector<int> free_stack(n);
  std::iota(free_stack.rbegin(), free_stack.rend(), 0);
  long proposals = 0;
  while (!free_stack.empty()) {
    const int x = free_stack.back();
    free_stack.pop_back();
    const int y = prop_list[x][next[x]++];
    ++proposals;
    const int cur = held[y];
    if (cur == -1) {
      held[y] = x;
      engaged[x] = y;
    } else if (recv_rank[y][x] < recv_rank[y][cur]) {
      held[y] = x;
      engaged[x] = y;
      engaged[cur] = -1;
      free_stack.push_back(cur);
    } else {
      free_stack.push_back(x);
    }
  }
  std::vector<int> a_to_b(n);
  for (int x = 0; x < n; ++x) {
    if (proposing == Side::A) {
      a_to_b[x] = engaged[x];
    } else {
      a_to_b[engaged[x]] = x;
    }
  }
  return {Matching::from_a(std::move(a_to_b)), proposals};
}

inline Matching deferred_acceptance(const Preferences& P, Side proposing) {
  return deferred_acceptance_run(P, proposing).matching;
}

inline Matching deferred_acceptance(const Instance& inst, const SalienceProfile& S, Side proposing) {
  return deferred_acceptance(preferences(inst, S), proposing);
}

inline constexpr int kBruteForceMaxN = 8;

/// Every stable matching, by scanning all n! bijections. Oracle scale only.
inline std::vector<Matching> enumerate_stable_bruteforce(const Preferences& P) {
  if (P.n > kBruteForceMaxN) throw Error(ErrorCode::guard, "brute-force enumeration refused for n > 8");
  std::vector<int> perm(P.n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Matching> out;
  do {
    Matching mu = Matching::from_a(perm);
    if (is_stable(P, mu)) out.push_back(std::move(mu));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline std::vector<Matching> enumerate_stable_bruteforce(const Instance& inst, const SalienceProfile& S) {
  return enumerate_stable_bruteforce(preferences(inst, S));
}

/// Cyclic sequence ((a_1,b_1),...,(a_v,b_v)) with mu(a_i) = b_i; eliminating
/// it hands b_i to a_{i+1} (indices cyclic), so B improves and A worsens.
struct Rotation {
  int id = -1;
  std::vector<std::pair<int, int>> cycle;

  /// The pairs (a, b) created by elimination.
  std::vector<std::pair<int, int>> produced() const {
    std::vector<std::pair<int, int>> out;
    const std::size_t v = cycle.size();
    for (std::size_t i = 0; i < v; ++i) out.emplace_back(cycle[(i + 1) % v].first, cycle[i].second);
    return out;
  }
};

inline Matching eliminate_unchecked(Matching mu, const Rotation& rho) {
  for (const auto& [a, b] : rho.produced()) {
    mu.partner_of_a[a] = b;
    mu.partner_of_b[b] = a;
  }
  return mu;
}

namespace detail {

/// First b after mu(a) in a's list that prefers a to its current partner, or -1.
inline int next_partner(const Preferences& P, const Matching& mu, int a) {
  for (int pos = P.a_rank[a][mu.partner_of_a[a]] + 1; pos < P.n; ++pos) {
    const int b = P.a_list[a][pos];
    if (P.b_prefers(b, a, mu.partner_of_b[b])) return b;
  }
  return -1;
}

/// Rotations exposed at a stable matching mu, given the B-optimal matching.
inline std::vector<Rotation> exposed_at(const Preferences& P, const Matching& mu, const Matching& mu_b) {
  const int n = P.n;
  std::vector<int> succ(n, -1);
  for (int a = 0; a < n; ++a) {
    if (mu.partner_of_a[a] == mu_b.partner_of_a[a]) continue;
    const int b = next_partner(P, mu, a);
    if (b >= 0) succ[a] = mu.partner_of_b[b];
  }
  std::vector<Rotation> out;
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on current path, 2 done
  for (int start = 0; start < n; ++start) {
    if (succ[start] < 0 || state[start] != 0) continue;
    std::vector<int> path;
    int x = start;
    while (x >= 0 && state[x] == 0) {
      state[x] = 1;
      path.push_back(x);
      x = succ[x];
    }
    if (x >= 0 && state[x] == 1) {
      // c_0 -> c_1 -> ... where c_j takes mu(c_{j+1}); reversed, this is a_1..a_v.
      const auto from = std::find(path.begin(), path.end(), x);
      std::vector<int> cyc(from, path.end());
      std::reverse(cyc.begin(), cyc.end());
      const auto lowest = std::min_element(cyc.begin(), cyc.end());
      std::rotate(cyc.begin(), lowest, cyc.end());
      Rotation rho;
      for (int a : cyc) rho.cycle.emplace_back(a, mu.partner_of_a[a]);
      out.push_back(std::move(rho));
    }
    for (int y : path) state[y] = 2;
  }
  return out;
}

}  // namespace detail

/// Eliminates rho from mu after checking that rho is exposed at mu.
inline Matching eliminate(const Preferences& P, const Matching& mu, const Rotation& rho) {
  const std::size_t v = rho.cycle.size();
  if (v < 2) throw Error(ErrorCode::precondition, "eliminate: rotation must have at least two pairs");
  for (std::size_t i = 0; i < v; ++i) {
    const auto [a, b] = rho.cycle[i];
    if (mu.partner_of_a[a] != b) throw Error(ErrorCode::precondition, "eliminate: rotation pair not in matching");
    const int a_next = rho.cycle[(i + 1) % v].first;
    if (detail::next_partner(P, mu, a_next) != b) {
      throw Error(ErrorCode::precondition, "eliminate: rotation is not exposed at the matching");
    }
  }
  return eliminate_unchecked(mu, rho);
}

/// Predecessor-closed set of rotation ids.
struct DownSet {
  std::vector<bool> members;

  static DownSet empty(std::size_t r) { return DownSet{std::vector<bool>(r, false)}; }
  static DownSet full(std::size_t r) { return DownSet{std::vector<bool>(r, true)}; }

  bool contains(int id) const { return members[static_cast<std::size_t>(id)]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(members.begin(), members.end(), true)); }
  DownSet with(int id) const {
    DownSet d = *this;
    d.members[static_cast<std::size_t>(id)] = true;
    return d;
  }
  std::vector<int> ids() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i]) out.push_back(static_cast<int>(i));
    }
    return out;
  }
  std::string key() const {
    std::string s(members.size(), '0');
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i]) s[i] = '1';
    }
    return s;
  }

  friend bool operator==(const DownSet&, const DownSet&) = default;
  friend auto operator<=>(const DownSet& x, const DownSet& y) { return x.members <=> y.members; }
};

/// Rotations with their covering relation. Rotation ids follow the order in
/// which a maximal elimination chain from mu_A met them, which is a linear
/// extension of the precedence order.
struct RotationPoset {
  Matching mu_a, mu_b;
  std::vector<Rotation> rotations;
  std::vector<std::pair<int, int>> covers;   // (lower, upper)
  std::vector<std::vector<int>> preds;       // immediate predecessors
  std::vector<std::vector<char>> precedes;   // strict order, transitive

  int size() const { return static_cast<int>(rotations.size()); }

  bool is_downset(const DownSet& d) const {
    if (static_cast<int>(d.members.size()) != size()) return false;
    for (int r = 0; r < size(); ++r) {
      if (!d.contains(r)) continue;
      for (int q : preds[r]) {
        if (!d.contains(q)) return false;
      }
    }
    return true;
  }
};

inline RotationPoset build_rotation_poset(const Preferences& P) {
  RotationPoset poset;
  poset.mu_a = deferred_acceptance(P, Side::A);
  poset.mu_b = deferred_acceptance(P, Side::B);
  const int n = P.n;

  Matching mu = poset.mu_a;
  while (mu != poset.mu_b) {
    auto exposed = detail::exposed_at(P, mu, poset.mu_b);
    if (exposed.empty()) throw Error(ErrorCode::precondition, "rotation walk stalled before reaching mu_B");
    Rotation rho = std::move(exposed.front());
    rho.id = static_cast<int>(poset.rotations.size());
    mu = eliminate_unchecked(mu, rho);
    poset.rotations.push_back(std::move(rho));
  }

  const int R = poset.size();
  // produced_by[a][b]: rotation that moves a onto b.
  std::vector<std::vector<int>> produced_by(n, std::vector<int>(n, -1));
  // For each b: the partner sequence b walks through (in order) and the rotation causing each step.
  std::vector<std::vector<std::pair<int, int>>> b_steps(n);  // (new partner, rotation)
  for (const auto& rho : poset.rotations) {
    for (const auto& [a, b] : rho.produced()) {
      produced_by[a][b] = rho.id;
      b_steps[b].emplace_back(a, rho.id);
    }
  }

  std::vector<std::vector<char>> edge(R, std::vector<char>(R, 0));
  for (const auto& rho : poset.rotations) {
    const std::size_t v = rho.cycle.size();
    for (std::size_t i = 0; i < v; ++i) {
      const auto [a, b_old] = rho.cycle[i];
      // Rule 1: the rotation that put a onto b_old comes first.
      if (const int q = produced_by[a][b_old]; q >= 0) edge[q][rho.id] = 1;
      // Rule 2: every b strictly between b_old and a's new partner must first
      // have been handed a partner it prefers to a.
      const int b_new = rho.cycle[(i + v - 1) % v].second;
      for (int pos = P.a_rank[a][b_old] + 1; pos < P.a_rank[a][b_new]; ++pos) {
        const int b = P.a_list[a][pos];
        int prev = poset.mu_a.partner_of_b[b];
        for (const auto& [partner, q] : b_steps[b]) {
          if (P.b_prefers(b, prev, a)) break;
          if (P.b_prefers(b, partner, a)) {
            edge[q][rho.id] = 1;
            break;
          }
          prev = partner;
        }
      }
    }
  }

  // Transitive closure; ids are a linear extension so edges point forward.
  poset.precedes = edge;
  for (int y = 0; y < R; ++y) {
    for (int x = y - 1; x >= 0; --x) {
      if (!poset.precedes[x][y]) continue;
      for (int w = 0; w < x; ++w) {
        if (poset.precedes[w][x]) poset.precedes[w][y] = 1;
      }
    }
  }
  poset.preds.assign(R, {});
  for (int x = 0; x < R; ++x) {
    for (int y = 0; y < R; ++y) {
      if (!poset.precedes[x][y]) continue;
      bool covering = true;
      for (int z = 0; z < R && covering; ++z) {
        if (poset.precedes[x][z] && poset.precedes[z][y]) covering = false;
      }
      if (covering) {
        poset.covers.emplace_back(x, y);
        poset.preds[y].push_back(x);
      }
    }
  }
  return poset;
}

inline RotationPoset build_rotation_poset(const Instance& inst, const SalienceProfile& S) {
  return build_rotation_poset(preferences(inst, S));
}

inline Matching matching_from_downset(const RotationPoset& poset, const DownSet& d) {
  if (!poset.is_downset(d)) throw Error(ErrorCode::precondition, "matching_from_downset: not a down-set");
  Matching mu = poset.mu_a;
  for (int r = 0; r < poset.size(); ++r) {
    if (d.contains(r)) mu = eliminate_unchecked(std::move(mu), poset.rotations[r]);
  }
  return mu;
}

/// Minimal rotations outside d: the ones that can be eliminated next.
inline std::vector<int> exposed_rotations(const RotationPoset& poset, const DownSet& d) {
  std::vector<int> out;
  for (int r = 0; r < poset.size(); ++r) {
    if (d.contains(r)) continue;
    const auto& ps = poset.preds[r];
    if (std::all_of(ps.begin(), ps.end(), [&](int q) { return d.contains(q); })) out.push_back(r);
  }
  return out;
}

inline constexpr std::size_t kDownSetCap = 1'000'000;

/// Visits every down-set (each exactly once). Throws Error(guard) past `cap`.
inline void for_each_downset(const RotationPoset& poset, const std::function<void(const DownSet&)>& visit,
                             std::size_t cap = kDownSetCap) {
  const int R = poset.size();
  DownSet d = DownSet::empty(static_cast<std::size_t>(R));
  std::size_t count = 0;
  std::function<void(int)> rec = [&](int r) {
    if (r == R) {
      if (++count > cap) throw Error(ErrorCode::guard, "down-set enumeration exceeded its cap");
      visit(d);
      return;
    }
    rec(r + 1);
    const auto& ps = poset.preds[r];
    if (std::all_of(ps.begin(), ps.end(), [&](int q) { return d.contains(q); })) {
      d.members[static_cast<std::size_t>(r)] = true;
      rec(r + 1);
      d.members[static_cast<std::size_t>(r)] = false;
    }
  };
  rec(0);
}

/// Every stable matching via the rotation poset, in lexicographic order.
inline std::vector<Matching> enumerate_stable(const RotationPoset& poset, std::size_t cap = kDownSetCap) {
  std::vector<Matching> out;
  for_each_downset(poset, [&](const DownSet& d) { out.push_back(matching_from_downset(poset, d)); }, cap);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace salmatch
