#pragma once

// Random markets and the adjacent-swap robustness study on purely ordinal
// instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "market.hpp"
#include "parallel.hpp"
#include "stable.hpp"

namespace salmatch {

struct OrdinalInstance {
  Preferences prefs;
  std::uint64_t seed = 0;

  int n() const { return prefs.n; }
};

namespace detail {

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace detail

/// A lists first, then B lists, all drawn from mt19937_64(seed).
inline OrdinalInstance random_ordinal_instance(int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::precondition, "random_ordinal_instance: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> a(n), b(n);
  for (auto& l : a) l = detail::random_permutation(n, rng);
  for (auto& l : b) l = detail::random_permutation(n, rng);
  return OrdinalInstance{Preferences::from_lists(std::move(a), std::move(b)), seed};
}

inline Instance random_salience_instance(int n, int m, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::precondition, "random_salience_instance: n must be at least 1");
  if (m < 2) throw Error(ErrorCode::precondition, "random_salience_instance: m must be at least 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  Instance inst;
  inst.m = m;
  for (int i = 0; i < n; ++i) {
    inst.a_names.push_back("a" + std::to_string(i + 1));
    inst.b_names.push_back("b" + std::to_string(i + 1));
    inst.tie_break.push_back(i);
  }
  inst.attributes.assign(n, Vec(m));
  for (auto& row : inst.attributes) {
    for (double& x : row) x = unif(rng);
  }
  for (int b = 0; b < n; ++b) {
    Vec w(m);
    double sum = 0.0;
    for (double& x : w) sum += (x = expo(rng));
    for (double& x : w) x /= sum;
    inst.salience.push_back(SalienceVector::make(std::move(w)));
  }
  for (int a = 0; a < n; ++a) inst.a_prefs.push_back(detail::random_permutation(n, rng));
  inst.validate();
  return inst;
}

/// Only the swap of mu^-1(b) with its successor in b's list can create a
/// blocking pair; likewise for A lists when `a_side` is set.
inline bool is_one_swap_robust(const Preferences& P, const Matching& mu, bool a_side = false) {
  if (mu.size() != P.n) throw Error(ErrorCode::input, "matching size differs from market size");
  if (!is_stable(P, mu)) throw Error(ErrorCode::precondition, "is_one_swap_robust: matching is not stable");
  for (int b = 0; b < P.n; ++b) {
    const int pos = P.b_rank[b][mu.partner_of_b[b]];
    if (pos + 1 < P.n) {
      const int succ = P.b_list[b][pos + 1];
      if (P.a_prefers(succ, b, mu.partner_of_a[succ])) return false;
    }
  }
  if (a_side) {
    for (int a = 0; a < P.n; ++a) {
      const int pos = P.a_rank[a][mu.partner_of_a[a]];
      if (pos + 1 < P.n) {
        const int succ = P.a_list[a][pos + 1];
        if (P.b_prefers(succ, a, mu.partner_of_b[succ])) return false;
      }
    }
  }
  return true;
}

inline bool is_one_swap_robust(const OrdinalInstance& inst, const Matching& mu, bool a_side = false) {
  return is_one_swap_robust(inst.prefs, mu, a_side);
}

/// Stops at the first down-set whose matching satisfies `pred`.
template <class Pred>
bool any_downset(const RotationPoset& poset, Pred&& pred, std::size_t cap = kDownSetCap) {
  const int R = poset.size();
  DownSet d = DownSet::empty(static_cast<std::size_t>(R));
  std::size_t count = 0;
  std::function<bool(int)> rec = [&](int r) -> bool {
    if (r == R) {
      if (++count > cap) throw Error(ErrorCode::guard, "down-set enumeration exceeded its cap");
      return pred(matching_from_downset(poset, d));
    }
    if (rec(r + 1)) return true;
    const auto& ps = poset.preds[r];
    if (std::all_of(ps.begin(), ps.end(), [&](int q) { return d.contains(q); })) {
      d.members[static_cast<std::size_t>(r)] = true;
      const bool hit = rec(r + 1);
      d.members[static_cast<std::size_t>(r)] = false;
      if (hit) return true;
    }
    return false;
  };
  return rec(0);
}

enum class SweepMode { any_stable, b_optimal };

inline const char* to_string(SweepMode m) { return m == SweepMode::any_stable ? "any-stable" : "b-optimal"; }

inline SweepMode parse_sweep_mode(std::string_view s) {
  if (s == "any-stable") return SweepMode::any_stable;
  if (s == "b-optimal") return SweepMode::b_optimal;
  throw Error(ErrorCode::input, "unknown sweep mode '" + std::string(s) + "'");
}

struct Interval {
  double low = 0.0, high = 1.0;
};

/// 95% Wilson score interval.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96) {
  if (trials == 0) return {};
  const double nn = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct SweepRow {
  int n = 0;
  int trials = 0;
  SweepMode mode = SweepMode::b_optimal;
  std::size_t robust = 0;
  double fraction = 0.0;
  Interval ci;
  std::uint64_t seed = 0;
};

/// Trial t at size n uses the instance seeded by seed_seq{seed, n, t}.
inline bool sweep_trial(int n, int t, std::uint64_t seed, SweepMode mode, bool a_side = false,
                        std::size_t cap = kDownSetCap) {
  const auto inst = random_ordinal_instance(n, detail::derive_seed({seed, static_cast<std::uint64_t>(n),
                                                                    static_cast<std::uint64_t>(t)}));
  if (mode == SweepMode::b_optimal) {
    return is_one_swap_robust(inst.prefs, deferred_acceptance(inst.prefs, Side::B), a_side);
  }
  const auto poset = build_rotation_poset(inst.prefs);
  return any_downset(poset, [&](const Matching& mu) { return is_one_swap_robust(inst.prefs, mu, a_side); }, cap);
}

inline std::vector<SweepRow> one_swap_sweep(const std::vector<int>& n_values, int trials, std::uint64_t seed,
                                            SweepMode mode, int workers = 1, bool a_side = false) {
  if (trials < 1) throw Error(ErrorCode::precondition, "one_swap_sweep: trials must be at least 1");
  std::vector<SweepRow> rows;
  for (int n : n_values) {
    if (n < 1) throw Error(ErrorCode::precondition, "one_swap_sweep: n must be at least 1");
    std::vector<char> ok(static_cast<std::size_t>(trials), 0);
    parallel_for(ok.size(), workers, [&](std::size_t t) { ok[t] = sweep_trial(n, static_cast<int>(t), seed, mode, a_side); });
    SweepRow row;
    row.n = n;
    row.trials = trials;
    row.mode = mode;
    row.robust = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    row.fraction = static_cast<double>(row.robust) / trials;
    row.ci = wilson_interval(row.robust, static_cast<std::size_t>(trials));
    row.seed = seed;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace salmatch
