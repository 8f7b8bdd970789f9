// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <salmatch/io.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace salmatch;
namespace fx = salmatch::testing;

namespace {

const std::string kCli = SALMATCH_CLI;
const std::string kData = SALMATCH_TEST_DATA;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures from worker threads; keeps the first message.
struct Checker {
  std::mutex mu;
  bool ok = true;
  std::string first;

  void check(bool cond, const std::string& what) {
    if (cond) return;
    std::lock_guard<std::mutex> lock(mu);
    if (ok) first = what;
    ok = false;
  }
  Outcome outcome(const std::string& detail) const { return {ok, ok ? detail : first}; }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Case {
  Instance inst;
  int k;
  std::vector<Matching> stable;
};

// Oracle instances: n <= 6, m in {2, 3}, k in [1, m].
std::vector<Case> oracle_cases(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Case> out;
  for (int t = 0; t < count; ++t) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m = 2 + static_cast<int>(rng() % 2);
    Instance inst = fx::random_instance(n, m, rng);
    const int k = 1 + static_cast<int>(rng() % m);
    auto stable = enumerate_stable_bruteforce(inst, inst.salience);
    out.push_back({std::move(inst), k, std::move(stable)});
  }
  return out;
}

const Norm kNorms[] = {Norm::l1, Norm::l2, Norm::linf};

Outcome criterion1() {
  const auto inst = fx::two_by_two();
  const auto& S = inst.salience;
  const double scores[] = {score(S[0].values(), inst.attributes[0]), score(S[0].values(), inst.attributes[1]),
                           score(S[1].values(), inst.attributes[0]), score(S[1].values(), inst.attributes[1])};
  const double want[] = {0.62, 0.46, 0.38, 0.54};
  double err = 0.0;
  for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(scores[i] - want[i]));
  const auto stable = enumerate_stable_bruteforce(inst, S);
  const bool unique = stable.size() == 1 && stable[0] == Matching::from_a({0, 1});
  const auto mu = Matching::from_a({0, 1});
  const auto s_hat = SalienceVector::make({0.45, 0.55});
  const double margin = dot(s_hat.values(), attribute_gap(inst, mu, 0, 1));
  err = std::max(err, std::abs(margin + 0.04));
  err = std::max(err, std::abs(perturbation_distance(S[0], s_hat, Norm::l1) - 0.5));
  err = std::max(err, std::abs(perturbation_distance(S[0], s_hat, Norm::l2) - 0.25 * std::sqrt(2.0)));
  err = std::max(err, std::abs(perturbation_distance(S[0], s_hat, Norm::linf) - 0.25));
  const bool blocks = !is_stable(inst, with_row(S, 0, s_hat), mu);
  return {err <= 1e-6 && unique && blocks, "max abs error " + fmt(err) + ", unique stable matching, (a2, b1) blocks"};
}

Outcome criterion2(const std::vector<Case>& cases, const std::vector<std::size_t>& pick) {
  Checker c;
  std::vector<double> worst(cases.size(), 0.0);
  parallel_for(cases.size(), default_workers(), [&](std::size_t i) {
    const auto& cs = cases[i];
    const Matching& mu = cs.stable[pick[i]];
    const auto grid = fx::grid_radius(cs.inst, cs.inst.salience, mu, cs.k, 1e-3);
    for (Norm p : kNorms) {
      const double r = robustness_radius(cs.inst, cs.inst.salience, mu, cs.k, p).radius;
      const double o = fx::pick(grid, p);
      if (is_unbounded(r) || is_unbounded(o)) {
        c.check(is_unbounded(r) && is_unbounded(o), "instance " + std::to_string(i) + ": boundedness differs");
        continue;
      }
      worst[i] = std::max(worst[i], std::abs(r - o));
      c.check(std::abs(r - o) <= 2e-3, "instance " + std::to_string(i) + " p=" + to_string(p) + ": |r* - grid| = " +
                                            fmt(std::abs(r - o)));
    }
  });
  return c.outcome(std::to_string(cases.size()) + " instances x 3 norms, grid step 1e-3, max |r* - grid| = " +
                   fmt(*std::max_element(worst.begin(), worst.end())) + " <= 2e-3");
}

Outcome criterion3(const std::vector<Case>& cases, const std::vector<std::size_t>& pick) {
  Checker c;
  std::vector<int> finite(cases.size(), 0);
  parallel_for(cases.size(), default_workers(), [&](std::size_t i) {
    const auto& cs = cases[i];
    const Matching& mu = cs.stable[pick[i]];
    for (Norm p : kNorms) {
      const double r = robustness_radius(cs.inst, cs.inst.salience, mu, cs.k, p).radius;
      if (is_unbounded(r) || r <= 1e-9) continue;
      ++finite[i];
      const std::string tag = "instance " + std::to_string(i) + " p=" + to_string(p);
      c.check(verify_robust(cs.inst, cs.inst.salience, mu, cs.k, 0.9 * r, p).robust, tag + ": not robust at 0.9 r*");
      c.check(!verify_robust(cs.inst, cs.inst.salience, mu, cs.k, 1.1 * r, p).robust, tag + ": robust at 1.1 r*");
    }
  });
  const int total = std::accumulate(finite.begin(), finite.end(), 0);
  return c.outcome(std::to_string(total) + " finite radii: robust at 0.9 r*, witness at 1.1 r*");
}

Outcome criterion4(const std::vector<Case>& cases) {
  Checker c;
  std::vector<int> pairs(cases.size(), 0);
  parallel_for(cases.size(), default_workers(), [&](std::size_t i) {
    const auto& cs = cases[i];
    for (const auto& mu : cs.stable) {
      for (Norm p : kNorms) {
        ++pairs[i];
        const double r = robustness_radius(cs.inst, cs.inst.salience, mu, cs.k, p).radius;
        const double b0 = base_radius(cs.inst, cs.inst.salience, mu, p, 0.0);
        const double b1 = base_radius(cs.inst, cs.inst.salience, mu, p, 0.01);
        const std::string tag = "instance " + std::to_string(i) + " p=" + to_string(p);
        c.check(b0 <= r + 1e-12, tag + ": base(0) > r*");
        if (!is_unbounded(r)) c.check(b1 < r || (r == 0.0 && b1 == 0.0), tag + ": base(0.01) not below r*");
      }
    }
  });
  return c.outcome(std::to_string(std::accumulate(pairs.begin(), pairs.end(), 0)) +
                   " (instance, matching, norm) triples at eps_base 0 and 0.01");
}

Outcome criterion5() {
  Checker c;
  std::mt19937_64 rng(5005);
  std::vector<Preferences> prefs;
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + static_cast<int>(rng() % 7);
    if (t % 2 == 0) {
      const auto inst = fx::random_instance(n, 2 + static_cast<int>(rng() % 2), rng);
      prefs.push_back(preferences(inst, inst.salience));
    } else {
      prefs.push_back(fx::random_preferences(n, rng));
    }
  }
  parallel_for(prefs.size(), default_workers(), [&](std::size_t i) {
    const auto& P = prefs[i];
    const auto brute = enumerate_stable_bruteforce(P);
    const auto mu_a = deferred_acceptance(P, Side::A);
    const auto mu_b = deferred_acceptance(P, Side::B);
    const std::string tag = "instance " + std::to_string(i);
    c.check(is_stable(P, mu_a) && is_stable(P, mu_b), tag + ": DA output unstable");
    for (const auto& mu : brute) {
      for (int x = 0; x < P.n; ++x) {
        c.check(P.a_rank[x][mu_a.partner_of_a[x]] <= P.a_rank[x][mu.partner_of_a[x]], tag + ": mu_A not A-optimal");
        c.check(P.b_rank[x][mu_b.partner_of_b[x]] <= P.b_rank[x][mu.partner_of_b[x]], tag + ": mu_B not B-optimal");
      }
    }
    std::size_t downsets = 0;
    for_each_downset(build_rotation_poset(P), [&](const DownSet&) { ++downsets; });
    c.check(downsets == brute.size(), tag + ": down-set count differs from brute force");
  });
  return c.outcome("500 instances, n <= 7: DA stable and side-optimal, down-sets = stable matchings");
}

Outcome criterion6(const std::vector<Case>& cases) {
  Checker c;
  parallel_for(cases.size(), default_workers(), [&](std::size_t i) {
    const auto& cs = cases[i];
    const auto& S = cs.inst.salience;
    const Norm p = kNorms[i % 3];
    const std::string tag = "instance " + std::to_string(i);
    double best = -kUnbounded;
    Matching argmax;
    for (const auto& mu : cs.stable) {  // lexicographic order
      const double r = robustness_radius(cs.inst, S, mu, cs.k, p).radius;
      if (r > best) {
        best = r;
        argmax = mu;
      }
    }
    const double lb = lb_init(cs.inst, S, cs.k, p).second;
    const auto ub = global_ub(cs.inst, S, cs.k, p, 1e-4);
    c.check(lb <= best, tag + ": LB above the brute-force max");
    c.check(best <= ub.value + 1e-4, tag + ": brute-force max above global UB");
    SearchOptions opt;
    opt.eps_ub = 1e-4;
    const auto st = most_robust_anytime(cs.inst, S, cs.k, p, opt);
    c.check(st.certified, tag + ": search not certified");
    c.check(is_unbounded(best) ? is_unbounded(st.lb) : st.lb >= best - 1e-4, tag + ": certified value off");
    opt.exhaustive = true;
    c.check(most_robust_anytime(cs.inst, S, cs.k, p, opt).best == argmax, tag + ": search argmax differs");
  });
  return c.outcome(std::to_string(cases.size()) + " instances: LB <= max r* <= UB + 1e-4, search returns argmax");
}

Outcome criterion7(const std::vector<Case>& cases) {
  Checker c;
  std::vector<int> points(cases.size(), 0);
  parallel_for(cases.size(), default_workers(), [&](std::size_t i) {
    const auto& cs = cases[i];
    const auto& S = cs.inst.salience;
    const Norm p = kNorms[(i + 1) % 3];
    std::mt19937_64 rng(700 + i);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    CostTable costs(cs.inst.n(), Vec(cs.inst.n()));
    for (auto& row : costs) {
      for (double& x : row) x = std::round(20 * unif(rng)) / 4;
    }
    std::vector<double> radii, cost;
    for (const auto& mu : cs.stable) {
      radii.push_back(robustness_radius(cs.inst, S, mu, cs.k, p).radius);
      cost.push_back(matching_cost(costs, mu));
    }
    const Relaxation rel(cs.inst, S, cs.k, p);
    const auto poset = build_rotation_poset(rel.prefs());
    std::vector<double> taus{0.0};
    for (double t : breakpoints(cs.inst, S, p)) {
      taus.push_back(std::max(0.0, t - 1e-6));
      taus.push_back(t);
      taus.push_back(t + 1e-6);
    }
    for (double tau : taus) {
      ++points[i];
      double c_star = kUnbounded;
      for (std::size_t j = 0; j < cs.stable.size(); ++j) {
        if (radii[j] >= tau - 1e-9) c_star = std::min(c_star, cost[j]);
      }
      const auto ub = min_cost_given_base_radius(cs.inst, S, costs, tau, p, 0.01, &poset);
      const double c_ub = ub.feasible ? ub.cost : kUnbounded;
      const auto lb = rel.cost_lower_bound(costs, tau);
      const double c_lb = lb.solve.optimal() ? lb.solve.value : kUnbounded;
      const std::string tag = "instance " + std::to_string(i) + " tau " + fmt(tau);
      c.check(c_lb <= c_star + 1e-7, tag + ": cost LB above C*");
      c.check(c_star <= c_ub + 1e-9, tag + ": C* above C^UB");
    }
  });
  const auto ts = fx::two_sm();
  const auto pts = frontier(ts, ts.salience, CostTable{{1, 0}, {0, 1}}, Norm::linf, 2);
  bool step = false;
  for (const auto& pt : pts) {
    if (std::abs(pt.tau - 0.1) < 1e-12) step = pt.c_ub == 0.0;
    if (pt.tau > 0.1 && pt.tau < 0.1 + 1e-5) step = step && pt.c_ub == 2.0;
  }
  c.check(step && pts.front().c_ub == 0.0, "two-market frontier does not step from 0 to 2 at 0.1");
  return c.outcome(std::to_string(std::accumulate(points.begin(), points.end(), 0)) +
                   " (instance, tau) points: cost LB <= C* <= C^UB; two-market frontier 0 -> 2 at tau 0.1");
}

Outcome criterion8() {
  Checker c;
  const auto aa = fx::two_by_two();
  const auto ts = fx::two_sm();
  c.check(std::abs(volume_exact(region(aa, Matching::from_a({0, 1}))) - 0.5) <= 1e-12, "small market volume != 0.5");
  c.check(std::abs(volume_exact(region(ts, Matching::from_a({1, 0}))) - 0.25) <= 1e-12, "mu_B volume != 0.25");
  c.check(volume_exact(region(ts, Matching::from_a({0, 1}))) == 1.0, "mu_A volume != 1");
  std::mt19937_64 rng(8008);
  double worst = 0.0;
  int checked = 0, seed = 0;
  while (checked < 8) {
    const auto inst = fx::random_instance(3, 3, rng);
    const auto reg = region(inst, deferred_acceptance(inst, inst.salience, Side::B));
    const double exact = volume_exact(reg);
    if (exact < 0.05) continue;
    const auto mc = volume_mc(reg, 200000, static_cast<std::uint64_t>(seed++), default_workers());
    const double rel = std::abs(mc.estimate - exact) / exact;
    worst = std::max(worst, rel);
    c.check(rel <= 0.02, "region " + std::to_string(checked) + ": relative error " + fmt(rel));
    ++checked;
  }
  return c.outcome("exact 0.5 / 0.25 / 1; 8 random m=3 regions (volume >= 0.05), worst MC relative error " +
                   fmt(worst) + " <= 0.02 at 200k samples");
}

Outcome criterion9() {
  const std::vector<int> ns{4, 8, 16, 32, 64, 128};
  const auto rows = one_swap_sweep(ns, 500, 42, SweepMode::b_optimal, default_workers());
  bool ok = true;
  std::string fr;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    fr += (i ? " " : "") + std::to_string(rows[i].n) + ":" + fmt(rows[i].fraction);
    if (i > 0 && rows[i].ci.low > rows[i - 1].ci.high) ok = false;
  }
  ok = ok && rows.back().fraction <= rows.front().fraction / 2.0;
  return {ok, "b-optimal, 500 trials, fractions " + fr + "; non-increasing within CIs, f(128) <= f(4)/2"};
}

std::string capture(const std::string& cmd) {
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return "<popen failed>";
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), got);
  return out;
}

Outcome criterion10() {
  const std::string a = " --instance " + kData + "/two_by_two.json";
  const std::string t = " --instance " + kData + "/two_sm.json";
  const std::vector<std::string> runs{
      "radius" + a,
      "verify" + a + " --r 0.3",
      "base" + t,
      "search" + t,
      "search" + a + " --exhaustive --p 2",
      "frontier" + t + " --format csv",
      "frontier" + t,
      "region" + a + " --volume mc --samples 20000 --seed 7",
      "region" + t + " --volume exact --matching b-optimal",
      "sweep --n 4,8,16 --trials 200 --seed 9 --format csv",
      "sweep --n 3,5 --trials 100 --mode any-stable",
  };
  for (const auto& r : runs) {
    const std::string one = capture("SALMATCH_WORKERS=1 " + kCli + " " + r + " 2>&1");
    const std::string again = capture("SALMATCH_WORKERS=1 " + kCli + " " + r + " 2>&1");
    const std::string many = capture(kCli + " " + r + " --workers 8 2>&1");
    if (one.empty() || one != again || one != many) return {false, "output differs for: " + r};
  }
  return {true, std::to_string(runs.size()) + " CLI runs byte-identical across repeats and worker counts 1 / 8"};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  const auto cases = oracle_cases(300, 20261016);
  std::vector<std::size_t> pick;
  {
    std::mt19937_64 rng(99);
    for (const auto& cs : cases) pick.push_back(rng() % cs.stable.size());
  }
  const std::vector<Case> small(cases.begin(), cases.begin() + 200);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"small market golden run", criterion1},
      {"exact radius vs grid oracle", [&] { return criterion2(cases, pick); }},
      {"verification duality", [&] { return criterion3(cases, pick); }},
      {"base radius bound", [&] { return criterion4(cases); }},
      {"lattice machinery", criterion5},
      {"bound sandwich and search", [&] { return criterion6(small); }},
      {"tradeoff sandwich", [&] { return criterion7(small); }},
      {"region volumes", criterion8},
      {"one-swap study", criterion9},
      {"CLI determinism", criterion10},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed in %.1fs\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              std::chrono::duration<double>(clock::now() - start).count());
  return failed;
}
