// salmatch command-line tool.
//
// exit codes: 0 ok / property holds, 1 property fails, 2 error

#include <CLI11.hpp>

#include <salmatch/io.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

using namespace salmatch;

namespace {

struct Options {
  std::string instance;
  int k = 0;  // 0: use m
  std::string p = "inf";
  double r = 0.0;
  double tau = 0.0;
  long budget = -1;
  bool exhaustive = false;
  double eps_base = 0.01;
  double eps_ub = 1e-4;
  std::uint64_t seed = 42;
  std::size_t samples = 100000;
  std::string volume = "exact";
  std::string matching = "b-optimal";
  std::string output;
  std::string format = "json";
  int workers = 0;  // 0: SALMATCH_WORKERS or hardware
  std::vector<int> n_values{4, 8, 16, 32, 64, 128};
  int trials = 500;
  std::string mode = "b-optimal";
  bool a_side = false;
};

struct Loaded {
  Instance inst;
  Norm p;
  int k;
};

Loaded load(const Options& o) {
  Loaded l{parse_instance(o.instance), parse_norm(o.p), 0};
  l.k = o.k == 0 ? l.inst.m : o.k;
  if (l.k < 1 || l.k > l.inst.m) throw Error(ErrorCode::input, "k must lie in [1, m]");
  return l;
}

Matching pick_matching(const Instance& inst, const std::string& how) {
  if (how == "b-optimal") return deferred_acceptance(inst, inst.salience, Side::B);
  if (how == "a-optimal") return deferred_acceptance(inst, inst.salience, Side::A);
  return parse_matching(inst, how);
}

Json base_config(const Options& o, const Loaded& l) {
  return Json{{"instance", o.instance}, {"k", l.k}, {"p", to_string(l.p)}};
}

void emit(const Options& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output, std::ios::binary);
  if (!out) throw Error(ErrorCode::input, "cannot write '" + o.output + "'");
  out << text;
}

void emit(const Options& o, const Json& j) { emit(o, j.dump(2) + "\n"); }

void require_json(const Options& o, const char* cmd) {
  if (o.format != "json") throw Error(ErrorCode::input, std::string(cmd) + ": only json output is available");
}

int cmd_verify(const Options& o, int workers) {
  require_json(o, "verify");
  const auto l = load(o);
  const auto mu = pick_matching(l.inst, o.matching);
  const auto v = verify_robust(l.inst, l.inst.salience, mu, l.k, o.r, l.p, workers);
  Json cfg = base_config(o, l);
  cfg["r"] = num(o.r);
  cfg["matching"] = o.matching;
  Json res = to_json(l.inst, v);
  res["matching"] = to_json(l.inst, mu);
  emit(o, envelope("verify", cfg, res));
  return v.robust ? 0 : 1;
}

int cmd_radius(const Options& o, int workers) {
  require_json(o, "radius");
  const auto l = load(o);
  const auto mu = pick_matching(l.inst, o.matching);
  const auto rep = robustness_radius(l.inst, l.inst.salience, mu, l.k, l.p, workers);
  Json cfg = base_config(o, l);
  cfg["matching"] = o.matching;
  Json res = to_json(l.inst, rep);
  res["matching"] = to_json(l.inst, mu);
  emit(o, envelope("radius", cfg, res));
  return 0;
}

int cmd_base(const Options& o, int workers) {
  require_json(o, "base");
  const auto l = load(o);
  const auto mu = pick_matching(l.inst, o.matching);
  const double base = base_radius(l.inst, l.inst.salience, mu, l.p, o.eps_base);
  const double exact = robustness_radius(l.inst, l.inst.salience, mu, l.k, l.p, workers).radius;
  Json cfg = base_config(o, l);
  cfg["matching"] = o.matching;
  cfg["eps_base"] = num(o.eps_base);
  Json res{{"base_radius", num(base)}, {"exact_radius", num(exact)}, {"matching", to_json(l.inst, mu)}};
  emit(o, envelope("base", cfg, res));
  return 0;
}

int cmd_search(const Options& o, int workers) {
  require_json(o, "search");
  const auto l = load(o);
  SearchOptions so;
  so.budget = o.budget;
  so.eps_ub = o.eps_ub;
  so.exhaustive = o.exhaustive;
  so.workers = workers;
  const auto st = most_robust_anytime(l.inst, l.inst.salience, l.k, l.p, so);
  Json cfg = base_config(o, l);
  cfg["budget"] = o.budget;
  cfg["eps_ub"] = num(o.eps_ub);
  cfg["exhaustive"] = o.exhaustive;
  emit(o, envelope("search", cfg, to_json(l.inst, st)));
  return 0;
}

int cmd_frontier(const Options& o, int workers) {
  const auto l = load(o);
  if (!l.inst.costs) throw Error(ErrorCode::missing_field, "costs: missing (needed by frontier)");
  const auto pts = frontier(l.inst, l.inst.salience, *l.inst.costs, l.p, l.k, o.eps_base, workers);
  if (o.format == "csv") {
    emit(o, frontier_csv(pts));
    return 0;
  }
  require_json(o, "frontier");
  Json cfg = base_config(o, l);
  cfg["eps_base"] = num(o.eps_base);
  emit(o, envelope("frontier", cfg, Json{{"points", to_json(l.inst, pts)}}));
  return 0;
}

int cmd_region(const Options& o, int workers) {
  const auto l = load(o);
  const auto mu = pick_matching(l.inst, o.matching);
  const auto reg = region(l.inst, mu);
  if (o.format == "csv") {
    emit(o, region_csv(l.inst, reg));
    return 0;
  }
  require_json(o, "region");
  const bool with_vertices = l.inst.m <= kVertexMaxDim;
  Json factors = Json::array();
  for (const auto& f : reg.factors) factors.push_back(to_json(l.inst, f, with_vertices));
  Json res{{"matching", to_json(l.inst, mu)}, {"factors", factors}};
  res["contains"] = contains(reg, l.inst.salience);
  res["stable"] = is_stable(l.inst, l.inst.salience, mu);
  Json cfg{{"instance", o.instance}, {"matching", o.matching}, {"volume", o.volume}};
  if (o.volume == "exact") {
    res["volume"] = num(volume_exact(reg));
  } else if (o.volume == "mc") {
    const auto mc = volume_mc(reg, o.samples, o.seed, workers);
    res["volume"] = num(mc.estimate);
    res["half_width"] = num(mc.half_width);
    res["degenerate"] = mc.degenerate;
    cfg["samples"] = o.samples;
    cfg["seed"] = o.seed;
  } else if (o.volume != "none") {
    throw Error(ErrorCode::input, "volume must be exact, mc or none");
  }
  emit(o, envelope("region", cfg, res));
  return 0;
}

int cmd_sweep(const Options& o, int workers) {
  const auto mode = parse_sweep_mode(o.mode);
  const auto rows = one_swap_sweep(o.n_values, o.trials, o.seed, mode, workers, o.a_side);
  if (o.format == "csv") {
    emit(o, sweep_csv(rows));
    return 0;
  }
  require_json(o, "sweep");
  Json cfg{{"n", o.n_values}, {"trials", o.trials}, {"mode", o.mode}, {"seed", o.seed}, {"a_side", o.a_side}};
  emit(o, envelope("sweep", cfg, Json{{"rows", to_json(rows)}}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robustness of stable matchings under salience-weighted preferences"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool instance) {
    if (instance) sub->add_option("--instance", o.instance, "instance JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", o.output, "write here instead of stdout");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--workers", o.workers, "worker threads (default: SALMATCH_WORKERS or all cores)");
  };
  auto model = [&](CLI::App* sub) {
    sub->add_option("--k", o.k, "support budget (default m)");
    sub->add_option("--p", o.p, "norm: 1, 2 or inf")->check(CLI::IsMember({"1", "2", "inf"}));
  };
  auto matching = [&](CLI::App* sub) {
    sub->add_option("--matching", o.matching, "b-optimal, a-optimal or a1:b1,a2:b2,...");
  };

  auto* verify = app.add_subcommand("verify", "is the matching (k, r, p)-robust");
  common(verify, true);
  model(verify);
  matching(verify);
  verify->add_option("--r", o.r, "radius")->required();

  auto* radius = app.add_subcommand("radius", "exact robustness radius");
  common(radius, true);
  model(radius);
  matching(radius);

  auto* base = app.add_subcommand("base", "base inner radius");
  common(base, true);
  model(base);
  matching(base);
  base->add_option("--eps-base", o.eps_base, "shrink factor");

  auto* search = app.add_subcommand("search", "most robust stable matching");
  common(search, true);
  model(search);
  search->add_option("--budget", o.budget, "maximum expansions (negative: none)");
  search->add_option("--eps-ub", o.eps_ub, "certificate tolerance");
  search->add_flag("--exhaustive", o.exhaustive, "explore every node");

  auto* front = app.add_subcommand("frontier", "robustness-cost frontier");
  common(front, true);
  model(front);
  front->add_option("--eps-base", o.eps_base, "shrink factor");

  auto* reg = app.add_subcommand("region", "robustness region and its volume");
  common(reg, true);
  matching(reg);
  reg->add_option("--volume", o.volume, "exact, mc or none")->check(CLI::IsMember({"exact", "mc", "none"}));
  reg->add_option("--samples", o.samples, "Monte Carlo samples per stage");
  reg->add_option("--seed", o.seed, "Monte Carlo seed");

  auto* sweep = app.add_subcommand("sweep", "adjacent-swap study on random ordinal markets");
  common(sweep, false);
  sweep->add_option("--n", o.n_values, "market sizes")->delimiter(',');
  sweep->add_option("--trials", o.trials, "instances per size");
  sweep->add_option("--mode", o.mode, "b-optimal or any-stable")->check(CLI::IsMember({"b-optimal", "any-stable"}));
  sweep->add_option("--seed", o.seed, "base seed");
  sweep->add_flag("--a-side", o.a_side, "also swap adjacent entries of A lists");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const int workers = o.workers > 0 ? o.workers : default_workers();
  try {
    if (*verify) return cmd_verify(o, workers);
    if (*radius) return cmd_radius(o, workers);
    if (*base) return cmd_base(o, workers);
    if (*search) return cmd_search(o, workers);
    if (*front) return cmd_frontier(o, workers);
    if (*reg) return cmd_region(o, workers);
    if (*sweep) return cmd_sweep(o, workers);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
