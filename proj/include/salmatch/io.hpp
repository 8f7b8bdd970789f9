#pragma once

// Instance files and report serialisation. Reals are written with 9
// significant digits; infinite radii are written as "unbounded".

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "experiments.hpp"
#include "geometry.hpp"
#include "market.hpp"
#include "robustness.hpp"
#include "search.hpp"
#include "tradeoff.hpp"

namespace salmatch {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Rounds to 9 significant digits.
inline double round9(double x) {
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::stod(buf);
}

inline Json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "unbounded" : "-unbounded";
  const double r = round9(x);
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

inline Json num_list(std::span<const double> v) {
  Json out = Json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

/// Same rendering as `num`, for CSV cells.
inline std::string num_text(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "unbounded" : "-unbounded";
  const double r = round9(x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", r == 0.0 ? 0.0 : r);
  return buf;
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::missing_field, std::string(key) + ": missing");
  return j.at(key);
}

inline const Json& entry(const Json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) throw Error(ErrorCode::input, path + ": expected an object");
  if (!obj.contains(key)) throw Error(ErrorCode::missing_field, path + "." + key + ": missing");
  return obj.at(key);
}

inline Vec reals(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::input, path + ": expected an array of numbers");
  Vec out;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::input, path + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::vector<std::string> names(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::input, path + ": expected an array of ids");
  std::vector<std::string> out;
  for (const auto& x : j) {
    if (!x.is_string()) throw Error(ErrorCode::input, path + ": ids must be strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

inline std::vector<int> indices(const std::vector<std::string>& ids, const std::vector<std::string>& pool,
                                const std::string& path) {
  std::vector<int> out;
  for (const auto& id : ids) {
    const auto it = std::find(pool.begin(), pool.end(), id);
    if (it == pool.end()) throw Error(ErrorCode::input, path + ": unknown id '" + id + "'");
    out.push_back(static_cast<int>(it - pool.begin()));
  }
  return out;
}

inline std::string rethrow_prefix(const std::string& path, const Error& e) { return path + ": " + e.what(); }

}  // namespace detail

inline Instance instance_from_json(const Json& j) {
  using namespace detail;
  Instance inst;
  const Json& m = field(j, "m");
  if (!m.is_number_integer()) throw Error(ErrorCode::input, "m: expected an integer");
  inst.m = m.get<int>();
  inst.a_names = names(field(j, "a_agents"), "a_agents");
  inst.b_names = names(field(j, "b_agents"), "b_agents");
  const Json& attrs = field(j, "attributes");
  const Json& prefs = field(j, "a_prefs");
  const Json& sal = field(j, "salience");
  const Json& tie = field(j, "tie_break");
  for (const auto& a : inst.a_names) {
    inst.attributes.push_back(reals(entry(attrs, "attributes", a), "attributes." + a));
    inst.a_prefs.push_back(indices(names(entry(prefs, "a_prefs", a), "a_prefs." + a), inst.b_names, "a_prefs." + a));
  }
  for (const auto& b : inst.b_names) {
    const std::string path = "salience." + b;
    Vec row = reals(entry(sal, "salience", b), path);
    double sum = 0.0;
    for (double x : row) sum += x;
    if (std::abs(sum - 1.0) > kTol) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", sum);
      throw Error(ErrorCode::non_simplex, path + ": row sum " + buf + " is not 1");
    }
    try {
      inst.salience.push_back(SalienceVector::make(std::move(row)));
    } catch (const Error& e) {
      throw Error(e.code(), rethrow_prefix(path, e));
    }
  }
  inst.tie_break = indices(names(tie, "tie_break"), inst.a_names, "tie_break");
  if (j.contains("costs")) {
    const Json& c = j.at("costs");
    std::vector<Vec> costs;
    for (const auto& a : inst.a_names) {
      const Json& row = entry(c, "costs", a);
      Vec r;
      for (const auto& b : inst.b_names) {
        const Json& x = entry(row, "costs." + a, b);
        if (!x.is_number()) throw Error(ErrorCode::input, "costs." + a + "." + b + ": expected a number");
        r.push_back(x.get<double>());
      }
      costs.push_back(std::move(r));
    }
    inst.costs = std::move(costs);
  }
  inst.validate();
  return inst;
}

inline Instance parse_instance_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::input, std::string("instance is not valid JSON: ") + e.what());
  }
  return instance_from_json(j);
}

inline Instance parse_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::input, "cannot open instance file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance_text(ss.str());
}

/// Values are written at full precision so that parsing reproduces them.
inline Json instance_to_json(const Instance& inst) {
  Json j;
  j["m"] = inst.m;
  j["a_agents"] = inst.a_names;
  j["b_agents"] = inst.b_names;
  Json attrs = Json::object(), prefs = Json::object(), sal = Json::object();
  for (int a = 0; a < inst.n(); ++a) {
    attrs[inst.a_names[a]] = inst.attributes[a];
    Json list = Json::array();
    for (int b : inst.a_prefs[a]) list.push_back(inst.b_names[b]);
    prefs[inst.a_names[a]] = list;
  }
  for (int b = 0; b < inst.n(); ++b) sal[inst.b_names[b]] = inst.salience[b].values();
  j["attributes"] = attrs;
  j["a_prefs"] = prefs;
  j["salience"] = sal;
  Json tie = Json::array();
  for (int a : inst.tie_break) tie.push_back(inst.a_names[a]);
  j["tie_break"] = tie;
  if (inst.costs) {
    Json c = Json::object();
    for (int a = 0; a < inst.n(); ++a) {
      Json row = Json::object();
      for (int b = 0; b < inst.n(); ++b) row[inst.b_names[b]] = (*inst.costs)[a][b];
      c[inst.a_names[a]] = row;
    }
    j["costs"] = c;
  }
  return j;
}

// ---- reports

inline Json to_json(const Instance& inst, const Matching& mu) {
  Json out = Json::array();
  for (int a = 0; a < inst.n(); ++a) out.push_back(Json::array({inst.a_names[a], inst.b_names[mu.partner_of_a[a]]}));
  return out;
}

/// "a1:b2,a2:b1"; every A-agent must appear once.
inline Matching parse_matching(const Instance& inst, const std::string& text) {
  std::vector<int> to_b(inst.n(), -1);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::input, "matching: expected a:b pairs, got '" + item + "'");
    const int a = inst.a_index(item.substr(0, colon));
    const int b = inst.b_index(item.substr(colon + 1));
    if (to_b[a] != -1) throw Error(ErrorCode::input, "matching: " + inst.a_names[a] + " listed twice");
    to_b[a] = b;
  }
  for (int a = 0; a < inst.n(); ++a) {
    if (to_b[a] == -1) throw Error(ErrorCode::input, "matching: " + inst.a_names[a] + " is unmatched");
  }
  return Matching::from_a(std::move(to_b));
}

inline Json to_json(const Instance& inst, const Witness& w) {
  Json j;
  j["a"] = inst.a_names[w.a];
  j["b"] = inst.b_names[w.b];
  j["support"] = w.perturbation.support;
  j["s_hat"] = num_list(w.perturbation.new_vector.values());
  j["lambda"] = num(w.perturbation.scale);
  j["distance"] = num(w.distance);
  return j;
}

inline Json to_json(const Instance& inst, const VerifyResult& v) {
  Json j;
  j["robust"] = v.robust;
  j["witness"] = v.witness ? to_json(inst, *v.witness) : Json(nullptr);
  return j;
}

inline Json to_json(const Instance& inst, const RobustnessReport& rep) {
  Json j;
  j["radius"] = num(rep.radius);
  if (rep.critical) {
    j["critical_pair"] = Json::array({inst.a_names[rep.critical->a], inst.b_names[rep.critical->b]});
    j["support"] = rep.critical->support;
    j["attained"] = rep.critical->attained;
  } else {
    j["critical_pair"] = nullptr;
  }
  j["witness"] = rep.witness ? to_json(inst, *rep.witness) : Json(nullptr);
  Json pairs = Json::array();
  for (const auto& [ab, r] : rep.per_pair) {
    pairs.push_back(Json{{"a", inst.a_names[ab.first]}, {"b", inst.b_names[ab.second]}, {"radius", num(r)}});
  }
  j["per_pair"] = pairs;
  return j;
}

inline Json to_json(const Instance& inst, const SearchState& st) {
  Json j;
  j["lb"] = num(st.lb);
  j["ub_frontier"] = num(st.ub_frontier());
  j["certified"] = st.certified;
  j["expansions"] = st.expansions;
  j["best"] = to_json(inst, st.best);
  j["best_downset"] = st.best_downset.ids();
  Json frontier = Json::array();
  for (const auto& node : st.frontier) frontier.push_back(Json{{"node", node.downset.key()}, {"ub", num(node.ub)}});
  j["frontier"] = frontier;
  Json trace = Json::array();
  for (const auto& e : st.trace) {
    trace.push_back(Json{{"event", e.event}, {"lb", num(e.lb)}, {"ub_frontier", num(e.ub_frontier)}, {"node", e.node}});
  }
  j["trace"] = trace;
  return j;
}

inline Json to_json(const Instance& inst, const std::vector<FrontierPoint>& pts) {
  Json out = Json::array();
  for (const auto& pt : pts) {
    Json j{{"tau", num(pt.tau)}, {"c_ub", num(pt.c_ub)}, {"c_lb", num(pt.c_lb)}};
    j["matching_ub"] = pt.matching_ub ? to_json(inst, *pt.matching_ub) : Json(nullptr);
    out.push_back(j);
  }
  return out;
}

inline std::string frontier_csv(const std::vector<FrontierPoint>& pts) {
  std::string out = "tau,c_ub,c_lb\n";
  for (const auto& pt : pts) out += num_text(pt.tau) + "," + num_text(pt.c_ub) + "," + num_text(pt.c_lb) + "\n";
  return out;
}

inline Json to_json(const Instance& inst, const RegionFactor& f, bool with_vertices) {
  Json j;
  j["b"] = inst.b_names[f.b];
  Json hs = Json::array();
  for (std::size_t i = 0; i < f.normals.size(); ++i) {
    hs.push_back(Json{{"a", inst.a_names[f.blockers[i]]}, {"normal", num_list(f.normals[i])}, {"offset", 0}});
  }
  j["halfspaces"] = hs;
  if (with_vertices) {
    Json vs = Json::array();
    for (const auto& v : vertices(f)) vs.push_back(num_list(v));
    j["vertices"] = vs;
  }
  return j;
}

/// Vertices of each 2-simplex factor in boundary order, for plotting.
inline std::string region_csv(const Instance& inst, const Region& reg) {
  if (reg.m != 3) throw Error(ErrorCode::unsupported, "region csv needs m = 3");
  std::string out = "b,vertex,s1,s2,s3\n";
  for (const auto& f : reg.factors) {
    auto vs = vertices(f);
    if (vs.size() >= 3) {
      std::vector<Vec> proj;
      for (const auto& v : vs) proj.push_back({v[0], v[1]});
      detail::angular_sort(proj, {});
      for (std::size_t i = 0; i < vs.size(); ++i) vs[i] = {proj[i][0], proj[i][1], 1.0 - proj[i][0] - proj[i][1]};
    }
    for (std::size_t i = 0; i < vs.size(); ++i) {
      out += inst.b_names[f.b] + "," + std::to_string(i) + "," + num_text(vs[i][0]) + "," + num_text(vs[i][1]) + "," +
             num_text(vs[i][2]) + "\n";
    }
  }
  return out;
}

inline Json to_json(const std::vector<SweepRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back(Json{{"n", r.n},
                       {"trials", r.trials},
                       {"mode", to_string(r.mode)},
                       {"fraction", num(r.fraction)},
                       {"ci_low", num(r.ci.low)},
                       {"ci_high", num(r.ci.high)},
                       {"seed", r.seed}});
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "n,trials,mode,fraction,ci_low,ci_high,seed\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.trials) + "," + to_string(r.mode) + "," +
           num_text(r.fraction) + "," + num_text(r.ci.low) + "," + num_text(r.ci.high) + "," + std::to_string(r.seed) +
           "\n";
  }
  return out;
}

/// {"schema_version", "command", "config", "result"}.
inline Json envelope(const std::string& command, Json config, Json result) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = std::move(config);
  j["result"] = std::move(result);
  return j;
}

}  // namespace salmatch
