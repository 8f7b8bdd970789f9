#pragma once

// Robustness region: the salience profiles under which a matching stays
// stable. One closed polytope per B-agent inside the simplex; volumes are
// relative to the simplex.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "errors.hpp"
#include "lp.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace salmatch {

inline constexpr int kVertexMaxDim = 6;
inline constexpr int kExactVolumeMaxDim = 4;
inline constexpr int kMcBurnIn = 1000;
inline constexpr int kMcThin = 10;
inline constexpr std::size_t kMcMinSamples = 1000;

/// {s in simplex : s . normal_i >= 0 for every i}.
struct RegionFactor {
  int b = -1;
  int m = 0;
  std::vector<int> blockers;   // a for each halfspace
  std::vector<Vec> normals;    // u(partner of b) - u(a)

  bool contains(std::span<const double> s, double tol = kTol) const {
    for (const auto& g : normals) {
      if (dot(s, g) < -tol) return false;
    }
    return true;
  }
};

struct Region {
  int m = 0;
  std::vector<RegionFactor> factors;
};

inline Region region(const Instance& inst, const Matching& mu) {
  check_matching(inst, mu);
  Region reg;
  reg.m = inst.m;
  for (int b = 0; b < inst.n(); ++b) {
    RegionFactor f;
    f.b = b;
    f.m = inst.m;
    for (int a : blockers(inst, mu, b)) {
      f.blockers.push_back(a);
      f.normals.push_back(attribute_gap(inst, mu, b, a));
    }
    reg.factors.push_back(std::move(f));
  }
  return reg;
}

/// Closed-region membership; ties on the boundary count as inside.
inline bool contains(const Region& reg, const SalienceProfile& S) {
  if (S.size() != reg.factors.size()) throw Error(ErrorCode::input, "contains: profile size differs from region");
  for (std::size_t b = 0; b < S.size(); ++b) {
    if (static_cast<int>(S[b].size()) != reg.m) throw Error(ErrorCode::input, "contains: dimension mismatch");
    if (!reg.factors[b].contains(S[b].values())) return false;
  }
  return true;
}

namespace detail {

/// Halfspaces plus the nonnegativity facets, all of the form c . s >= 0.
inline std::vector<Vec> all_constraints(const RegionFactor& f) {
  std::vector<Vec> cons = f.normals;
  for (int i = 0; i < f.m; ++i) {
    Vec e(f.m, 0.0);
    e[i] = 1.0;
    cons.push_back(std::move(e));
  }
  return cons;
}

inline void check_dim(int m, int cap, const char* what) {
  if (m < 2) throw Error(ErrorCode::input, std::string(what) + ": dimension must be at least 2");
  if (m > cap) {
    throw Error(ErrorCode::unsupported, std::string(what) + ": dimension " + std::to_string(m) + " exceeds " +
                                            std::to_string(cap));
  }
}

inline bool same_point(const Vec& x, const Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - y[i]) > 1e-9) return false;
  }
  return true;
}

inline double det3(const Vec& a, const Vec& b, const Vec& c) {
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
}

/// Orders coplanar points by angle around their centroid. `axis` is the
/// plane normal for d = 3 and ignored for d = 2.
inline void angular_sort(std::vector<Vec>& pts, const Vec& axis) {
  const std::size_t d = pts[0].size();
  Vec c(d, 0.0);
  for (const auto& p : pts) {
    for (std::size_t i = 0; i < d; ++i) c[i] += p[i] / static_cast<double>(pts.size());
  }
  Vec e1 = sub(pts[0], c), e2;
  if (d == 2) {
    e1 = {1.0, 0.0};
    e2 = {0.0, 1.0};
  } else {
    const double len = norm(e1, Norm::l2);
    for (double& x : e1) x /= len;
    e2 = {axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2], axis[0] * e1[1] - axis[1] * e1[0]};
  }
  std::vector<std::pair<double, Vec>> keyed;
  for (const auto& p : pts) {
    const Vec v = sub(p, c);
    keyed.emplace_back(std::atan2(dot(v, e2), dot(v, e1)), p);
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = keyed[i].second;
}

}  // namespace detail

/// Vertices of the factor, sorted lexicographically. Empty when the factor is.
inline std::vector<Vec> vertices(const RegionFactor& f) {
  detail::check_dim(f.m, kVertexMaxDim, "vertices");
  const int m = f.m;
  const auto cons = detail::all_constraints(f);
  const int c = static_cast<int>(cons.size());
  std::vector<Vec> out;
  std::vector<int> pick(m - 1);
  std::iota(pick.begin(), pick.end(), 0);
  if (c < m - 1) return out;
  while (true) {
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int r = 0; r < m - 1; ++r) {
      for (int j = 0; j < m; ++j) a(r, j) = cons[pick[r]][j];
    }
    a.row(m - 1).setOnes();
    rhs(m - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() == m) {
      const Eigen::VectorXd x = lu.solve(rhs);
      Vec v(x.data(), x.data() + m);
      bool ok = true;
      for (const auto& g : cons) {
        if (dot(v, g) < -1e-9) ok = false;
      }
      if (ok) {
        for (double& t : v) t = std::max(t, 0.0);
        const double sum = std::accumulate(v.begin(), v.end(), 0.0);
        for (double& t : v) t /= sum;
        if (std::none_of(out.begin(), out.end(), [&](const Vec& w) { return detail::same_point(v, w); })) {
          out.push_back(std::move(v));
        }
      }
    }
    int i = m - 2;
    while (i >= 0 && pick[i] == c - (m - 1) + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < m - 1; ++j) pick[j] = pick[j - 1] + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Relative (m-1)-volume of one factor.
inline double volume_exact(const RegionFactor& f) {
  detail::check_dim(f.m, kExactVolumeMaxDim, "volume_exact");
  if (f.normals.empty()) return 1.0;
  const int d = f.m - 1;
  const auto verts = vertices(f);
  if (static_cast<int>(verts.size()) < f.m) return 0.0;
  // drop the last coordinate; the simplex maps onto {x >= 0, sum x <= 1}
  std::vector<Vec> pts;
  for (const auto& v : verts) pts.emplace_back(v.begin(), v.end() - 1);
  double vol = 0.0;
  if (d == 1) {
    double lo = pts[0][0], hi = pts[0][0];
    for (const auto& p : pts) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    vol = hi - lo;
  } else if (d == 2) {
    detail::angular_sort(pts, {});
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      const auto& q = pts[(i + 1) % pts.size()];
      vol += p[0] * q[1] - p[1] * q[0];
    }
    vol = std::abs(vol) / 2.0;
  } else {
    Vec centroid(3, 0.0);
    for (const auto& p : pts) {
      for (int i = 0; i < 3; ++i) centroid[i] += p[i] / static_cast<double>(pts.size());
    }
    std::vector<std::vector<int>> seen;
    for (const auto& g : detail::all_constraints(f)) {
      // g . s with s_last = 1 - sum x
      Vec axis(3);
      for (int i = 0; i < 3; ++i) axis[i] = g[i] - g[3];
      if (norm(axis, Norm::l2) < 1e-12) continue;
      std::vector<int> on;
      for (std::size_t v = 0; v < verts.size(); ++v) {
        if (std::abs(dot(verts[v], g)) <= 1e-9) on.push_back(static_cast<int>(v));
      }
      if (on.size() < 3 || std::find(seen.begin(), seen.end(), on) != seen.end()) continue;
      seen.push_back(on);
      const double len = norm(axis, Norm::l2);
      for (double& x : axis) x /= len;
      std::vector<Vec> face;
      for (int v : on) face.push_back(pts[v]);
      detail::angular_sort(face, axis);
      for (std::size_t i = 1; i + 1 < face.size(); ++i) {
        vol += std::abs(detail::det3(sub(face[0], centroid), sub(face[i], centroid), sub(face[i + 1], centroid))) / 6.0;
      }
    }
  }
  double fact = 1.0;
  for (int i = 2; i <= d; ++i) fact *= i;
  return std::clamp(vol * fact, 0.0, 1.0);
}

inline double volume_exact(const Region& reg) {
  double v = 1.0;
  for (const auto& f : reg.factors) v *= volume_exact(f);
  return v;
}

struct FactorMc {
  double estimate = 0.0;
  double variance = 0.0;  // of the estimate
  bool hit_and_run = false;
  bool degenerate = false;
};

struct McVolume {
  double estimate = 0.0;
  double half_width = 0.0;  // 95%
  bool degenerate = false;
  std::uint64_t seed = 0;
  std::vector<FactorMc> factors;
};

namespace detail {

inline Vec sample_simplex(int m, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vec x(m);
  double sum = 0.0;
  for (double& t : x) sum += (t = expo(rng));
  for (double& t : x) t /= sum;
  return x;
}

/// Component of c orthogonal to the all-ones direction.
inline Vec project_hull(const Vec& c) {
  const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
  Vec out(c);
  for (double& t : out) t -= mean;
  return out;
}

/// Centre of the largest ball (within the simplex's affine hull) inside the
/// factor, or nothing if the factor has no relative interior.
inline std::optional<Vec> chebyshev_center(const std::vector<Vec>& cons, int m) {
  GeneralLP lp(m + 1);
  lp.maximize = true;
  lp.objective[m] = 1.0;
  lp.upper[m] = 1.0;
  auto& eq = lp.add_row(Sense::eq, 1.0);
  for (int i = 0; i < m; ++i) eq.coeffs[i] = 1.0;
  for (const auto& g : cons) {
    auto& row = lp.add_row(Sense::ge, 0.0);
    for (int i = 0; i < m; ++i) row.coeffs[i] = g[i];
    row.coeffs[m] = -norm(project_hull(g), Norm::l2);
  }
  const auto res = lp_solve(lp);
  if (!res.optimal() || res.x[m] <= 1e-10) return std::nullopt;
  return Vec(res.x.begin(), res.x.begin() + m);
}

inline double batch_mean_variance(const std::vector<char>& hits) {
  const std::size_t batches = 50, size = hits.size() / batches;
  if (size == 0) return 0.0;
  Vec means(batches, 0.0);
  for (std::size_t k = 0; k < batches; ++k) {
    for (std::size_t i = 0; i < size; ++i) means[k] += hits[k * size + i];
    means[k] /= static_cast<double>(size);
  }
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double ss = 0.0;
  for (double x : means) ss += (x - mu) * (x - mu);
  return ss / (batches - 1) / batches;
}

inline FactorMc factor_mc(const RegionFactor& f, std::size_t samples, std::uint64_t seed) {
  FactorMc out;
  const int m = f.m;
  const int h = static_cast<int>(f.normals.size());
  if (h == 0) {
    out.estimate = 1.0;
    return out;
  }
  std::mt19937_64 rng(seed);
  const auto cons = all_constraints(f);
  const auto center = chebyshev_center(cons, m);
  if (!center) {
    out.degenerate = true;
    return out;
  }
  // stage 1: direct sampling of the simplex against the first one or two halfspaces
  const int direct = std::min(h, 2);
  {
    std::size_t hit = 0;
    for (std::size_t t = 0; t < samples; ++t) {
      const Vec x = sample_simplex(m, rng);
      bool in = true;
      for (int j = 0; j < direct && in; ++j) in = dot(x, f.normals[j]) >= 0.0;
      hit += in;
    }
    const double p = static_cast<double>(hit) / static_cast<double>(samples);
    out.estimate = p;
    out.variance = p * (1.0 - p) / static_cast<double>(samples);
  }
  if (h == direct) return out;
  // later stages: hit-and-run on the body cut by halfspaces [0, j), counting halfspace j
  out.hit_and_run = true;
  double rel_var = out.estimate > 0.0 ? out.variance / (out.estimate * out.estimate) : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int j = direct; j < h; ++j) {
    Vec x = *center;
    std::vector<const Vec*> active;
    for (int i = 0; i < j; ++i) active.push_back(&f.normals[i]);
    Vec dir(m);
    auto step = [&] {
      double mean = 0.0;
      for (double& t : dir) mean += (t = gauss(rng));
      mean /= m;
      for (double& t : dir) t -= mean;
      double lo = -kUnbounded, hi = kUnbounded;
      auto clip = [&](double cx, double cd) {
        if (cd > 1e-15) lo = std::max(lo, -cx / cd);
        else if (cd < -1e-15) hi = std::min(hi, -cx / cd);
      };
      for (int i = 0; i < m; ++i) clip(x[i], dir[i]);
      for (const Vec* g : active) clip(dot(x, *g), dot(dir, *g));
      if (!(hi > lo)) return;
      const double t = lo + (hi - lo) * unif(rng);
      for (int i = 0; i < m; ++i) x[i] += t * dir[i];
    };
    for (int t = 0; t < kMcBurnIn; ++t) step();
    std::vector<char> hits(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      for (int t = 0; t < kMcThin; ++t) step();
      hits[s] = dot(x, f.normals[j]) >= 0.0;
    }
    const double p = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / static_cast<double>(samples);
    out.estimate *= p;
    if (p > 0.0) rel_var += batch_mean_variance(hits) / (p * p);
  }
  out.variance = out.estimate * out.estimate * rel_var;
  return out;
}

}  // namespace detail

/// Per-factor seeds are drawn from seed_seq{seed, b}, so the result does not
/// depend on `workers`.
inline McVolume volume_mc(const Region& reg, std::size_t samples, std::uint64_t seed, int workers = 1) {
  if (samples < kMcMinSamples) throw Error(ErrorCode::precondition, "volume_mc: at least 1000 samples required");
  McVolume out;
  out.seed = seed;
  out.factors.resize(reg.factors.size());
  parallel_for(reg.factors.size(), workers, [&](std::size_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    const std::uint64_t derived = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    out.factors[b] = detail::factor_mc(reg.factors[b], samples, derived);
  });
  out.estimate = 1.0;
  for (const auto& f : out.factors) {
    out.estimate *= f.estimate;
    out.degenerate = out.degenerate || f.degenerate;
  }
  // delta method: Var(prod v) ~ sum_b var_b prod_{c != b} v_c^2
  double var = 0.0;
  for (std::size_t b = 0; b < out.factors.size(); ++b) {
    double rest = 1.0;
    for (std::size_t c = 0; c < out.factors.size(); ++c) {
      if (c != b) rest *= out.factors[c].estimate * out.factors[c].estimate;
    }
    var += out.factors[b].variance * rest;
  }
  out.half_width = 1.96 * std::sqrt(var);
  return out;
}

}  // namespace salmatch
