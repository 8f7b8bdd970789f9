#pragma once

#include <salmatch/market.hpp>
#include <salmatch/stable.hpp>

#include <random>
#include <string>
#include <vector>

namespace salmatch::testing {

inline Instance make_instance(std::vector<Vec> attrs, std::vector<std::vector<int>> a_prefs, std::vector<Vec> sal) {
  Instance inst;
  const int n = static_cast<int>(attrs.size());
  inst.m = static_cast<int>(attrs[0].size());
  for (int i = 0; i < n; ++i) {
    inst.a_names.push_back("a" + std::to_string(i + 1));
    inst.b_names.push_back("b" + std::to_string(i + 1));
    inst.tie_break.push_back(i);
  }
  inst.attributes = std::move(attrs);
  inst.a_prefs = std::move(a_prefs);
  for (auto& row : sal) inst.salience.push_back(SalienceVector::make(std::move(row)));
  inst.validate();
  return inst;
}

/// College-admissions running example: unique stable matching a1-b1, a2-b2.
inline Instance two_by_two() {
  return make_instance({{0.8, 0.2}, {0.4, 0.6}}, {{0, 1}, {0, 1}}, {{0.7, 0.3}, {0.3, 0.7}});
}

/// Two stable matchings joined by a single rotation.
inline Instance two_sm() {
  return make_instance({{1.0, 0.0}, {0.0, 1.0}}, {{0, 1}, {1, 0}}, {{0.4, 0.6}, {0.6, 0.4}});
}

inline Matching identity_matching(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return Matching::from_a(v);
}

/// Uniform attributes, Dirichlet(1) salience, uniform A lists.
inline Instance random_instance(int n, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::vector<Vec> attrs(n, Vec(m)), sal(n, Vec(m));
  std::vector<std::vector<int>> prefs(n);
  for (int a = 0; a < n; ++a) {
    for (double& x : attrs[a]) x = unif(rng);
    prefs[a].resize(n);
    for (int b = 0; b < n; ++b) prefs[a][b] = b;
    std::shuffle(prefs[a].begin(), prefs[a].end(), rng);
  }
  for (int b = 0; b < n; ++b) {
    double sum = 0.0;
    for (double& x : sal[b]) sum += (x = expo(rng));
    for (double& x : sal[b]) x /= sum;
  }
  return make_instance(std::move(attrs), std::move(prefs), std::move(sal));
}

/// Random strict ordinal preferences on both sides.
inline Preferences random_preferences(int n, std::mt19937_64& rng) {
  std::vector<std::vector<int>> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i].resize(n);
    b[i].resize(n);
    for (int j = 0; j < n; ++j) a[i][j] = b[i][j] = j;
    std::shuffle(a[i].begin(), a[i].end(), rng);
    std::shuffle(b[i].begin(), b[i].end(), rng);
  }
  return Preferences::from_lists(std::move(a), std::move(b));
}

}  // namespace salmatch::testing
