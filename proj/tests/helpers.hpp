#pragma once

#include <random>

#include "ttlcache/cache_builders.hpp"
#include "ttlcache/map.hpp"

namespace th {

inline Eigen::MatrixXd dense(const ttl::SpMat& m) { return Eigen::MatrixXd(m); }

inline ttl::LabeledMap mmm(double lambda, double lambdaT, double lambdaD) {
  return ttl::build_single_cache(ttl::DistributionSpec::exponential(lambda), ttl::DistributionSpec::exponential(lambdaT),
                                 ttl::DistributionSpec::exponential(lambdaD));
}

// Random irreducible MAP with n states (every state reaches the next one).
inline ttl::LabeledMap random_map(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::bernoulli_distribution coin(0.4);
  Eigen::MatrixXd d0 = Eigen::MatrixXd::Zero(n, n), d1 = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == (i + 1) % n || coin(rng)) (coin(rng) ? d1 : d0)(i, j) = u(rng);
      if (i == j) d0(i, j) = 0.0;
    }
  for (int i = 0; i < n; ++i) d0(i, i) = -(d0.row(i).sum() + d1.row(i).sum());
  ttl::LabeledMap m;
  m.d0 = ttl::sparse_from_dense(d0);
  m.d1 = ttl::sparse_from_dense(d1);
  for (int i = 0; i < n; ++i) m.labels.push_back({{ttl::CacheSymbol::out()}, {i}});
  m.caches = {ttl::CacheInfo{}};
  m.groups = {1};
  return m;
}

inline std::vector<std::string> label_strings(const ttl::LabeledMap& m) {
  std::vector<std::string> s;
  for (const auto& l : m.labels) s.push_back(ttl::encode_label(l));
  return s;
}

}  // namespace th
