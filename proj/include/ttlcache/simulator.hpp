#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ttlcache/tree.hpp"

namespace ttl {

struct SimConfig {
  CacheTreeSpec spec;
  std::uint64_t requestBudget = 1000000;  // per replication, warmup included
  double warmupFraction = 0.1;
  std::uint64_t seed = 1;
  int replications = 1;
  int batches = 20;  // batch-means confidence interval
};

struct SimEstimate {
  double pHit = 0;
  double halfWidth95 = 0;
  // Share of counted requests served by each cache. A request that arrives
  // during a fetch which will not reach the origin is credited to the first
  // cache on its path that is not itself fetching.
  std::map<std::string, double> perCacheHitRates;
  std::uint64_t originFetchCount = 0;
  std::uint64_t requestCount = 0;
  std::uint64_t systemMisses = 0;
};

// Discrete-event simulation of the cache tree.
SimEstimate simulate(const SimConfig& cfg);

// Single cache driven by recorded request timestamps (ascending).
SimEstimate simulate_trace(const std::vector<double>& timestamps, const DistributionSpec& ttl,
                           const DistributionSpec& delay, std::uint64_t seed, int batches = 20);

}  // namespace ttl
