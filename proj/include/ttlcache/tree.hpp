#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttlcache/distribution.hpp"

namespace ttl {

// One cache of a tree. delay is the fetch delay on the link above this cache
// (from its parent, or from the origin for the root).
struct CacheNode {
  std::string id;
  DistributionSpec ttl = DistributionSpec::exponential(1.0);
  DistributionSpec delay = DistributionSpec::exponential(1.0);
  std::optional<DistributionSpec> arrival;  // leaves only
  std::vector<CacheNode> children;

  bool isLeaf() const { return children.empty(); }
};

struct CacheTreeSpec {
  CacheNode root;
  // Time unit for normalized delays; the first leaf's mean inter-request time when unset.
  std::optional<double> tauUnit;
};

// Structural checks shared by all engines: leaves and only leaves carry arrivals, ids unique.
void validate_tree(const CacheTreeSpec& spec);
// Additional restrictions of the exact engine: exponential TTL, phase-type delays and arrivals.
void validate_for_exact(const CacheTreeSpec& spec);

double total_request_rate(const CacheTreeSpec& spec);
// tauUnit if set, else the mean inter-request time of the first leaf.
double reference_interarrival(const CacheTreeSpec& spec);
std::size_t cache_count(const CacheTreeSpec& spec);

// Every link delay rescaled (shape kept) to mean tauDelta * reference_interarrival.
// tauDelta = 0 selects an exponential delay with rate zeroDelayFactor * fastest system rate.
CacheTreeSpec with_delay_ratio(const CacheTreeSpec& spec, double tauDelta, double zeroDelayFactor = 1e6);
// Fastest rate among arrivals and TTLs, used to scale the "zero delay" surrogate.
double fastest_rate(const CacheTreeSpec& spec);

// Convenience constructors used by tests, the CLI and the acceptance suite.
CacheTreeSpec single_cache_tree(const DistributionSpec& arrival, const DistributionSpec& ttl,
                                const DistributionSpec& delay);
// Complete tree with the given depth (1 = single cache) and fan-out. ttlMeans[d]
// and delays[d] apply to depth d (0 = root); every leaf gets `arrival`.
CacheTreeSpec uniform_tree(int depth, int fanout, const std::vector<double>& ttlMeans,
                           const std::vector<DistributionSpec>& delays, const DistributionSpec& arrival);

}  // namespace ttl
