#pragma once

#include "ttlcache/distribution.hpp"
#include "ttlcache/map.hpp"

namespace ttl {

// Renewal MAP of a phase-type law: d0 = S, d1 = exit * alpha.
LabeledMap ph_renewal_map(const DistributionSpec& d);

// TTL/fetch process of one cache without arrivals. States are ordered
// [Out, In, Fetch(1) ... Fetch(f)], d1 = 0.
LabeledMap build_cache_state_map(const DistributionSpec& ttl, const DistributionSpec& delay);

// A non-leaf cache has no request stream of its own.
inline LabeledMap build_parent_cache(const DistributionSpec& ttl, const DistributionSpec& delay) {
  return build_cache_state_map(ttl, delay);
}

// Leaf cache: arrival phases (slowest index) x cache states. Arrival
// completions are misses in Out (jump to the fetch entry) and in Fetch
// (self-loop), hits in In.
LabeledMap build_single_cache(const DistributionSpec& arrival, const DistributionSpec& ttl,
                              const DistributionSpec& delay);

// Index of a state within build_cache_state_map's ordering.
inline int cache_state_index(const CacheSymbol& c) {
  return c.kind == Sym::Out ? 0 : c.kind == Sym::In ? 1 : 1 + c.phase;
}

CacheInfo cache_info_of(const DistributionSpec& delay);

}  // namespace ttl
