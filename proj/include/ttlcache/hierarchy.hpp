#pragma once

#include <cstdint>
#include <vector>

#include "ttlcache/map.hpp"
#include "ttlcache/tree.hpp"

namespace ttl {

// Level superposition: left fold of kronecker_sum. An empty list gives the
// 1-state empty MAP.
LabeledMap level_superpose(const std::vector<LabeledMap>& maps, const NumericSettings& s = default_settings());

// Line superposition of a parent cache (build_parent_cache output) with the
// superposed MAP of its children. Children are the left Kronecker operand.
LabeledMap line_superpose(const LabeledMap& parent, const LabeledMap& children,
                          const NumericSettings& s = default_settings());

struct BuildOptions {
  bool lumpPerLevel = false;
  NumericSettings numerics = default_settings();
};

// Post-order composition of a whole tree. Active transitions of the result
// are system misses.
LabeledMap build_tree(const CacheTreeSpec& spec, const BuildOptions& opt = {});
inline LabeledMap build_tree(const CacheTreeSpec& spec, bool lumpPerLevel) {
  BuildOptions o;
  o.lumpPerLevel = lumpPerLevel;
  return build_tree(spec, o);
}

// State count of the unlumped system MAP, computed without building it.
std::size_t projected_state_count(const CacheTreeSpec& spec);

// State counts of one sub-tree for the level-size tables: raw is the product
// of all cache state spaces (before invalid states are dropped), lumpPlus
// also merges identical sibling sub-trees inside it.
struct SubtreeCounts {
  std::uint64_t raw = 1;
  std::uint64_t lumpPlus = 1;
};
SubtreeCounts subtree_state_counts(const CacheNode& node);

// Structural equality of two sub-trees, ignoring ids.
bool same_subtree(const CacheNode& a, const CacheNode& b);

// True when the composite label breaks the causality rule of line
// superposition: parent fetching while no direct child root waits at a fetch
// entry phase. `parentPos` indexes the parent's cache symbol in the label.
bool is_invalid_state(const StateLabel& label, const std::vector<CacheInfo>& caches,
                      const std::vector<std::size_t>& childRoots, std::size_t parentPos);

}  // namespace ttl
