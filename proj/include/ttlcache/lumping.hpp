#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttlcache/map.hpp"

namespace ttl {

struct Partition {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::size_t> blockOf;
  std::vector<std::size_t> representatives;

  std::size_t size() const { return blocks.size(); }
};

struct LumpedMap {
  LabeledMap map;
  Partition partition;
};

// Number of multisets of size n over mS symbols, C(n+mS-1, mS-1).
// Throws OverflowError when the value does not fit 64 bits.
std::uint64_t partition_count(std::uint64_t mS, std::uint64_t n);

// Lumps a Kronecker product of n interchangeable sibling MAPs whose widths are
// given (all equal). States are grouped by the multiset of sibling sub-states;
// the representative has its sibling indices sorted ascending.
LumpedMap lump_symmetric_level(const LabeledMap& m, const std::vector<std::size_t>& siblingBlockWidths,
                               double symmetryTol = 1e-12);

struct LumpabilityReport {
  bool pass = true;
  double worstDeviation = 0.0;
  std::string worstPair;
  // No transition changes two or more sibling components at once.
  bool singleSiblingMoves = true;
};

// Checks that row sums of d0 and d1 into every block are equal for all
// members of a block. siblingWidths enables the single-sibling-move check.
LumpabilityReport verify_lumpability(const LabeledMap& m, const Partition& p,
                                     const std::vector<std::size_t>& siblingWidths = {}, double tol = 1e-9);

// Partition by an explicit block id per state (ids need not be contiguous).
Partition partition_from_ids(const std::vector<std::size_t>& ids);

}  // namespace ttl
