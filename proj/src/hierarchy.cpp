#include "ttlcache/hierarchy.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <limits>

#include "ttlcache/cache_builders.hpp"
#include "ttlcache/errors.hpp"
#include "ttlcache/lumping.hpp"

namespace ttl {

LabeledMap level_superpose(const std::vector<LabeledMap>& maps, const NumericSettings& s) {
  if (maps.empty()) return empty_map();
  LabeledMap acc = maps.front();
  for (std::size_t i = 1; i < maps.size(); ++i) acc = kronecker_sum(acc, maps[i], s);
  return acc;
}

namespace {

// Root symbol of one direct child, tagged with whether it sits at a fetch
// entry phase (pinned while the parent fetches).
struct RootKey {
  Sym kind;
  int phase;
  bool pinned;
  auto operator<=>(const RootKey&) const = default;
};

std::vector<std::size_t> childRootPositions(const LabeledMap& children) {
  std::vector<std::size_t> roots;
  std::size_t off = 0;
  for (auto g : children.groups) {
    off += g;
    roots.push_back(off - 1);
  }
  return roots;
}

std::vector<RootKey> rootKeys(const StateLabel& l, const std::vector<CacheInfo>& caches,
                              const std::vector<std::size_t>& roots) {
  std::vector<RootKey> k;
  k.reserve(roots.size());
  for (auto r : roots) {
    const auto& c = l.caches[r];
    k.push_back({c.kind, c.phase, c.isFetch() && caches[r].isEntryPhase(c.phase)});
  }
  std::sort(k.begin(), k.end());
  return k;
}

struct RootChange {
  bool any = false;
  RootKey removed{};
  RootKey added{};
};

// Multiset difference of the direct-child root symbols of two states.
RootChange diffRoots(const std::vector<RootKey>& a, const std::vector<RootKey>& b) {
  std::vector<RootKey> rem, add;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(rem));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(add));
  if (rem.empty() && add.empty()) return {};
  if (rem.size() != 1 || add.size() != 1)
    throw InvalidArgument("a child transition changes more than one direct child root symbol");
  return {true, rem[0], add[0]};
}

}  // namespace

bool is_invalid_state(const StateLabel& label, const std::vector<CacheInfo>& caches,
                      const std::vector<std::size_t>& childRoots, std::size_t parentPos) {
  if (!label.caches[parentPos].isFetch()) return false;
  for (auto r : childRoots) {
    const auto& c = label.caches[r];
    if (c.isFetch() && caches[r].isEntryPhase(c.phase)) return false;
  }
  return true;
}

LabeledMap line_superpose(const LabeledMap& parent, const LabeledMap& children, const NumericSettings& s) {
  if (parent.caches.size() != 1 || parent.groups.size() != 1)
    throw InvalidArgument("line superposition needs a single-cache parent MAP");
  if (parent.d1.nonZeros() != 0) throw InvalidArgument("parent cache MAP must have no active transitions");
  if (children.groups.empty()) return parent;  // Psi(M, 0) = M
  std::size_t groupCaches = 0;
  for (auto g : children.groups) groupCaches += g;
  if (groupCaches != children.caches.size())
    throw InvalidArgument("children MAP group layout does not match its cache list");

  const std::size_t nc = children.size();
  const std::size_t np = parent.size();
  if (nc != 0 && np > s.stateCap / nc) throw CapacityError(nc * np, s.stateCap);

  const auto roots = childRootPositions(children);
  const CacheInfo& pinfo = parent.caches[0];
  std::vector<Sym> pkind(np);
  for (std::size_t p = 0; p < np; ++p) pkind[p] = parent.labels[p].caches[0].kind;

  std::vector<std::vector<RootKey>> keys(nc);
  std::vector<char> hasPinned(nc, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    keys[c] = rootKeys(children.labels[c], children.caches, roots);
    for (const auto& k : keys[c]) hasPinned[c] |= k.pinned;
  }

  // (b) state removal: parent fetching while no direct child is pinned.
  std::vector<long> newIndex(nc * np, -1);
  std::size_t count = 0;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t p = 0; p < np; ++p)
      if (!(pkind[p] == Sym::Fetch && !hasPinned[c])) newIndex[c * np + p] = static_cast<long>(count++);
  if (count > s.stateCap) throw CapacityError(count, s.stateCap);

  std::vector<Triplet> hid, act;
  auto add = [&](std::vector<Triplet>& t, std::size_t c, std::size_t p, std::size_t c2, std::size_t p2, double r) {
    long a = newIndex[c * np + p];
    long b = newIndex[c2 * np + p2];
    if (a < 0 || b < 0 || r == 0.0) return;
    t.emplace_back(a, b, r);
  };

  // Parent dynamics (all hidden).
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t p = 0; p < np; ++p)
      for (SpMat::InnerIterator it(parent.d0, static_cast<Eigen::Index>(p)); it; ++it)
        if (static_cast<std::size_t>(it.col()) != p) add(hid, c, p, c, it.col(), it.value());

  // Children dynamics under every parent symbol.
  for (int k = 0; k < 2; ++k) {
    const bool active = k == 1;
    const SpMat& q = active ? children.d1 : children.d0;
    for (std::size_t c = 0; c < nc; ++c) {
      for (SpMat::InnerIterator it(q, static_cast<Eigen::Index>(c)); it; ++it) {
        const std::size_t t = it.col();
        if (!active && t == c) continue;
        const RootChange ch = t == c ? RootChange{} : diffRoots(keys[c], keys[t]);
        const bool chainStart = ch.any && ch.removed.kind == Sym::Out && ch.added.kind == Sym::Fetch;
        const bool leavesPin = ch.any && ch.removed.pinned;
        for (std::size_t p = 0; p < np; ++p) {
          switch (pkind[p]) {
            case Sym::Fetch:
              // (b) children wait at their entry phase while the parent fetches.
              if (leavesPin) break;
              add(active ? act : hid, c, p, t, p, it.value());
              break;
            case Sym::In:
              // (c) served by the parent: not a system miss.
              add(hid, c, p, t, p, it.value());
              break;
            case Sym::Out:
              if (active && chainStart) {
                // (d) the chain continues to the parent's fetch entry.
                for (int f = 1; f <= pinfo.fetchPhases; ++f)
                  if (pinfo.entry[f - 1] > 0.0)
                    add(act, c, p, t, static_cast<std::size_t>(cache_state_index(CacheSymbol::fetch(f))),
                        it.value() * pinfo.entry[f - 1]);
              } else {
                add(hid, c, p, t, p, it.value());
              }
              break;
          }
        }
      }
    }
  }

  LabeledMap r;
  const auto n = static_cast<Eigen::Index>(count);
  r.d0.resize(n, n);
  r.d0.setFromTriplets(hid.begin(), hid.end());
  r.d1.resize(n, n);
  r.d1.setFromTriplets(act.begin(), act.end());
  r.d1.prune(0.0);
  recompute_diagonal(r.d0, r.d1);
  r.labels.resize(count);
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t p = 0; p < np; ++p) {
      long i = newIndex[c * np + p];
      if (i < 0) continue;
      StateLabel l = children.labels[c];
      l.caches.push_back(parent.labels[p].caches[0]);
      r.labels[i] = std::move(l);
    }
  r.caches = children.caches;
  r.caches.push_back(pinfo);
  r.groups = {r.caches.size()};
  return r;
}

namespace {

bool sameMap(const LabeledMap& a, const LabeledMap& b) {
  if (a.size() != b.size() || a.caches != b.caches || a.groups != b.groups || a.labels != b.labels) return false;
  for (const auto& [x, y] : {std::pair{&a.d0, &b.d0}, std::pair{&a.d1, &b.d1}}) {
    SpMat d = *x - *y;
    for (Eigen::Index i = 0; i < d.outerSize(); ++i)
      for (SpMat::InnerIterator it(d, i); it; ++it)
        if (std::abs(it.value()) > 1e-12) return false;
  }
  return true;
}

LabeledMap buildNode(const CacheNode& node, const BuildOptions& opt) {
  if (node.isLeaf()) return build_single_cache(*node.arrival, node.ttl, node.delay);
  std::vector<LabeledMap> kids;
  kids.reserve(node.children.size());
  for (const auto& c : node.children) kids.push_back(buildNode(c, opt));
  LabeledMap level;
  bool symmetric = opt.lumpPerLevel && kids.size() > 1;
  for (std::size_t i = 1; symmetric && i < kids.size(); ++i) symmetric = sameMap(kids[0], kids[i]);
  if (symmetric) {
    std::vector<std::size_t> widths(kids.size(), kids[0].size());
    level = lump_symmetric_level(level_superpose(kids, opt.numerics), widths).map;
  } else {
    level = level_superpose(kids, opt.numerics);
  }
  return line_superpose(build_parent_cache(node.ttl, node.delay), level, opt.numerics);
}

// Number of states of a sub-tree MAP split by whether its root is pinned
// (fetching at an entry phase); used to size the unlumped chain.
struct Census {
  double pinned = 0;
  double other = 0;
  double total() const { return pinned + other; }
};

Census census(const CacheNode& node) {
  const CacheInfo info = cache_info_of(node.delay);
  double entries = 0;
  for (double e : info.entry) entries += e > 0.0;
  const double others = info.fetchPhases - entries;
  if (node.isLeaf()) {
    const double a = node.arrival->ph().order();
    return {a * entries, a * (2 + others)};
  }
  double all = 1, none = 1;
  for (const auto& c : node.children) {
    Census k = census(c);
    all *= k.total();
    none *= k.other;
  }
  const double withPinned = all - none;
  return {withPinned * entries, all * 2 + withPinned * others};
}

}  // namespace

LabeledMap build_tree(const CacheTreeSpec& spec, const BuildOptions& opt) {
  validate_for_exact(spec);
  return buildNode(spec.root, opt);
}

std::size_t projected_state_count(const CacheTreeSpec& spec) {
  validate_for_exact(spec);
  double n = census(spec.root).total();
  if (n > 1e18) throw OverflowError("projected state count exceeds 1e18");
  return static_cast<std::size_t>(n);
}

namespace {

bool sameDist(const DistributionSpec& a, const DistributionSpec& b) {
  if (a.isDeterministic() || b.isDeterministic())
    return a.isDeterministic() && b.isDeterministic() && a.mean() == b.mean();
  const PhaseType pa = a.ph(), pb = b.ph();
  return pa.order() == pb.order() && pa.alpha == pb.alpha && pa.S == pb.S;
}

std::uint64_t mulChecked(std::uint64_t a, std::uint64_t b) {
  if (b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b) throw OverflowError("state count overflows 64 bits");
  return a * b;
}

}  // namespace

bool same_subtree(const CacheNode& a, const CacheNode& b) {
  if (!sameDist(a.ttl, b.ttl) || !sameDist(a.delay, b.delay)) return false;
  if (a.arrival.has_value() != b.arrival.has_value()) return false;
  if (a.arrival && !sameDist(*a.arrival, *b.arrival)) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_subtree(a.children[i], b.children[i])) return false;
  return true;
}

SubtreeCounts subtree_state_counts(const CacheNode& node) {
  const std::uint64_t own = 2 + static_cast<std::uint64_t>(node.delay.ph().order());
  if (node.isLeaf()) {
    const std::uint64_t n = own * static_cast<std::uint64_t>(node.arrival->ph().order());
    return {n, n};
  }
  SubtreeCounts c{own, own};
  std::vector<bool> used(node.children.size(), false);
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (used[i]) continue;
    const SubtreeCounts k = subtree_state_counts(node.children[i]);
    std::uint64_t copies = 0;
    for (std::size_t j = i; j < node.children.size(); ++j)
      if (!used[j] && same_subtree(node.children[i], node.children[j])) {
        used[j] = true;
        ++copies;
      }
    for (std::uint64_t r = 0; r < copies; ++r) c.raw = mulChecked(c.raw, k.raw);
    c.lumpPlus = mulChecked(c.lumpPlus, partition_count(k.lumpPlus, copies));
  }
  return c;
}

}  // namespace ttl
