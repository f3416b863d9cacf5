#include "ttlcache/cache_builders.hpp"

#include "ttlcache/errors.hpp"

namespace ttl {

namespace {

void requireExpTtl(const DistributionSpec& ttl) {
  if (!ttl.isExponential()) throw UnsupportedError("the exact engine needs exponential TTLs, got " + ttl.describe());
}

// PH phase i (0-based) is shown as Fetch(f - i).
int fetchLabel(int phIndex, int f) { return f - phIndex; }

}  // namespace

CacheInfo cache_info_of(const DistributionSpec& delay) {
  PhaseType p = delay.ph();
  CacheInfo c;
  c.fetchPhases = p.order();
  c.entry.assign(p.order(), 0.0);
  for (int i = 0; i < p.order(); ++i) c.entry[fetchLabel(i, p.order()) - 1] = p.alpha(i);
  return c;
}

LabeledMap ph_renewal_map(const DistributionSpec& d) {
  PhaseType p = d.ph();
  const int n = p.order();
  LabeledMap m;
  m.d0 = sparse_from_dense(p.S);
  m.d1 = sparse_from_dense(p.exit() * p.alpha.transpose());
  for (int i = 0; i < n; ++i) m.labels.push_back({{}, {i}});
  return m;
}

LabeledMap build_cache_state_map(const DistributionSpec& ttl, const DistributionSpec& delay) {
  requireExpTtl(ttl);
  PhaseType p = delay.ph();
  const int f = p.order();
  const int n = f + 2;
  Eigen::VectorXd ex = p.exit();
  std::vector<Triplet> t;
  t.emplace_back(1, 0, ttl.rate());
  auto idx = [f](int i) { return 1 + fetchLabel(i, f); };
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < f; ++j)
      if (i != j && p.S(i, j) > 0.0) t.emplace_back(idx(i), idx(j), p.S(i, j));
    if (ex(i) > 0.0) t.emplace_back(idx(i), 1, ex(i));
  }
  LabeledMap m;
  m.d0.resize(n, n);
  m.d0.setFromTriplets(t.begin(), t.end());
  m.d1.resize(n, n);
  recompute_diagonal(m.d0, m.d1);
  m.labels.push_back({{CacheSymbol::out()}, {}});
  m.labels.push_back({{CacheSymbol::in()}, {}});
  for (int k = 1; k <= f; ++k) m.labels.push_back({{CacheSymbol::fetch(k)}, {}});
  m.caches.push_back(cache_info_of(delay));
  m.groups.push_back(1);
  return m;
}

LabeledMap build_single_cache(const DistributionSpec& arrival, const DistributionSpec& ttl,
                              const DistributionSpec& delay) {
  requireExpTtl(ttl);
  PhaseType a = arrival.ph();
  LabeledMap c = build_cache_state_map(ttl, delay);
  const int na = a.order();
  const int nc = static_cast<int>(c.size());
  const CacheInfo& info = c.caches[0];
  Eigen::VectorXd aex = a.exit();

  std::vector<Triplet> h, act;
  auto at = [nc](int ap, int cs) { return ap * nc + cs; };
  for (int ap = 0; ap < na; ++ap) {
    for (int cs = 0; cs < nc; ++cs) {
      // Cache dynamics.
      for (SpMat::InnerIterator it(c.d0, cs); it; ++it)
        if (it.col() != cs) h.emplace_back(at(ap, cs), at(ap, it.col()), it.value());
      // Arrival phase moves without completion.
      for (int bp = 0; bp < na; ++bp)
        if (bp != ap && a.S(ap, bp) > 0.0) h.emplace_back(at(ap, cs), at(bp, cs), a.S(ap, bp));
      // Arrival completions.
      if (aex(ap) <= 0.0) continue;
      const Sym kind = c.labels[cs].caches[0].kind;
      for (int bp = 0; bp < na; ++bp) {
        const double r = aex(ap) * a.alpha(bp);
        if (r <= 0.0) continue;
        if (kind == Sym::In) {
          h.emplace_back(at(ap, cs), at(bp, cs), r);
        } else if (kind == Sym::Fetch) {
          act.emplace_back(at(ap, cs), at(bp, cs), r);
        } else {
          for (int k = 1; k <= info.fetchPhases; ++k)
            if (info.entry[k - 1] > 0.0)
              act.emplace_back(at(ap, cs), at(bp, cache_state_index(CacheSymbol::fetch(k))), r * info.entry[k - 1]);
        }
      }
    }
  }
  LabeledMap m;
  const int n = na * nc;
  m.d0.resize(n, n);
  m.d0.setFromTriplets(h.begin(), h.end());
  m.d1.resize(n, n);
  m.d1.setFromTriplets(act.begin(), act.end());
  recompute_diagonal(m.d0, m.d1);
  for (int ap = 0; ap < na; ++ap)
    for (int cs = 0; cs < nc; ++cs)
      m.labels.push_back({c.labels[cs].caches, na > 1 ? std::vector<int>{ap} : std::vector<int>{}});
  m.caches = c.caches;
  m.groups = c.groups;
  return m;
}

}  // namespace ttl
