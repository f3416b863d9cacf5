#include "ttlcache/tree.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "ttlcache/errors.hpp"

namespace ttl {

namespace {

template <class F>
void visit(const CacheNode& n, F&& f) {
  f(n);
  for (const auto& c : n.children) visit(c, f);
}

template <class F>
void visitMut(CacheNode& n, F&& f) {
  f(n);
  for (auto& c : n.children) visitMut(c, f);
}

}  // namespace

void validate_tree(const CacheTreeSpec& spec) {
  std::set<std::string> ids;
  visit(spec.root, [&](const CacheNode& n) {
    if (!n.id.empty() && !ids.insert(n.id).second) throw InvalidArgument("duplicate cache id: " + n.id);
    if (n.isLeaf() && !n.arrival) throw InvalidArgument("leaf cache '" + n.id + "' has no arrival process");
    if (!n.isLeaf() && n.arrival) throw InvalidArgument("inner cache '" + n.id + "' must not have an arrival process");
  });
}

void validate_for_exact(const CacheTreeSpec& spec) {
  validate_tree(spec);
  visit(spec.root, [&](const CacheNode& n) {
    if (!n.ttl.isExponential())
      throw UnsupportedError("exact engine needs exponential TTL at cache '" + n.id + "'");
    if (n.delay.isDeterministic())
      throw UnsupportedError("exact engine cannot use a deterministic delay at cache '" + n.id + "'");
    if (n.arrival && n.arrival->isDeterministic())
      throw UnsupportedError("exact engine cannot use deterministic arrivals at cache '" + n.id + "'");
  });
}

double total_request_rate(const CacheTreeSpec& spec) {
  double r = 0.0;
  visit(spec.root, [&](const CacheNode& n) {
    if (n.arrival) r += 1.0 / n.arrival->mean();
  });
  return r;
}

double reference_interarrival(const CacheTreeSpec& spec) {
  if (spec.tauUnit) return *spec.tauUnit;
  const CacheNode* n = &spec.root;
  while (!n->isLeaf()) n = &n->children.front();
  if (!n->arrival) throw InvalidArgument("leaf without arrival process");
  return n->arrival->mean();
}

std::size_t cache_count(const CacheTreeSpec& spec) {
  std::size_t c = 0;
  visit(spec.root, [&](const CacheNode&) { ++c; });
  return c;
}

double fastest_rate(const CacheTreeSpec& spec) {
  double r = 0.0;
  visit(spec.root, [&](const CacheNode& n) {
    if (n.ttl.mean() > 0) r = std::max(r, 1.0 / n.ttl.mean());
    if (n.arrival && n.arrival->mean() > 0) {
      r = std::max(r, 1.0 / n.arrival->mean());
      if (n.arrival->isPhaseType()) {
        auto p = n.arrival->ph();
        r = std::max(r, (-p.S.diagonal()).maxCoeff());
      }
    }
  });
  return r;
}

CacheTreeSpec with_delay_ratio(const CacheTreeSpec& spec, double tauDelta, double zeroDelayFactor) {
  if (tauDelta < 0.0) throw InvalidArgument("delay ratio must be >= 0");
  CacheTreeSpec out = spec;
  const double unit = reference_interarrival(spec);
  const double fast = fastest_rate(spec);
  visitMut(out.root, [&](CacheNode& n) {
    if (tauDelta == 0.0) {
      n.delay = n.delay.isDeterministic() ? DistributionSpec::deterministic(0.0)
                                          : DistributionSpec::exponential(zeroDelayFactor * fast);
    } else {
      n.delay = n.delay.withMean(tauDelta * unit);
    }
  });
  return out;
}

CacheTreeSpec single_cache_tree(const DistributionSpec& arrival, const DistributionSpec& ttl,
                                const DistributionSpec& delay) {
  CacheTreeSpec s;
  s.root.id = "cache";
  s.root.ttl = ttl;
  s.root.delay = delay;
  s.root.arrival = arrival;
  return s;
}

CacheTreeSpec uniform_tree(int depth, int fanout, const std::vector<double>& ttlMeans,
                           const std::vector<DistributionSpec>& delays, const DistributionSpec& arrival) {
  if (depth < 1 || fanout < 1) throw InvalidArgument("tree depth and fan-out must be >= 1");
  if (static_cast<int>(ttlMeans.size()) < depth || static_cast<int>(delays.size()) < depth)
    throw InvalidArgument("need one TTL mean and one delay per level");
  std::function<CacheNode(int, const std::string&)> make = [&](int d, const std::string& id) {
    CacheNode n;
    n.id = id;
    n.ttl = DistributionSpec::exponential_mean(ttlMeans[d]);
    n.delay = delays[d];
    if (d + 1 == depth) {
      n.arrival = arrival;
    } else {
      for (int k = 0; k < fanout; ++k) n.children.push_back(make(d + 1, id + "." + std::to_string(k)));
    }
    return n;
  };
  CacheTreeSpec s;
  s.root = make(0, "r");
  return s;
}

}  // namespace ttl
