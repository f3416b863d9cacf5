#include "ttlcache/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <queue>
#include <random>

#include "ttlcache/errors.hpp"

namespace ttl {

namespace {

enum class St { Absent, Present, Waiting, InFlight };
enum class Ev { Arrival, Admit, Expire };

struct Event {
  double time;
  std::uint64_t seq;
  Ev type;
  int node;
  std::uint64_t token;
  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

struct Node {
  std::string id;
  int parent = -1;
  std::vector<int> children;
  const DistributionSpec* ttl = nullptr;
  const DistributionSpec* delay = nullptr;
  const DistributionSpec* arrival = nullptr;
  St state = St::Absent;
  std::uint64_t token = 0;
  double entryLeave = 0.0;
};

int flatten(const CacheNode& n, int parent, std::vector<Node>& out) {
  const int me = static_cast<int>(out.size());
  out.push_back({});
  out[me].id = n.id;
  out[me].parent = parent;
  out[me].ttl = &n.ttl;
  out[me].delay = &n.delay;
  out[me].arrival = n.arrival ? &*n.arrival : nullptr;
  for (const auto& c : n.children) {
    int k = flatten(c, me, out);
    out[me].children.push_back(k);
  }
  return me;
}

bool fetching(St s) { return s == St::Waiting || s == St::InFlight; }

struct RunResult {
  std::uint64_t requests = 0, misses = 0, origin = 0;
  std::vector<double> batchHit;
  std::vector<std::uint64_t> served;
};

class Engine {
 public:
  Engine(const CacheTreeSpec& spec, std::uint64_t seed, std::uint64_t rep) {
    flatten(spec.root, -1, nodes_);
    std::seed_seq seq{seed, rep, std::uint64_t{0x9e3779b97f4a7c15ULL}};
    rng_.seed(seq);
  }

  RunResult runRandom(std::uint64_t budget, double warmupFraction, int batches) {
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
      if (nodes_[i].arrival) push(nodes_[i].arrival->sample(rng_), Ev::Arrival, i, 0);
    return loop(budget, static_cast<std::uint64_t>(std::floor(warmupFraction * budget)), batches, nullptr);
  }

  RunResult runTrace(const std::vector<double>& ts, int batches) {
    push(ts[0], Ev::Arrival, 0, 0);
    return loop(ts.size(), 0, batches, &ts);
  }

 private:
  void push(double t, Ev e, int node, std::uint64_t token) { q_.push({t, seq_++, e, node, token}); }

  void startInFlight(int x, double now) {
    Node& n = nodes_[x];
    n.state = St::InFlight;
    ++n.token;
    PhaseSample s = n.delay->samplePhases(rng_);
    n.entryLeave = now + s.firstPhase;
    push(now + s.total, Ev::Admit, x, n.token);
  }

  void beginFetch(int x, double now) {
    Node& n = nodes_[x];
    if (n.parent < 0 || nodes_[n.parent].state == St::Present) {
      startInFlight(x, now);
    } else {
      n.state = St::Waiting;
      ++n.token;
    }
    // Children still in their first fetch phase wait for this fetch.
    for (int y : nodes_[x].children) {
      Node& c = nodes_[y];
      if (c.state == St::InFlight && now < c.entryLeave) {
        c.state = St::Waiting;
        ++c.token;
      }
    }
  }

  void admit(int x, double now) {
    Node& n = nodes_[x];
    n.state = St::Present;
    ++n.token;
    push(now + n.ttl->sample(rng_), Ev::Expire, x, n.token);
    for (int y : n.children)
      if (nodes_[y].state == St::Waiting) startInFlight(y, now);
  }

  void refresh(int x, double now) {
    Node& n = nodes_[x];
    ++n.token;
    push(now + n.ttl->sample(rng_), Ev::Expire, x, n.token);
  }

  // Returns (system miss, serving cache or -1).
  std::pair<bool, int> request(int leaf, double now) {
    path_.clear();
    for (int x = leaf; x >= 0; x = nodes_[x].parent) path_.push_back(x);
    int c = -1;
    for (std::size_t j = 0; j < path_.size(); ++j)
      if (nodes_[path_[j]].state != St::Absent) {
        c = static_cast<int>(j);
        break;
      }
    bool miss;
    int served = -1;
    int top;  // highest path index that must start fetching
    if (c < 0) {
      miss = true;
      top = static_cast<int>(path_.size()) - 1;
    } else if (nodes_[path_[c]].state == St::Present) {
      miss = false;
      served = path_[c];
      refresh(served, now);
      top = c - 1;
    } else {
      // Delayed hit when some cache above is not itself waiting on a fetch;
      // credit the first such cache.
      miss = true;
      for (std::size_t j = c; j < path_.size(); ++j)
        if (!fetching(nodes_[path_[j]].state)) {
          miss = false;
          served = path_[j];
          break;
        }
      top = c - 1;
    }
    for (int j = top; j >= 0; --j) beginFetch(path_[j], now);
    if (c < 0) ++originStarts_;
    return {miss, served};
  }

  RunResult loop(std::uint64_t budget, std::uint64_t warmup, int batches, const std::vector<double>* trace) {
    RunResult r;
    r.served.assign(nodes_.size(), 0);
    const std::uint64_t counted = budget - warmup;
    if (counted == 0) throw InvalidArgument("no requests left after warmup");
    const int nb = static_cast<int>(std::min<std::uint64_t>(std::max(1, batches), counted));
    std::vector<std::uint64_t> bHits(nb, 0), bReq(nb, 0);
    std::uint64_t seen = 0;
    std::size_t traceNext = 1;
    while (seen < budget && !q_.empty()) {
      Event e = q_.top();
      q_.pop();
      Node& n = nodes_[e.node];
      switch (e.type) {
        case Ev::Expire:
          if (n.state == St::Present && n.token == e.token) {
            n.state = St::Absent;
            ++n.token;
          }
          break;
        case Ev::Admit:
          if (n.state == St::InFlight && n.token == e.token) admit(e.node, e.time);
          break;
        case Ev::Arrival: {
          if (trace) {
            if (traceNext < trace->size()) push((*trace)[traceNext++], Ev::Arrival, e.node, 0);
          } else {
            push(e.time + n.arrival->sample(rng_), Ev::Arrival, e.node, 0);
          }
          const std::uint64_t before = originStarts_;
          auto [miss, served] = request(e.node, e.time);
          if (seen >= warmup) {
            const std::uint64_t k = seen - warmup;
            const int b = static_cast<int>(std::min<std::uint64_t>(k * nb / counted, nb - 1));
            ++bReq[b];
            ++r.requests;
            if (miss) ++r.misses;
            else ++bHits[b];
            if (served >= 0) ++r.served[served];
            r.origin += originStarts_ - before;
          }
          ++seen;
          break;
        }
      }
    }
    for (int b = 0; b < nb; ++b)
      if (bReq[b] > 0) r.batchHit.push_back(static_cast<double>(bHits[b]) / static_cast<double>(bReq[b]));
    return r;
  }

  std::vector<Node> nodes_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> q_;
  std::uint64_t seq_ = 0;
  std::uint64_t originStarts_ = 0;
  std::vector<int> path_;
};

SimEstimate combine(const std::vector<RunResult>& runs, const std::vector<Node>& nodes) {
  SimEstimate est;
  std::vector<double> batches;
  std::vector<std::uint64_t> served(nodes.size(), 0);
  for (const auto& r : runs) {
    est.requestCount += r.requests;
    est.systemMisses += r.misses;
    est.originFetchCount += r.origin;
    batches.insert(batches.end(), r.batchHit.begin(), r.batchHit.end());
    for (std::size_t i = 0; i < served.size(); ++i) served[i] += r.served[i];
  }
  if (est.requestCount == 0) throw InvalidArgument("simulation counted no requests");
  est.pHit = 1.0 - static_cast<double>(est.systemMisses) / static_cast<double>(est.requestCount);
  if (batches.size() >= 2) {
    double mean = 0.0;
    for (double b : batches) mean += b;
    mean /= static_cast<double>(batches.size());
    double var = 0.0;
    for (double b : batches) var += (b - mean) * (b - mean);
    var /= static_cast<double>(batches.size() - 1);
    est.halfWidth95 = 1.96 * std::sqrt(var / static_cast<double>(batches.size()));
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    est.perCacheHitRates[nodes[i].id] = static_cast<double>(served[i]) / static_cast<double>(est.requestCount);
  return est;
}

}  // namespace

SimEstimate simulate(const SimConfig& cfg) {
  validate_tree(cfg.spec);
  if (cfg.requestBudget == 0) throw InvalidArgument("request budget must be positive");
  if (!(cfg.warmupFraction >= 0.0 && cfg.warmupFraction < 1.0)) throw InvalidArgument("warmup fraction must be in [0,1)");
  if (cfg.replications < 1) throw InvalidArgument("replications must be >= 1");
  std::vector<std::future<RunResult>> jobs;
  for (int r = 0; r < cfg.replications; ++r)
    jobs.push_back(std::async(std::launch::async, [&cfg, r] {
      Engine e(cfg.spec, cfg.seed, static_cast<std::uint64_t>(r));
      return e.runRandom(cfg.requestBudget, cfg.warmupFraction, cfg.batches);
    }));
  std::vector<RunResult> runs;
  for (auto& j : jobs) runs.push_back(j.get());
  std::vector<Node> nodes;
  flatten(cfg.spec.root, -1, nodes);
  return combine(runs, nodes);
}

SimEstimate simulate_trace(const std::vector<double>& timestamps, const DistributionSpec& ttl,
                           const DistributionSpec& delay, std::uint64_t seed, int batches) {
  if (timestamps.empty()) throw InvalidArgument("empty trace");
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (timestamps[i] < timestamps[i - 1]) throw InvalidArgument("trace timestamps are not sorted");
  CacheTreeSpec spec = single_cache_tree(DistributionSpec::exponential(1.0), ttl, delay);
  Engine e(spec, seed, 0);
  std::vector<RunResult> runs{e.runTrace(timestamps, batches)};
  std::vector<Node> nodes;
  flatten(spec.root, -1, nodes);
  return combine(runs, nodes);
}

}  // namespace ttl
