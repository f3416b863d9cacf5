#include "ttlcache/lumping.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>

#include "ttlcache/errors.hpp"

namespace ttl {

std::uint64_t partition_count(std::uint64_t mS, std::uint64_t n) {
  if (mS < 1 || n < 1) throw InvalidArgument("partition_count needs mS >= 1 and n >= 1");
  // C(n+mS-1, k) with k = min(n, mS-1), built so every intermediate is an exact binomial.
  const std::uint64_t top = n + mS - 1;
  const std::uint64_t k = std::min(n, mS - 1);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (top - k + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max())
      throw OverflowError(fmt::format("C({}, {}) does not fit 64 bits", top, mS - 1));
  }
  return static_cast<std::uint64_t>(r);
}

Partition partition_from_ids(const std::vector<std::size_t>& ids) {
  Partition p;
  std::map<std::size_t, std::size_t> idx;
  p.blockOf.resize(ids.size());
  for (std::size_t s = 0; s < ids.size(); ++s) {
    auto [it, fresh] = idx.emplace(ids[s], p.blocks.size());
    if (fresh) {
      p.blocks.emplace_back();
      p.representatives.push_back(s);
    }
    p.blocks[it->second].push_back(s);
    p.blockOf[s] = it->second;
  }
  return p;
}

namespace {

std::vector<std::size_t> digitsOf(std::size_t state, std::size_t width, std::size_t n) {
  std::vector<std::size_t> d(n);
  for (std::size_t i = n; i-- > 0;) {
    d[i] = state % width;
    state /= width;
  }
  return d;
}

std::size_t indexOf(const std::vector<std::size_t>& d, std::size_t width) {
  std::size_t s = 0;
  for (auto x : d) s = s * width + x;
  return s;
}

void checkSymmetric(const LabeledMap& m, std::size_t width, std::size_t n, double tol) {
  for (const SpMat* mat : {&m.d0, &m.d1}) {
    for (Eigen::Index a = 0; a < mat->rows(); ++a) {
      auto da = digitsOf(static_cast<std::size_t>(a), width, n);
      for (SpMat::InnerIterator it(*mat, a); it; ++it) {
        auto db = digitsOf(static_cast<std::size_t>(it.col()), width, n);
        for (std::size_t k = 1; k < n; ++k) {
          auto pa = da, pb = db;
          std::swap(pa[0], pa[k]);
          std::swap(pb[0], pb[k]);
          double other = mat->coeff(static_cast<Eigen::Index>(indexOf(pa, width)),
                                    static_cast<Eigen::Index>(indexOf(pb, width)));
          if (std::abs(other - it.value()) > tol * std::max(1.0, std::abs(it.value())))
            throw NotSymmetricError(fmt::format("siblings 0 and {} are not interchangeable (rate {} vs {})", k,
                                                it.value(), other));
        }
      }
    }
  }
}

}  // namespace

LumpedMap lump_symmetric_level(const LabeledMap& m, const std::vector<std::size_t>& widths, double symmetryTol) {
  if (widths.empty()) throw InvalidArgument("need at least one sibling width");
  const std::size_t n = widths.size();
  const std::size_t w = widths[0];
  for (auto x : widths)
    if (x != w) throw NotSymmetricError("sibling widths differ");
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= w;
  if (total != m.size()) throw InvalidArgument(fmt::format("map has {} states, expected {}^{} = {}", m.size(), w, n, total));

  LumpedMap out;
  if (n == 1) {
    out.map = m;
    std::vector<std::size_t> ids(m.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    out.partition = partition_from_ids(ids);
    return out;
  }
  checkSymmetric(m, w, n, symmetryTol);

  std::vector<std::size_t> rep(total);
  for (std::size_t s = 0; s < total; ++s) {
    auto d = digitsOf(s, w, n);
    std::sort(d.begin(), d.end());
    rep[s] = indexOf(d, w);
  }
  out.partition = partition_from_ids(rep);
  // partition_from_ids assigns the first member as representative; the sorted
  // state is the smallest index of its orbit, so it is the first member.
  const Partition& p = out.partition;
  const auto nb = static_cast<Eigen::Index>(p.size());

  auto lump = [&](const SpMat& q) {
    std::vector<Triplet> t;
    for (std::size_t b = 0; b < p.size(); ++b) {
      const auto a = static_cast<Eigen::Index>(p.representatives[b]);
      for (SpMat::InnerIterator it(q, a); it; ++it)
        t.emplace_back(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p.blockOf[it.col()]), it.value());
    }
    SpMat r(nb, nb);
    r.setFromTriplets(t.begin(), t.end());
    r.prune(0.0);
    return r;
  };
  out.map.d0 = lump(m.d0);
  out.map.d1 = lump(m.d1);
  for (auto r : p.representatives) out.map.labels.push_back(m.labels[r]);
  out.map.caches = m.caches;
  out.map.groups = m.groups;
  return out;
}

LumpabilityReport verify_lumpability(const LabeledMap& m, const Partition& p,
                                     const std::vector<std::size_t>& siblingWidths, double tol) {
  LumpabilityReport rep;
  if (p.blockOf.size() != m.size()) throw InvalidArgument("partition does not cover the map");
  auto rowToBlocks = [&](const SpMat& q, std::size_t a) {
    std::map<std::size_t, double> r;
    for (SpMat::InnerIterator it(q, static_cast<Eigen::Index>(a)); it; ++it) r[p.blockOf[it.col()]] += it.value();
    return r;
  };
  const char* names[2] = {"hidden", "active"};
  const SpMat* mats[2] = {&m.d0, &m.d1};
  for (int k = 0; k < 2; ++k) {
    for (std::size_t b = 0; b < p.size(); ++b) {
      auto ref = rowToBlocks(*mats[k], p.blocks[b][0]);
      for (std::size_t i = 1; i < p.blocks[b].size(); ++i) {
        auto cur = rowToBlocks(*mats[k], p.blocks[b][i]);
        std::map<std::size_t, double> diff = ref;
        for (auto& [blk, v] : cur) diff[blk] -= v;
        for (auto& [blk, v] : diff) {
          const double dev = std::abs(v);
          if (dev > rep.worstDeviation) {
            rep.worstDeviation = dev;
            rep.worstPair = fmt::format("{} rates from block {} to block {}", names[k], b, blk);
          }
        }
      }
    }
  }
  rep.pass = rep.worstDeviation <= tol;

  if (!siblingWidths.empty()) {
    std::size_t total = 1;
    for (auto w : siblingWidths) total *= w;
    if (total == m.size()) {
      auto digits = [&](std::size_t s) {
        std::vector<std::size_t> d(siblingWidths.size());
        for (std::size_t i = siblingWidths.size(); i-- > 0;) {
          d[i] = s % siblingWidths[i];
          s /= siblingWidths[i];
        }
        return d;
      };
      for (const SpMat* q : mats)
        for (Eigen::Index a = 0; a < q->rows(); ++a) {
          auto da = digits(static_cast<std::size_t>(a));
          for (SpMat::InnerIterator it(*q, a); it; ++it) {
            auto db = digits(static_cast<std::size_t>(it.col()));
            std::size_t changed = 0;
            for (std::size_t i = 0; i < da.size(); ++i) changed += da[i] != db[i];
            if (changed >= 2) rep.singleSiblingMoves = false;
          }
        }
      rep.pass = rep.pass && rep.singleSiblingMoves;
    }
  }
  return rep;
}

}  // namespace ttl
