#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <vector>

#include "ttlcache/settings.hpp"

namespace ttl {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

enum class Sym : std::uint8_t { Out, In, Fetch };

// Per-cache state symbol. Fetch phases count down: entry is Fetch(f), the
// object is admitted from Fetch(1).
struct CacheSymbol {
  Sym kind = Sym::Out;
  int phase = 0;  // 1..f for Fetch, 0 otherwise

  static CacheSymbol out() { return {Sym::Out, 0}; }
  static CacheSymbol in() { return {Sym::In, 0}; }
  static CacheSymbol fetch(int k) { return {Sym::Fetch, k}; }
  bool isFetch() const { return kind == Sym::Fetch; }
  auto operator<=>(const CacheSymbol&) const = default;
};

struct StateLabel {
  std::vector<CacheSymbol> caches;
  std::vector<int> arrivalPhases;
  auto operator<=>(const StateLabel&) const = default;
};

// Text form: cache symbols separated by '.', then '|' and arrival phases,
// e.g. "0.1.F2|0,1". Out = 0, In = 1, Fetch(k) = Fk.
std::string encode_label(const StateLabel& l);
StateLabel decode_label(const std::string& s);

// Static description of one cache inside a composite MAP.
struct CacheInfo {
  int fetchPhases = 1;
  // entry[k-1] is the probability that a fetch starts in Fetch(k).
  std::vector<double> entry{1.0};

  bool isEntryPhase(int k) const { return k >= 1 && k <= fetchPhases && entry[k - 1] > 0.0; }
  bool operator==(const CacheInfo&) const = default;
};

struct LabeledMap {
  SpMat d0;
  SpMat d1;
  std::vector<StateLabel> labels;
  // Caches in label order (post-order inside every sub-tree, root last).
  std::vector<CacheInfo> caches;
  // Cache counts of the top-level sibling groups; a group's root is its last cache.
  std::vector<std::size_t> groups;

  std::size_t size() const { return labels.size(); }
};

// The 1-state MAP with no transitions; neutral element of kronecker_sum.
LabeledMap empty_map();

struct Violation {
  std::string kind;
  std::size_t state;
  double magnitude;
};

std::vector<Violation> validate_map(const LabeledMap& m, const NumericSettings& s = default_settings());

LabeledMap kronecker_sum(const LabeledMap& m1, const LabeledMap& m2,
                         const NumericSettings& s = default_settings());

struct SteadyState {
  Eigen::VectorXd pi;
};

SteadyState steady_state(const LabeledMap& m, const NumericSettings& s = default_settings());

double event_rate(const LabeledMap& m, const SteadyState& ss);

// Rebuilds the d0 diagonal so that every row of d0+d1 sums to zero. Any d0
// self-loop entries are discarded first.
void recompute_diagonal(SpMat& d0, const SpMat& d1);

SpMat sparse_from_dense(const Eigen::MatrixXd& m);

// Multiplies every rate by c (time rescaling).
LabeledMap scale_rates(const LabeledMap& m, double c);

}  // namespace ttl
