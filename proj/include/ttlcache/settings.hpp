#pragma once

#include <cstddef>
#include <string>

namespace ttl {

// Numeric knobs shared by the exact engine. Defaults can be overridden through
// the TTLCACHE_NUMERICS environment variable, e.g.
//   TTLCACHE_NUMERICS="row_sum_tol=1e-9,state_cap=500000"
struct NumericSettings {
  double rowSumTol = 1e-10;
  double residualTol = 1e-8;
  double conditionLimit = 1e12;
  std::size_t stateCap = 200000;
  // Dense condition estimates are only computed up to this many states.
  std::size_t denseConditionMax = 500;
  // Larger chains are solved iteratively first.
  std::size_t directSolveMax = 5000;
};

NumericSettings parse_numeric_settings(const std::string& spec, NumericSettings base = {});

// Process-wide defaults (environment applied once on first use).
const NumericSettings& default_settings();

}  // namespace ttl
