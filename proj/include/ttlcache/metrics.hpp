#pragma once

#include <functional>

#include "ttlcache/hierarchy.hpp"
#include "ttlcache/map.hpp"
#include "ttlcache/tree.hpp"

namespace ttl {

// 1 - (system miss rate) / totalRequestRate, clamped to [0,1].
double hit_probability(const LabeledMap& system, double totalRequestRate,
                       const NumericSettings& s = default_settings());

// Builds the tree MAP and returns its hit probability.
double tree_hit_probability(const CacheTreeSpec& spec, const BuildOptions& opt = {});

// 1 - P_h(delay) / P_h(zero delay).
double delay_impairment(const CacheTreeSpec& spec, const BuildOptions& opt = {});

// Closed form for a single cache with Poisson requests and exponential TTL and
// delay, tauDelta / (tauT + tauDelta + 1).
double mmm_impairment_closed_form(double tauT, double tauDelta);
// d eta / d tauT of the closed form.
double mmm_impairment_dtauT(double tauT, double tauDelta);
// tauT / (tauT + tauDelta + 1).
double mmm_hit_probability(double tauT, double tauDelta);

// Principal (0) or lower (-1) real branch, Halley iteration.
double lambert_w(int branch, double x);

// Largest normalized delay that does not reduce the hit probability of a
// cache with periodic requests.
double delay_upper_bound(double tauT);

struct OptimalDelay {
  double deltaStar;
  double pHitMax;
  double kappa;  // P_h(0) / P_h(deltaStar)
};

// Maximizes phOf over [lo, hi]: 81-point grid then golden-section refinement.
OptimalDelay optimal_delay(const std::function<double(double)>& phOf, double lo, double hi, double tol = 1e-3);
// Same, with phOf(tau) = hit probability of spec with delays rescaled to tau.
OptimalDelay optimal_delay(const CacheTreeSpec& spec, double lo, double hi, double tol = 1e-3,
                           const BuildOptions& opt = {});

}  // namespace ttl
