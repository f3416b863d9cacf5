#pragma once

#include <string>
#include <vector>

#include "ttlcache/distribution.hpp"
#include "ttlcache/tree.hpp"

namespace ttl {

// F*(s) = num(s) / den(s); coefficients in ascending powers of s.
struct RationalLst {
  std::vector<double> num;
  std::vector<double> den;

  double operator()(double s) const;
  // -dF*/ds at 0.
  double mean() const;
};

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> poly_sub(const std::vector<double>& a, const std::vector<double>& b);
// p(s + c)
std::vector<double> poly_shift(const std::vector<double>& p, double c);
double poly_eval(const std::vector<double>& p, double s);

RationalLst lst_product(const RationalLst& a, const RationalLst& b);

RationalLst lst_of_ph(const DistributionSpec& d);
// L*(s) = F_X*(s + lambdaT) for an exponential TTL with rate lambdaT.
RationalLst lst_L(const RationalLst& fx, double lambdaT);
// Inter-miss LST without delay, (F_X* - L*) / (1 - L*).
RationalLst miss_lst_no_delay(const RationalLst& fx, const RationalLst& l);
// Inter-miss LST with fetch delay, F_Delta* (F_X* - L*) / (1 - L*).
RationalLst miss_lst_with_delay(const RationalLst& fx, const RationalLst& l, const RationalLst& fdelta);

// Expected number of X-renewals inside an independent delay, counted from a
// renewal epoch.
double expected_renewals_during_delay(const DistributionSpec& x, const DistributionSpec& delta);

struct CacheApproxResult {
  double q = 0;                            // P(X < T)
  double expectedHits = 0;                 // E[N]
  double expectedRequestsDuringDelay = 0;  // E[m(Delta)]
  double pHit = 0;
  double missRateOut = 0;  // requests not served by this cache, per unit time
};

CacheApproxResult hit_prob_single_approx(const DistributionSpec& x, double lambdaT, const DistributionSpec& delta);

// Inter-miss time of one cache fed by renewal input x: Delta followed by the
// zero-delay inter-miss time, as a phase-type law.
PhaseType miss_interval_ph(const PhaseType& x, double lambdaT, const PhaseType& delta);

struct MomentFit {
  DistributionSpec dist;
  bool fallback = false;  // two-moment match used
  std::string note;
};

// Order-2 Coxian matching three moments, or a two-moment match when the
// triple is outside the order-2 region.
MomentFit fit_three_moments(double m1, double m2, double m3);

enum class SuperposeStrategy { Renewal, Poisson };

struct SystemApproxResult {
  double pHitSys = 0;
  double rootMissRate = 0;
  double totalRequestRate = 0;
  std::vector<std::pair<std::string, CacheApproxResult>> perCache;
  bool fallbackUsed = false;
};

SystemApproxResult hierarchy_approx(const CacheTreeSpec& spec, SuperposeStrategy strategy);

}  // namespace ttl
