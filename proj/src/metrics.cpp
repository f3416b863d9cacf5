#include "ttlcache/metrics.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <spdlog/spdlog.h>

#include "ttlcache/errors.hpp"

namespace ttl {

double hit_probability(const LabeledMap& system, double totalRequestRate, const NumericSettings& s) {
  if (!(totalRequestRate > 0.0)) throw InvalidArgument("total request rate must be positive");
  const double miss = event_rate(system, steady_state(system, s));
  double p = 1.0 - miss / totalRequestRate;
  if (p < 0.0 || p > 1.0) {
    const double off = p < 0.0 ? -p : p - 1.0;
    if (off > 1e-9) spdlog::warn("hit probability {} clamped to [0,1]", p);
    p = std::clamp(p, 0.0, 1.0);
  }
  return p;
}

double tree_hit_probability(const CacheTreeSpec& spec, const BuildOptions& opt) {
  return hit_probability(build_tree(spec, opt), total_request_rate(spec), opt.numerics);
}

double delay_impairment(const CacheTreeSpec& spec, const BuildOptions& opt) {
  const double p = tree_hit_probability(spec, opt);
  const double p0 = tree_hit_probability(with_delay_ratio(spec, 0.0), opt);
  if (!(p0 > 0.0)) throw DegenerateError("zero-delay hit probability is 0; impairment undefined");
  return 1.0 - p / p0;
}

double mmm_impairment_closed_form(double tauT, double tauDelta) {
  if (tauT < 0.0 || tauDelta < 0.0) throw InvalidArgument("tau values must be >= 0");
  return tauDelta / (tauT + tauDelta + 1.0);
}

double mmm_impairment_dtauT(double tauT, double tauDelta) {
  const double d = tauT + tauDelta + 1.0;
  return -tauDelta / (d * d);
}

double mmm_hit_probability(double tauT, double tauDelta) { return tauT / (tauT + tauDelta + 1.0); }

double lambert_w(int branch, double x) {
  constexpr double kInvE = 0.36787944117144233;
  if (branch != 0 && branch != -1) throw InvalidArgument("Lambert W branch must be 0 or -1");
  if (!(x >= -kInvE) || !std::isfinite(x)) {
    // Tolerate rounding right at the branch point.
    if (x < -kInvE && x > -kInvE - 1e-15) x = -kInvE;
    else throw InvalidArgument(fmt::format("Lambert W argument {} below -1/e", x));
  }
  if (branch == -1 && x >= 0.0) throw InvalidArgument("Lambert W_{-1} needs x < 0");
  if (x == 0.0) return 0.0;
  if (x == -kInvE) return -1.0;

  double w;
  const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
  if (branch == 0) {
    if (x < -0.25) w = -1.0 + p - p * p / 3.0;
    else if (x < 3.0) w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    else {
      const double l = std::log(x);
      w = l - std::log(l);
    }
  } else {
    if (x < -0.25) w = -1.0 - p - p * p / 3.0;
    else {
      const double l = std::log(-x);
      w = l - std::log(-l);
    }
  }
  for (int i = 0; i < 50; ++i) {
    const double e = std::exp(w);
    const double f = w * e - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = f / (e * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

double delay_upper_bound(double tauT) {
  if (!(tauT > 0.0)) throw InvalidArgument("tauT must be positive");
  const double x = -std::exp(-1.0 / tauT) / tauT;
  const int branch = tauT >= 1.0 ? -1 : 0;
  return -1.0 / lambert_w(branch, x);
}

OptimalDelay optimal_delay(const std::function<double(double)>& phOf, double lo, double hi, double tol) {
  if (!(hi > lo)) throw InvalidArgument("optimal_delay needs a non-empty range");
  constexpr int kGrid = 81;
  const double h = (hi - lo) / (kGrid - 1);
  int best = 0;
  double bestVal = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double v = phOf(lo + i * h);
    if (v > bestVal) {
      bestVal = v;
      best = i;
    }
  }
  double a = lo + std::max(0, best - 1) * h;
  double b = lo + std::min(kGrid - 1, best + 1) * h;
  double bestX = lo + best * h;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = phOf(c), fd = phOf(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = phOf(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = phOf(d);
    }
  }
  for (auto [x, v] : {std::pair{c, fc}, std::pair{d, fd}})
    if (v > bestVal) {
      bestVal = v;
      bestX = x;
    }
  const double p0 = phOf(0.0);
  return {bestX, bestVal, bestVal > 0.0 ? p0 / bestVal : 1.0};
}

OptimalDelay optimal_delay(const CacheTreeSpec& spec, double lo, double hi, double tol, const BuildOptions& opt) {
  return optimal_delay([&](double tau) { return tree_hit_probability(with_delay_ratio(spec, tau), opt); }, lo, hi,
                       tol);
}

}  // namespace ttl
