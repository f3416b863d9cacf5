#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ttlcache/errors.hpp"
#include "ttlcache/metrics.hpp"

using namespace ttl;

namespace {

CacheTreeSpec mmmTree(double tauT, double tauD) {
  auto d = tauD == 0.0 ? DistributionSpec::exponential(1e6) : DistributionSpec::exponential_mean(tauD);
  return single_cache_tree(DistributionSpec::exponential(1.0), DistributionSpec::exponential_mean(tauT), d);
}

// Root of y -> (1/y) e^{-1/y} = (1/tauT) e^{-1/tauT} away from y = tauT.
double boundByBisection(double tauT) {
  auto g = [tauT](double y) { return std::exp(-1.0 / y) / y - std::exp(-1.0 / tauT) / tauT; };
  double lo, hi;
  if (tauT >= 1.0) {
    lo = 1e-3;
    hi = 1.0;
  } else {
    lo = 1.0;
    hi = 1e6;
  }
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    if ((g(lo) < 0) == (g(m) < 0)) lo = m;
    else hi = m;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("mmm hit probabilities") {
  const double rate = 1.0;
  CHECK(hit_probability(build_tree(mmmTree(2, 1)), rate) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::abs(hit_probability(build_tree(mmmTree(2, 0)), rate) - 2.0 / 3.0) < 1e-5);
}

TEST_CASE("no misses means hit probability one") {
  LabeledMap m = th::mmm(1, 0.5, 1);
  m.d1.setZero();
  m.d1.data().squeeze();
  recompute_diagonal(m.d0, m.d1);
  CHECK(hit_probability(m, 1.0) == 1.0);
}

TEST_CASE("delay impairment of single caches") {
  CHECK(delay_impairment(mmmTree(2, 1)) == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(std::abs(delay_impairment(mmmTree(2, 0))) < 1e-12);
  CHECK(delay_impairment(mmmTree(1, 2)) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("closed form impairment") {
  CHECK(mmm_impairment_closed_form(2, 1) == 0.25);
  CHECK(mmm_impairment_closed_form(0, 0.5) == doctest::Approx(1.0 / 3.0));
  CHECK(mmm_impairment_closed_form(3.7, 0) == 0.0);
  CHECK_THROWS_AS(mmm_impairment_closed_form(-1, 0), InvalidArgument);
}

TEST_CASE("property: closed form derivative matches finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng) + 0.01, d = u(rng);
    const double h = 1e-6;
    const double fd = (mmm_impairment_closed_form(t + h, d) - mmm_impairment_closed_form(t - h, d)) / (2 * h);
    CHECK(mmm_impairment_dtauT(t, d) == doctest::Approx(fd).epsilon(1e-5));
    CHECK(mmm_impairment_dtauT(t, d) <= 0.0);
  }
}

TEST_CASE("lambert w") {
  CHECK(lambert_w(0, 1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-14));
  CHECK(lambert_w(0, 0.0) == 0.0);
  CHECK(lambert_w(0, -std::exp(-1.0)) == doctest::Approx(-1.0));
  CHECK(lambert_w(-1, -std::exp(-1.0)) == doctest::Approx(-1.0));
  CHECK(lambert_w(-1, -0.1) == doctest::Approx(-3.577152063957297).epsilon(1e-13));
  CHECK_THROWS_AS(lambert_w(0, -1.0), InvalidArgument);
  CHECK_THROWS_AS(lambert_w(-1, 0.5), InvalidArgument);
  CHECK_THROWS_AS(lambert_w(1, 0.5), InvalidArgument);
}

TEST_CASE("property: lambert w residual") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double x0 = -std::exp(-1.0) + 1e-9 + u(rng) * 50.0;
    const double w0 = lambert_w(0, x0);
    CHECK(std::abs(w0 * std::exp(w0) - x0) < 1e-12 * std::max(1.0, std::abs(x0)));
    CHECK(w0 >= -1.0);
    const double xm = -std::exp(-1.0) * u(rng);
    if (xm < 0.0 && xm > -std::exp(-1.0)) {
      const double wm = lambert_w(-1, xm);
      CHECK(std::abs(wm * std::exp(wm) - xm) < 1e-12);
      CHECK(wm <= -1.0);
    }
  }
}

TEST_CASE("delay upper bound") {
  CHECK(delay_upper_bound(1.0) == 1.0);
  CHECK(delay_upper_bound(2.0) == doctest::Approx(boundByBisection(2.0)).epsilon(1e-9));
  CHECK(std::abs(delay_upper_bound(2.0) - 0.5693) < 1e-4);
  CHECK(std::abs(delay_upper_bound(0.5) - 2.46) < 1e-2);
  CHECK(delay_upper_bound(0.5) == doctest::Approx(boundByBisection(0.5)).epsilon(1e-9));
  CHECK_THROWS_AS(delay_upper_bound(0.0), InvalidArgument);
}

TEST_CASE("property: delay bound and tauT straddle one") {
  for (double t = 0.1; t < 8.0; t += 0.1) {
    const double b = delay_upper_bound(t);
    if (t < 0.999) CHECK(b > 1.0);
    if (t > 1.001) CHECK(b < 1.0);
    CHECK(b == doctest::Approx(boundByBisection(t)).epsilon(1e-8));
  }
}

TEST_CASE("optimal delay on a known curve") {
  auto f = [](double x) { return 1.0 - (x - 0.3) * (x - 0.3); };
  auto r = optimal_delay(f, 0.0, 2.0, 1e-6);
  CHECK(r.deltaStar == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(r.pHitMax == doctest::Approx(1.0));
  CHECK(r.kappa == doctest::Approx(0.91));
}

TEST_CASE("mmm optimum is at zero delay") {
  auto r = optimal_delay(mmmTree(2, 1), 0.0, 3.0, 1e-3);
  CHECK(r.deltaStar == 0.0);
  CHECK(r.kappa == doctest::Approx(1.0));
}

TEST_CASE("near-periodic requests benefit from a short delay") {
  auto spec = single_cache_tree(DistributionSpec::erlang_mean(20, 1.0), DistributionSpec::exponential_mean(2.0),
                                DistributionSpec::exponential(1.0));
  auto r = optimal_delay(spec, 0.0, 2.0, 1e-3);
  CHECK(std::abs(r.deltaStar - 0.25) < 0.03);
  CHECK(std::abs(r.pHitMax - 0.6314) < 2e-3);
  CHECK(r.kappa < 1.0);
  auto s = single_cache_tree(DistributionSpec::erlang_mean(20, 1.0), DistributionSpec::exponential_mean(0.1),
                             DistributionSpec::exponential(1.0));
  CHECK(std::abs(optimal_delay(s, 0.0, 2.0, 1e-3).deltaStar - 0.83) < 0.05);
}
