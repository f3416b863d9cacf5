#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ttlcache/approximation.hpp"
#include "ttlcache/errors.hpp"
#include "ttlcache/metrics.hpp"

using namespace ttl;

namespace {

DistributionSpec randomPh(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 4.0), p(0.0, 1.0);
  std::uniform_int_distribution<int> k(1, 4);
  const int n = k(rng);
  std::vector<double> rates(n), cont(n - 1);
  for (auto& r : rates) r = u(rng);
  for (auto& c : cont) c = p(rng);
  return DistributionSpec::coxian(rates, cont);
}

CacheTreeSpec fig9Tree(double tau) {
  auto d = tau == 0.0 ? DistributionSpec::exponential(1e6) : DistributionSpec::exponential_mean(tau);
  return uniform_tree(2, 2, {4.0, 2.0}, {d, d}, DistributionSpec::exponential(1.0));
}

}  // namespace

TEST_CASE("lst of simple laws") {
  auto e = lst_of_ph(DistributionSpec::exponential(3.0));
  for (double s : {0.0, 0.5, 2.0, 10.0}) CHECK(e(s) == doctest::Approx(3.0 / (3.0 + s)).epsilon(1e-13));
  auto er = lst_of_ph(DistributionSpec::erlang(2, 2.0));
  for (double s : {0.0, 0.5, 2.0, 10.0}) CHECK(er(s) == doctest::Approx(4.0 / ((s + 2) * (s + 2))).epsilon(1e-13));
  auto c = DistributionSpec::coxian({3.0, 1.0}, {0.5});
  CHECK(lst_of_ph(c).mean() == doctest::Approx(c.mean()).epsilon(1e-12));
}

TEST_CASE("polynomial helpers") {
  CHECK(poly_mul({1, 1}, {1, 1}) == std::vector<double>{1, 2, 1});
  CHECK(poly_sub({1, 2}, {1, 2, 3}) == std::vector<double>{0, 0, -3});
  auto sh = poly_shift({0, 0, 1}, 2.0);  // (s+2)^2
  CHECK(sh == std::vector<double>{4, 4, 1});
  CHECK(poly_eval({1, 2, 3}, 2.0) == 17.0);
}

TEST_CASE("L for exponential requests") {
  auto l = lst_L(lst_of_ph(DistributionSpec::exponential(1.0)), 0.5);
  for (double s : {0.0, 1.0, 3.0}) CHECK(l(s) == doctest::Approx(1.0 / (1.5 + s)));
  CHECK(lst_L(lst_of_ph(DistributionSpec::exponential(1.0)), 0.0)(0.0) == doctest::Approx(1.0));
  CHECK(lst_L(lst_of_ph(DistributionSpec::exponential(1.0)), 1e6)(0.0) < 1e-5);
  CHECK_THROWS_AS(lst_L(lst_of_ph(DistributionSpec::exponential(1.0)), -1.0), InvalidArgument);
}

TEST_CASE("zero-delay inter-miss law") {
  auto fx = lst_of_ph(DistributionSpec::exponential(1.0));
  auto y = miss_lst_no_delay(fx, lst_L(fx, 0.5));
  CHECK(y.mean() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(y(0.0) == doctest::Approx(1.0));
  auto big = miss_lst_no_delay(fx, lst_L(fx, 1e9));
  for (double s : {0.1, 1.0, 5.0}) CHECK(big(s) == doctest::Approx(fx(s)).epsilon(1e-6));
  auto e2 = DistributionSpec::erlang(2, 2.0);
  auto f2 = lst_of_ph(e2);
  const double lt = 2.0 * (std::sqrt(2.0) - 1.0);
  CHECK(lst_L(f2, lt)(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(miss_lst_no_delay(f2, lst_L(f2, lt)).mean() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_THROWS_AS(miss_lst_no_delay(fx, lst_L(fx, 0.0)), DegenerateError);
}

TEST_CASE("inter-miss law with delay") {
  auto fx = lst_of_ph(DistributionSpec::exponential(1.0));
  auto fd = lst_of_ph(DistributionSpec::exponential(1.0));
  auto l = lst_L(fx, 0.5);
  auto y = miss_lst_with_delay(fx, l, fd);
  CHECK(y.mean() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(y(0.0) == doctest::Approx(1.0));
  RationalLst one{{1.0}, {1.0}};
  auto y0 = miss_lst_with_delay(fx, l, one), n0 = miss_lst_no_delay(fx, l);
  for (double s : {0.0, 0.3, 4.0}) CHECK(y0(s) == doctest::Approx(n0(s)).epsilon(1e-14));
}

TEST_CASE("property: the miss interval phase-type matches its transform") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    CAPTURE(trial);
    auto x = randomPh(rng), d = randomPh(rng);
    const double lt = u(rng);
    auto fx = lst_of_ph(x);
    auto y = miss_lst_with_delay(fx, lst_L(fx, lt), lst_of_ph(d));
    PhaseType ph = miss_interval_ph(x.ph(), lt, d.ph());
    auto yph = lst_of_ph(DistributionSpec::general(ph.alpha, ph.S));
    for (double s : {0.0, 0.2, 1.0, 3.0, 9.0}) {
      CHECK(y(s) == doctest::Approx(yph(s)).epsilon(1e-10));
      CHECK(y(s) == doctest::Approx(lst_of_ph(d)(s) * miss_lst_no_delay(fx, lst_L(fx, lt))(s)).epsilon(1e-10));
    }
    CHECK(y.mean() == doctest::Approx(ph.mean()).epsilon(1e-9));
    const double q = lst_L(fx, lt)(0.0);
    CHECK(y.mean() == doctest::Approx(d.mean() + x.mean() / (1.0 - q)).epsilon(1e-9));
  }
}

TEST_CASE("renewals during the delay") {
  auto e1 = DistributionSpec::exponential(1.0);
  CHECK(expected_renewals_during_delay(e1, e1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expected_renewals_during_delay(e1, DistributionSpec::exponential(1e9)) < 1e-8);
  // Erlang-2 with mean 1, exponential delay with mean 1: F*(1) / (1 - F*(1)) with F*(1) = 4/9.
  CHECK(expected_renewals_during_delay(DistributionSpec::erlang_mean(2, 1.0), e1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("property: renewals during an exponential delay") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto x = randomPh(rng);
    const double mu = u(rng);
    const double f = lst_of_ph(x)(mu);
    CHECK(expected_renewals_during_delay(x, DistributionSpec::exponential(mu)) ==
          doctest::Approx(f / (1.0 - f)).epsilon(1e-9));
  }
}

TEST_CASE("renewal count agrees with a direct sample count") {
  std::mt19937_64 rng(1234);
  auto x = DistributionSpec::erlang_mean(2, 1.0);
  auto d = DistributionSpec::erlang_mean(3, 1.5);
  const int n = 200000;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const double end = d.sample(rng);
    double t = x.sample(rng);
    while (t < end) {
      total += 1;
      t += x.sample(rng);
    }
  }
  CHECK(expected_renewals_during_delay(x, d) == doctest::Approx(total / n).epsilon(0.01));
}

TEST_CASE("single cache approximation") {
  auto e1 = DistributionSpec::exponential(1.0);
  auto r = hit_prob_single_approx(e1, 0.5, e1);
  CHECK(r.pHit == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.q == doctest::Approx(2.0 / 3.0));
  auto z = hit_prob_single_approx(e1, 0.5, DistributionSpec::exponential(1e9));
  CHECK(z.pHit == doctest::Approx(z.q).epsilon(1e-6));
  // E2/M/M: after admission the next request comes after a residual gap, not
  // a fresh one, so the renewal argument is only approximate here.
  auto e2 = DistributionSpec::erlang_mean(2, 1.0);
  auto a = hit_prob_single_approx(e2, 0.5, e1);
  const double exact = tree_hit_probability(single_cache_tree(e2, DistributionSpec::exponential(0.5), e1));
  CHECK(exact == doctest::Approx(88.0 / 169.0).epsilon(1e-10));
  MESSAGE("E2/M/M approx - exact = " << a.pHit - exact);
  CHECK(a.pHit - exact == doctest::Approx(-0.0238163).epsilon(1e-4));
}

TEST_CASE("property: single cache approximation is exact for poisson requests") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 15; ++trial) {
    auto x = DistributionSpec::exponential(u(rng));
    auto d = randomPh(rng);
    const double lt = u(rng);
    auto spec = single_cache_tree(x, DistributionSpec::exponential(lt), d);
    auto r = hit_prob_single_approx(x, lt, d);
    CHECK(r.pHit == doctest::Approx(tree_hit_probability(spec)).epsilon(1e-8));
    CHECK(r.expectedRequestsDuringDelay == doctest::Approx(x.rate() * d.mean()).epsilon(1e-10));
    CHECK(r.expectedHits == doctest::Approx(r.q / (1.0 - r.q)));
  }
  for (double tT : {0.5, 1.0, 2.0, 4.0})
    for (double tD : {0.5, 1.0, 2.0, 4.0}) {
      auto r = hit_prob_single_approx(DistributionSpec::exponential(1.0), 1.0 / tT, DistributionSpec::exponential_mean(tD));
      CHECK(r.pHit == doctest::Approx(mmm_hit_probability(tT, tD)).epsilon(1e-12));
    }
}

TEST_CASE("property: renewal approximation stays in range") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 15; ++trial) {
    auto x = randomPh(rng), d = randomPh(rng);
    auto r = hit_prob_single_approx(x, u(rng), d);
    CHECK(r.pHit >= 0.0);
    CHECK(r.pHit <= 1.0);
    CHECK(r.missRateOut <= x.rate() * (1.0 + 1e-12));
  }
}

TEST_CASE("three-moment fits") {
  auto e = fit_three_moments(2.0, 8.0, 48.0);
  CHECK(!e.fallback);
  CHECK(e.dist.mean() == doctest::Approx(2.0));
  auto er = fit_three_moments(1.0, 1.5, 3.0);  // Erlang-2, mean 1
  CHECK(!er.fallback);
  CHECK(er.dist.ph().moment(2) == doctest::Approx(1.5));
  CHECK(er.dist.ph().moment(3) == doctest::Approx(3.0));
  auto fb = fit_three_moments(1.0, 3.0, 5.0);  // third moment too small for order 2
  CHECK(fb.fallback);
  CHECK(fb.dist.ph().moment(1) == doctest::Approx(1.0));
  CHECK(fb.dist.ph().moment(2) == doctest::Approx(3.0));
  auto low = fit_three_moments(1.0, 1.1, 1.4);
  CHECK(low.fallback);
  CHECK(low.dist.ph().moment(1) == doctest::Approx(1.0));
  CHECK(low.dist.ph().moment(2) == doctest::Approx(1.1).epsilon(1e-6));
  CHECK_THROWS_AS(fit_three_moments(-1, 1, 1), InvalidArgument);
}

TEST_CASE("property: coxian-2 moments are recovered") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 5.0), p(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = DistributionSpec::coxian({u(rng), u(rng)}, {p(rng)});
    const auto ph = c.ph();
    auto f = fit_three_moments(ph.moment(1), ph.moment(2), ph.moment(3));
    CAPTURE(trial);
    CHECK(!f.fallback);
    for (int k = 1; k <= 3; ++k) CHECK(f.dist.ph().moment(k) == doctest::Approx(ph.moment(k)).epsilon(1e-7));
  }
}

TEST_CASE("hierarchy approximation") {
  auto e1 = DistributionSpec::exponential(1.0);
  auto one = single_cache_tree(e1, DistributionSpec::exponential(0.5), e1);
  for (auto st : {SuperposeStrategy::Renewal, SuperposeStrategy::Poisson}) {
    auto r = hierarchy_approx(one, st);
    CHECK(r.pHitSys == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(r.perCache.size() == 1);
  }
  auto at0 = hierarchy_approx(fig9Tree(0.0), SuperposeStrategy::Renewal);
  CHECK(std::abs(at0.pHitSys - tree_hit_probability(fig9Tree(0.0))) < 0.02);
  CHECK(at0.pHitSys == doctest::Approx(0.9051127).epsilon(1e-6));
  auto at4 = hierarchy_approx(fig9Tree(4.0), SuperposeStrategy::Renewal);
  CHECK(at4.perCache.size() == 3);
  CHECK(at4.pHitSys == doctest::Approx(0.6148551).epsilon(1e-6));
  auto p4 = hierarchy_approx(fig9Tree(4.0), SuperposeStrategy::Poisson);
  CHECK(p4.pHitSys == doctest::Approx(0.6141215).epsilon(1e-6));
  // Leaves forward their misses and the requests that arrive during a fetch.
  CHECK(at4.perCache[0].second.missRateOut == doctest::Approx(5.0 / 7.0));
  CHECK(at4.rootMissRate == doctest::Approx(2.0 * (1.0 - at4.pHitSys)));
}

TEST_CASE("property: hierarchy approximation falls with the delay") {
  double prev = 1.0;
  for (double tau : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    auto r = hierarchy_approx(fig9Tree(tau), SuperposeStrategy::Renewal);
    CHECK(r.pHitSys < prev);
    prev = r.pHitSys;
  }
}
