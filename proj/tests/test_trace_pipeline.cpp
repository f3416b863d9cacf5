#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "ttlcache/errors.hpp"
#include "ttlcache/trace_pipeline.hpp"

using namespace ttl;

namespace {

std::vector<double> draw(const DistributionSpec& d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = d.sample(rng);
  return v;
}

bool nonDecreasing(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] < t[i - 1] - 1e-8 * std::abs(t[i - 1])) return false;
  return true;
}

}  // namespace

TEST_CASE("timestamps and gaps") {
  const std::string path = "trace_pipeline_test_ts.txt";
  {
    std::ofstream o(path);
    o << "# header\n0\n0.5\n\n2.0\n";
  }
  auto ts = read_timestamps(path);
  CHECK(ts == std::vector<double>{0.0, 0.5, 2.0});
  CHECK(interarrivals(ts) == std::vector<double>{0.5, 1.5});
  {
    std::ofstream o(path);
    o << "1\nabc\n";
  }
  try {
    read_timestamps(path);
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_timestamps("no/such/file"), InvalidArgument);
  CHECK_THROWS_AS(interarrivals({1.0}), InvalidArgument);
  CHECK_THROWS_AS(interarrivals({1.0, 0.0}), InvalidArgument);
}

TEST_CASE("outlier removal") {
  std::vector<double> same(50, 2.0);
  CHECK(remove_outliers(same) == same);
  auto x = draw(DistributionSpec::exponential(1.0), 999, 1);
  auto r = remove_outliers(x, INFINITY);
  CHECK(r == x);
  x.push_back(1e6);
  auto d = remove_outliers_detailed(x);
  CHECK(std::find(d.kept.begin(), d.kept.end(), 1e6) == d.kept.end());
  CHECK(d.removed >= 1);
  CHECK(d.kept.size() + d.removed == x.size());
  CHECK(d.lambda >= -2.0);
  CHECK(d.lambda <= 2.0);
}

TEST_CASE("property: outlier removal keeps the bulk") {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> u(0.2, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = draw(DistributionSpec::erlang(1 + trial % 4, u(rng)), 2000, trial);
    auto d = remove_outliers_detailed(x);
    // A two-sigma cut of a near-normal sample drops roughly 5 percent.
    CHECK(d.removed < x.size() / 8);
    for (double v : d.kept) CHECK(std::find(x.begin(), x.end(), v) != x.end());
  }
}

TEST_CASE("one-phase fit is the exponential mle") {
  auto x = draw(DistributionSpec::exponential(2.0), 5000, 2);
  auto r = fit_ph_em(x, 1);
  CHECK(r.fittedPH.rate() == doctest::Approx(2.0).epsilon(0.05));
  double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  CHECK(r.fittedMean == doctest::Approx(mean).epsilon(1e-6));
  CHECK(nonDecreasing(r.logLikelihoodTrace));
}

TEST_CASE("nested fits do not lose likelihood") {
  auto x = draw(DistributionSpec::erlang_mean(3, 1.0), 3000, 3);
  auto r1 = fit_ph_em(x, 1), r3 = fit_ph_em(x, 3);
  CHECK(r3.logLikelihood >= r1.logLikelihood);
  CHECK(nonDecreasing(r3.logLikelihoodTrace));
  CHECK(r3.fittedMean == doctest::Approx(r3.empiricalMean).epsilon(0.05));
  CHECK(r3.bic < r1.bic);
  CHECK(r3.aic == doctest::Approx(2 * 5 - 2 * r3.logLikelihood));
}

TEST_CASE("phase selection") {
  auto e = draw(DistributionSpec::exponential(1.0), 3000, 4);
  CHECK(select_phases(e, {1, 2, 3}).phases == 1);
  // Two well separated modes.
  std::vector<double> mix = draw(DistributionSpec::erlang_mean(8, 0.5), 1500, 5);
  auto far = draw(DistributionSpec::erlang_mean(8, 5.0), 1500, 6);
  mix.insert(mix.end(), far.begin(), far.end());
  auto s = select_phases(mix, {1, 2, 4, 6});
  CHECK(s.phases >= 2);
  CHECK(fit_ph_em(mix, s.phases).logLikelihood > fit_ph_em(mix, 1).logLikelihood + 10.0);
}

TEST_CASE("property: em traces are monotone and match the mean") {
  std::mt19937_64 rng(60);
  std::uniform_real_distribution<double> u(0.3, 3.0), p(0.1, 0.9);
  for (int trial = 0; trial < 6; ++trial) {
    auto src = DistributionSpec::coxian({u(rng), u(rng), u(rng)}, {p(rng), p(rng)});
    auto x = draw(src, 1500, 100 + trial);
    for (int k : {1, 2, 4}) {
      auto r = fit_ph_em(x, k, 300);
      CAPTURE(trial);
      CAPTURE(k);
      CHECK(nonDecreasing(r.logLikelihoodTrace));
      CHECK(r.fittedMean == doctest::Approx(r.empiricalMean).epsilon(0.05));
    }
  }
}

TEST_CASE("density integrates to one") {
  auto ph = DistributionSpec::coxian({3.0, 1.0}, {0.5}).ph();
  double s = 0;
  const double h = 1e-3;
  for (double x = h / 2; x < 40.0; x += h) s += ph_density(ph, x) * h;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(ph_density(DistributionSpec::exponential(2.0).ph(), 0.0) == doctest::Approx(2.0));
}

TEST_CASE("report text") {
  auto r = fit_ph_em(draw(DistributionSpec::exponential(1.0), 200, 9), 2);
  auto t = format_report(r);
  CHECK(t.find("phases: 2") != std::string::npos);
  CHECK(t.find("log_likelihood_trace: [") != std::string::npos);
}

TEST_CASE("bad inputs") {
  CHECK_THROWS_AS(fit_ph_em({}, 1), InvalidArgument);
  CHECK_THROWS_AS(fit_ph_em({1.0, 0.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(fit_ph_em({1.0}, 0), InvalidArgument);
  CHECK_THROWS_AS(select_phases({1.0}, {}), InvalidArgument);
}

TEST_CASE("coxian swap of two phases") {
  std::vector<double> r{1.0, 3.0}, c{0.4};
  coxian_canonical(r, c);
  CHECK(r == std::vector<double>{3.0, 1.0});
  CHECK(c[0] == doctest::Approx(0.8));
  auto a = DistributionSpec::coxian({1.0, 3.0}, {0.4}).ph(), b = DistributionSpec::coxian(r, c).ph();
  for (int k = 1; k <= 3; ++k) CHECK(b.moment(k) == doctest::Approx(a.moment(k)).epsilon(1e-12));
}

TEST_CASE("property: canonical coxians keep their law and order their rates") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.2, 5.0), p(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    std::vector<double> r(n), c(n - 1);
    for (auto& x : r) x = u(rng);
    for (auto& x : c) x = p(rng);
    const PhaseType before = DistributionSpec::coxian(r, c).ph();
    coxian_canonical(r, c);
    for (int i = 0; i + 1 < n; ++i) CHECK(r[i] >= r[i + 1]);
    for (double x : c) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    const PhaseType after = DistributionSpec::coxian(r, c).ph();
    for (int k = 1; k <= 3; ++k) CHECK(after.moment(k) == doctest::Approx(before.moment(k)).epsilon(1e-10));
    for (double x : {0.1, 0.7, 2.0}) CHECK(ph_density(after, x) == doctest::Approx(ph_density(before, x)).epsilon(1e-10));
  }
  auto fit = fit_ph_em(draw(DistributionSpec::coxian({0.5, 4.0}, {0.6}), 2000, 9), 3, 300);
  const PhaseType f = fit.fittedPH.ph();
  for (int i = 0; i + 1 < f.order(); ++i) CHECK(-f.S(i, i) >= -f.S(i + 1, i + 1));
}
