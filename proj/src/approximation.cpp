#include "ttlcache/approximation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>

#include "ttlcache/cache_builders.hpp"
#include "ttlcache/errors.hpp"

namespace ttl {

namespace {

Eigen::MatrixXd kronSum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto na = a.rows(), nb = b.rows();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j)
      if (a(i, j) != 0.0) r.block(i * nb, j * nb, nb, nb).diagonal().array() += a(i, j);
  for (Eigen::Index i = 0; i < na; ++i) r.block(i * nb, i * nb, nb, nb) += b;
  return r;
}

Eigen::MatrixXd kronProd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

// P(X < T) for exponential T with rate lambdaT: alpha (lambdaT I - S)^{-1} exit.
double probShorterThanTtl(const PhaseType& x, double lambdaT) {
  const int n = x.order();
  Eigen::MatrixXd m = lambdaT * Eigen::MatrixXd::Identity(n, n) - x.S;
  return x.alpha.dot(m.partialPivLu().solve(x.exit()));
}

double renewals(const PhaseType& x, const PhaseType& d) {
  const int m = x.order(), f = d.order();
  Eigen::MatrixXd T = kronSum(x.S, d.S) + kronProd(x.exit() * x.alpha.transpose(), Eigen::MatrixXd::Identity(f, f));
  Eigen::VectorXd init = kronProd(x.alpha, d.alpha);
  Eigen::VectorXd reward = kronProd(x.exit(), Eigen::VectorXd::Ones(f));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(-T);
  if (!(std::abs(lu.determinant()) > 0.0)) throw NumericalError("renewal-count system is singular");
  Eigen::VectorXd y = lu.solve(reward);
  (void)m;
  return init.dot(y);
}

CacheApproxResult singleFromPh(const PhaseType& x, double lambdaT, const PhaseType& delta) {
  CacheApproxResult r;
  r.q = probShorterThanTtl(x, lambdaT);
  r.expectedRequestsDuringDelay = renewals(x, delta);
  const double ex = x.mean();
  if (r.q >= 1.0 - 1e-15) {
    r.q = 1.0;
    r.expectedHits = INFINITY;
    r.pHit = 1.0;
    r.missRateOut = 0.0;
    return r;
  }
  r.expectedHits = r.q / (1.0 - r.q);
  const double cycle = 1.0 + r.expectedRequestsDuringDelay + r.expectedHits;
  r.pHit = r.expectedHits / cycle;
  r.missRateOut = (1.0 + r.expectedRequestsDuringDelay) / (cycle * ex);
  return r;
}

}  // namespace

double expected_renewals_during_delay(const DistributionSpec& x, const DistributionSpec& delta) {
  return renewals(x.ph(), delta.ph());
}

CacheApproxResult hit_prob_single_approx(const DistributionSpec& x, double lambdaT, const DistributionSpec& delta) {
  return singleFromPh(x.ph(), lambdaT, delta.ph());
}

PhaseType miss_interval_ph(const PhaseType& x, double lambdaT, const PhaseType& delta) {
  const int m = x.order(), f = delta.order();
  const int n = f + 2 * m;
  PhaseType y;
  y.alpha = Eigen::VectorXd::Zero(n);
  y.S = Eigen::MatrixXd::Zero(n, n);
  y.alpha.head(f) = delta.alpha;
  y.alpha.segment(f, m) += (1.0 - delta.alpha.sum()) * x.alpha;
  const Eigen::VectorXd dex = delta.exit(), xex = x.exit();
  y.S.block(0, 0, f, f) = delta.S;
  y.S.block(0, f, f, m) = dex * x.alpha.transpose();
  // Object present: completions are hits and restart the request clock.
  y.S.block(f, f, m, m) = x.S + xex * x.alpha.transpose() - lambdaT * Eigen::MatrixXd::Identity(m, m);
  y.S.block(f, f + m, m, m) = lambdaT * Eigen::MatrixXd::Identity(m, m);
  // Object expired: the next completion is the miss.
  y.S.block(f + m, f + m, m, m) = x.S;
  return y;
}

MomentFit fit_three_moments(double m1, double m2, double m3) {
  if (!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0)) throw InvalidArgument("moments must be positive");
  const double cv2 = m2 / (m1 * m1) - 1.0;
  if (std::abs(cv2 - 1.0) < 1e-9 && std::abs(m3 / (6.0 * m1 * m1 * m1) - 1.0) < 1e-9)
    return {DistributionSpec::exponential(1.0 / m1), false, "exponential"};

  // F*(s) = (c1 s + d0) / (s^2 + d1 s + d0), matched on s, s^2, s^3.
  Eigen::Matrix2d a;
  a << -m1, m2 / 2.0, m2 / 2.0, -m3 / 6.0;
  Eigen::Vector2d b(-1.0, m1);
  if (std::abs(a.determinant()) > 1e-12 * (m2 * m2)) {
    Eigen::Vector2d sol = a.partialPivLu().solve(b);
    const double d1 = sol(0), d0 = sol(1);
    const double c1 = d1 - d0 * m1;
    const double disc = d1 * d1 - 4.0 * d0;
    if (disc >= 0.0 && d0 > 0.0 && d1 > 0.0) {
      const double r = std::sqrt(disc);
      const double roots[2] = {(d1 + r) / 2.0, (d1 - r) / 2.0};
      for (int i = 0; i < 2; ++i) {
        const double mu1 = roots[i], mu2 = roots[1 - i];
        if (!(mu1 > 0.0 && mu2 > 0.0)) continue;
        const double p = 1.0 - c1 / mu1;
        if (p >= -1e-12 && p <= 1.0 + 1e-12)
          return {DistributionSpec::coxian({mu1, mu2}, {std::clamp(p, 0.0, 1.0)}), false, "coxian-2 three-moment"};
      }
    }
  }
  // Two-moment fallback.
  if (cv2 >= 1.0) {
    const double p1 = 0.5 * (1.0 + std::sqrt((cv2 - 1.0) / (cv2 + 1.0)));
    Eigen::Vector2d alpha(p1, 1.0 - p1);
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    S(0, 0) = -2.0 * p1 / m1;
    S(1, 1) = -2.0 * (1.0 - p1) / m1;
    return {DistributionSpec::general(alpha, S), true, "hyperexponential two-moment"};
  }
  const int k = static_cast<int>(std::ceil(1.0 / cv2));
  const double p = (k * cv2 - std::sqrt(k * (1.0 + cv2) - k * k * cv2)) / (1.0 + cv2);
  const double mu = (k - p) / m1;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(k);
  alpha(0) = 1.0 - p;
  if (k > 1) alpha(1) += p;
  else alpha(0) = 1.0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    S(i, i) = -mu;
    if (i + 1 < k) S(i, i + 1) = mu;
  }
  return {DistributionSpec::general(alpha, S), true, "mixed-Erlang two-moment"};
}

namespace {

struct OutMap {
  Eigen::MatrixXd d0, d1;
};

// Stream a cache forwards upward: its misses plus every request arriving
// while the fetch is under way. Blocks: (delay phase x request phase), then
// object alive, then object expired (request phase each).
OutMap forwardedStream(const PhaseType& x, double lambdaT, const PhaseType& delta) {
  const int m = x.order(), f = delta.order();
  const int n = f * m + 2 * m;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd renew = x.exit() * x.alpha.transpose();
  OutMap o{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  const int alive = f * m, dead = f * m + m;
  o.d0.block(0, 0, f * m, f * m) = kronSum(delta.S, x.S);
  o.d1.block(0, 0, f * m, f * m) = kronProd(Eigen::MatrixXd::Identity(f, f), renew);
  o.d0.block(0, alive, f * m, m) = kronProd(delta.exit(), I);
  o.d0.block(alive, alive, m, m) = x.S + renew - lambdaT * I;
  o.d0.block(alive, dead, m, m) = lambdaT * I;
  o.d0.block(dead, dead, m, m) = x.S;
  o.d1.block(dead, 0, m, f * m) = x.exit() * kronProd(delta.alpha, x.alpha).transpose();
  return o;
}

// Rate and first three moments of the stationary (Palm) interval of a MAP.
std::pair<double, std::array<double, 3>> palmMoments(const OutMap& o) {
  const auto n = o.d0.rows();
  Eigen::MatrixXd q = (o.d0 + o.d1).transpose();
  q.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  Eigen::VectorXd pi = q.fullPivLu().solve(rhs);
  Eigen::VectorXd phi = (pi.transpose() * o.d1).transpose();
  const double rate = phi.sum();
  if (!(rate > 0.0)) throw DegenerateError("forwarded stream has zero rate");
  phi /= rate;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(-o.d0);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  std::array<double, 3> mom{};
  double fact = 1.0;
  for (int k = 0; k < 3; ++k) {
    v = lu.solve(v);
    fact *= (k + 1);
    mom[k] = fact * phi.dot(v);
  }
  return {rate, mom};
}

OutMap approxNode(const CacheNode& node, SuperposeStrategy strategy, SystemApproxResult& sys) {
  PhaseType input;
  if (node.isLeaf()) {
    input = node.arrival->ph();
  } else {
    std::vector<OutMap> kids;
    for (const auto& c : node.children) kids.push_back(approxNode(c, strategy, sys));
    if (strategy == SuperposeStrategy::Poisson) {
      double rate = 0.0;
      for (const auto& k : kids) rate += palmMoments(k).first;
      input = DistributionSpec::exponential(rate).ph();
    } else {
      // Renewal stand-in for the superposed streams, matched on the interval moments.
      OutMap sup = kids[0];
      for (std::size_t i = 1; i < kids.size(); ++i) {
        sup.d0 = kronSum(sup.d0, kids[i].d0);
        sup.d1 = kronSum(sup.d1, kids[i].d1);
      }
      auto [rate, mom] = palmMoments(sup);
      (void)rate;
      MomentFit fit = fit_three_moments(mom[0], mom[1], mom[2]);
      sys.fallbackUsed = sys.fallbackUsed || fit.fallback;
      input = fit.dist.ph();
    }
  }
  const double lambdaT = 1.0 / node.ttl.mean();
  const PhaseType delta = node.delay.ph();
  sys.perCache.emplace_back(node.id, singleFromPh(input, lambdaT, delta));
  return forwardedStream(input, lambdaT, delta);
}

}  // namespace

SystemApproxResult hierarchy_approx(const CacheTreeSpec& spec, SuperposeStrategy strategy) {
  validate_for_exact(spec);
  SystemApproxResult sys;
  approxNode(spec.root, strategy, sys);
  sys.totalRequestRate = total_request_rate(spec);
  sys.rootMissRate = sys.perCache.back().second.missRateOut;
  sys.pHitSys = std::clamp(1.0 - sys.rootMissRate / sys.totalRequestRate, 0.0, 1.0);
  return sys;
}

}  // namespace ttl
