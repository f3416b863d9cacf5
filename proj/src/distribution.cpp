#include "ttlcache/distribution.hpp"

#include <cmath>
#include <fmt/format.h>

#include "ttlcache/errors.hpp"

namespace ttl {

Eigen::VectorXd PhaseType::exit() const { return -S * Eigen::VectorXd::Ones(order()); }

double PhaseType::moment(int k) const {
  Eigen::MatrixXd negInv = (-S).inverse();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(order());
  double fact = 1.0;
  for (int i = 1; i <= k; ++i) {
    v = negInv * v;
    fact *= i;
  }
  return fact * alpha.dot(v);
}

namespace {

void checkRate(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument(fmt::format("{} must be positive and finite, got {}", what, r));
}

void checkPh(const PhaseType& p) {
  const int n = p.order();
  if (n < 1 || p.S.rows() != n || p.S.cols() != n) throw InvalidArgument("phase-type dimensions mismatch");
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    if (p.alpha(i) < 0.0) throw InvalidArgument("phase-type initial vector has a negative entry");
    mass += p.alpha(i);
  }
  if (std::abs(mass - 1.0) > 1e-9) throw InvalidArgument(fmt::format("phase-type initial vector sums to {}", mass));
  bool exits = false;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i != j && p.S(i, j) < 0.0) throw InvalidArgument("phase-type subgenerator has a negative off-diagonal rate");
      row += p.S(i, j);
    }
    if (p.S(i, i) >= 0.0) throw InvalidArgument("phase-type subgenerator needs negative diagonal");
    if (row > 1e-12) throw InvalidArgument("phase-type subgenerator row sum is positive");
    if (row < -1e-12) exits = true;
  }
  if (!exits) throw InvalidArgument("phase-type subgenerator has no exit");
}

PhaseType buildPh(const DistributionSpec::Kind& k) {
  PhaseType p;
  if (auto e = std::get_if<Exponential>(&k)) {
    p.alpha = Eigen::VectorXd::Ones(1);
    p.S = Eigen::MatrixXd::Constant(1, 1, -e->rate);
  } else if (auto e = std::get_if<Erlang>(&k)) {
    p.alpha = Eigen::VectorXd::Zero(e->phases);
    p.alpha(0) = 1.0;
    p.S = Eigen::MatrixXd::Zero(e->phases, e->phases);
    for (int i = 0; i < e->phases; ++i) {
      p.S(i, i) = -e->rate;
      if (i + 1 < e->phases) p.S(i, i + 1) = e->rate;
    }
  } else if (auto c = std::get_if<Coxian>(&k)) {
    const int n = static_cast<int>(c->rates.size());
    p.alpha = Eigen::VectorXd::Zero(n);
    p.alpha(0) = 1.0;
    p.S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      p.S(i, i) = -c->rates[i];
      if (i + 1 < n) p.S(i, i + 1) = c->cont[i] * c->rates[i];
    }
  } else if (auto g = std::get_if<GeneralPH>(&k)) {
    p = g->ph;
  }
  return p;
}

}  // namespace

DistributionSpec DistributionSpec::exponential(double rate) {
  checkRate(rate, "exponential rate");
  DistributionSpec d(Exponential{rate});
  d.ph_ = buildPh(d.kind_);
  return d;
}

DistributionSpec DistributionSpec::erlang(int phases, double perPhaseRate) {
  if (phases < 1) throw InvalidArgument("Erlang phase count must be >= 1");
  checkRate(perPhaseRate, "Erlang phase rate");
  DistributionSpec d(Erlang{phases, perPhaseRate});
  d.ph_ = buildPh(d.kind_);
  return d;
}

DistributionSpec DistributionSpec::coxian(std::vector<double> rates, std::vector<double> cont) {
  if (rates.empty()) throw InvalidArgument("Coxian needs at least one phase");
  if (cont.size() + 1 != rates.size())
    throw InvalidArgument("Coxian needs one continue probability per phase except the last");
  for (double r : rates) checkRate(r, "Coxian phase rate");
  for (double p : cont)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(fmt::format("Coxian continue probability {} outside [0,1]", p));
  DistributionSpec d(Coxian{std::move(rates), std::move(cont)});
  d.ph_ = buildPh(d.kind_);
  return d;
}

DistributionSpec DistributionSpec::general(Eigen::VectorXd alpha, Eigen::MatrixXd S) {
  PhaseType p{std::move(alpha), std::move(S)};
  checkPh(p);
  DistributionSpec d(GeneralPH{p});
  d.ph_ = p;
  return d;
}

DistributionSpec DistributionSpec::deterministic(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidArgument("deterministic value must be >= 0");
  return DistributionSpec(Deterministic{value});
}

double DistributionSpec::mean() const {
  if (auto d = std::get_if<Deterministic>(&kind_)) return d->value;
  if (auto e = std::get_if<Exponential>(&kind_)) return 1.0 / e->rate;
  if (auto e = std::get_if<Erlang>(&kind_)) return e->phases / e->rate;
  return ph_.mean();
}

PhaseType DistributionSpec::ph() const {
  if (isDeterministic()) throw UnsupportedError("deterministic distributions are only supported by the simulator");
  return ph_;
}

DistributionSpec DistributionSpec::withMean(double m) const {
  if (!(m > 0.0)) throw InvalidArgument("target mean must be positive");
  const double c = mean() / m;
  if (auto d = std::get_if<Deterministic>(&kind_)) return deterministic(m);
  if (auto e = std::get_if<Exponential>(&kind_)) return exponential(e->rate * c);
  if (auto e = std::get_if<Erlang>(&kind_)) return erlang(e->phases, e->rate * c);
  if (auto x = std::get_if<Coxian>(&kind_)) {
    auto r = x->rates;
    for (double& v : r) v *= c;
    return coxian(r, x->cont);
  }
  return general(ph_.alpha, ph_.S * c);
}

double DistributionSpec::sample(std::mt19937_64& rng) const {
  if (auto d = std::get_if<Deterministic>(&kind_)) return d->value;
  if (auto e = std::get_if<Exponential>(&kind_)) return std::exponential_distribution<double>(e->rate)(rng);
  if (auto e = std::get_if<Erlang>(&kind_)) return std::gamma_distribution<double>(e->phases, 1.0 / e->rate)(rng);
  return samplePhases(rng).total;
}

PhaseSample DistributionSpec::samplePhases(std::mt19937_64& rng) const {
  if (auto d = std::get_if<Deterministic>(&kind_)) return {d->value, d->value};
  if (auto e = std::get_if<Exponential>(&kind_)) {
    double x = std::exponential_distribution<double>(e->rate)(rng);
    return {x, x};
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = ph_.order();
  double r = u(rng);
  int phase = -1;
  for (int i = 0; i < n; ++i) {
    r -= ph_.alpha(i);
    if (r < 0.0) {
      phase = i;
      break;
    }
  }
  if (phase < 0) return {0.0, 0.0};
  Eigen::VectorXd ex = ph_.exit();
  double total = 0.0;
  double first = -1.0;
  while (phase >= 0) {
    const double out = -ph_.S(phase, phase);
    total += std::exponential_distribution<double>(out)(rng);
    if (first < 0.0) first = total;
    double pick = u(rng) * out;
    int next = -1;
    for (int j = 0; j < n; ++j) {
      if (j == phase) continue;
      pick -= ph_.S(phase, j);
      if (pick < 0.0) {
        next = j;
        break;
      }
    }
    phase = next;  // -1 means exit
  }
  return {total, first};
}

std::string DistributionSpec::describe() const {
  if (auto d = std::get_if<Deterministic>(&kind_)) return fmt::format("Det({})", d->value);
  if (auto e = std::get_if<Exponential>(&kind_)) return fmt::format("Exp(rate={})", e->rate);
  if (auto e = std::get_if<Erlang>(&kind_)) return fmt::format("Erlang(k={}, rate={})", e->phases, e->rate);
  if (auto c = std::get_if<Coxian>(&kind_)) return fmt::format("Coxian(n={})", c->rates.size());
  return fmt::format("PH(n={})", ph_.order());
}

}  // namespace ttl
