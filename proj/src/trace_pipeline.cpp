#include "ttlcache/trace_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <numeric>
#include <random>
#include <spdlog/spdlog.h>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "ttlcache/errors.hpp"

namespace ttl {

std::vector<double> read_timestamps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open trace file " + path);
  std::vector<double> ts;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    try {
      ts.push_back(std::stod(line.substr(pos)));
    } catch (const std::logic_error&) {
      throw ConfigError("not a number: " + line, lineNo, static_cast<int>(pos) + 1);
    }
  }
  return ts;
}

std::vector<double> interarrivals(const std::vector<double>& ts) {
  if (ts.size() < 2) throw InvalidArgument("need at least two timestamps");
  std::vector<double> d(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ts[i] < ts[i - 1]) throw InvalidArgument(fmt::format("timestamps not sorted at index {}", i));
    d[i - 1] = ts[i] - ts[i - 1];
  }
  return d;
}

OutlierResult remove_outliers_detailed(const std::vector<double>& samples, double cutoff) {
  if (samples.empty()) throw InvalidArgument("no samples");
  OutlierResult out;
  std::vector<double> x = samples;
  double minPos = INFINITY;
  for (double v : x) {
    if (v < 0.0) throw InvalidArgument("negative sample");
    if (v > 0.0) minPos = std::min(minPos, v);
  }
  if (!std::isfinite(minPos)) {
    out.kept = x;
    return out;
  }
  std::size_t zeros = 0;
  for (double& v : x)
    if (v == 0.0) {
      v = minPos * 1e-6;
      ++zeros;
    }
  if (zeros) spdlog::info("{} zero samples offset to {:.3g} for the power transform", zeros, minPos * 1e-6);

  const double n = static_cast<double>(x.size());
  double sumLog = 0.0;
  for (double v : x) sumLog += std::log(v);
  auto transform = [](double v, double lam) { return lam == 0.0 ? std::log(v) : (std::pow(v, lam) - 1.0) / lam; };
  auto meanVar = [&](double lam) {
    double m = 0.0;
    for (double v : x) m += transform(v, lam);
    m /= n;
    double s = 0.0;
    for (double v : x) {
      const double d = transform(v, lam) - m;
      s += d * d;
    }
    return std::pair{m, s / n};
  };
  double bestLam = 1.0, bestLl = -INFINITY;
  for (int i = -4; i <= 4; ++i) {
    const double lam = 0.5 * i;
    auto [m, var] = meanVar(lam);
    if (!(var > 0.0) || !std::isfinite(var)) continue;
    const double ll = -0.5 * n * std::log(var) + (lam - 1.0) * sumLog;
    if (ll > bestLl) {
      bestLl = ll;
      bestLam = lam;
    }
  }
  out.lambda = bestLam;
  auto [m, var] = meanVar(bestLam);
  const double sd = std::sqrt(var * n / std::max(1.0, n - 1.0));
  if (!(sd > 0.0) || !std::isfinite(cutoff)) {
    out.kept = x;
    return out;
  }
  for (double v : x) {
    const double z = (transform(v, bestLam) - m) / sd;
    if (std::abs(z) <= cutoff) out.kept.push_back(v);
    else ++out.removed;
  }
  return out;
}

double ph_density(const PhaseType& p, double x) {
  Eigen::MatrixXd e = (p.S * x).exp();
  return p.alpha.dot(e * p.exit());
}

namespace {

struct Cox {
  std::vector<double> rate;
  std::vector<double> cont;
};

PhaseType toPh(const Cox& c) { return DistributionSpec::coxian(c.rate, c.cont).ph(); }

struct EStep {
  double loglik = 0.0;
  Cox next;
  bool finite = true;
};

// One EM iteration on a Coxian, with E-step integrals by uniformization.
EStep emStep(const Cox& cox, const std::vector<double>& y) {
  const PhaseType ph = toPh(cox);
  const int p = ph.order();
  const Eigen::VectorXd s0 = ph.exit();
  double q = 0.0;
  for (int i = 0; i < p; ++i) q = std::max(q, -ph.S(i, i));
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(p, p) + ph.S / q;

  const double ymax = *std::max_element(y.begin(), y.end());
  const double qm = q * ymax;
  const int nmax = static_cast<int>(std::ceil(qm + 10.0 * std::sqrt(qm) + 25.0)) + 1;
  std::vector<Eigen::VectorXd> beta(nmax + 1), gamma(nmax + 1);
  beta[0] = s0;
  gamma[0] = ph.alpha;
  for (int n = 1; n <= nmax; ++n) {
    beta[n] = P * beta[n - 1];
    gamma[n] = P.transpose() * gamma[n - 1];
  }
  std::vector<double> h(nmax + 1);
  for (int n = 0; n <= nmax; ++n) h[n] = ph.alpha.dot(beta[n]);

  EStep out;
  std::vector<double> V(nmax + 2, 0.0);
  std::vector<double> w;
  for (double yk : y) {
    const double m = q * yk;
    int lo = 0, hi = nmax;
    if (m > 0.0) {
      lo = std::max(0, static_cast<int>(std::floor(m - 10.0 * std::sqrt(m) - 25.0)));
      hi = std::min(nmax, static_cast<int>(std::ceil(m + 10.0 * std::sqrt(m) + 25.0)));
    } else {
      hi = 0;
    }
    w.assign(hi - lo + 1, 0.0);
    double f = 0.0;
    for (int n = lo; n <= hi; ++n) {
      const double lw = m > 0.0 ? n * std::log(m) - m - std::lgamma(n + 1.0) : (n == 0 ? 0.0 : -INFINITY);
      w[n - lo] = std::exp(lw);
      f += w[n - lo] * h[n];
    }
    if (!(f > 0.0) || !std::isfinite(f)) {
      out.finite = false;
      return out;
    }
    out.loglik += std::log(f);
    for (int n = lo; n <= hi; ++n) V[n] += w[n - lo] / f;
  }

  Eigen::VectorXd B = Eigen::VectorXd::Zero(p), exitW = Eigen::VectorXd::Zero(p);
  for (int n = 0; n <= nmax; ++n) {
    if (V[n] == 0.0) continue;
    B += V[n] * beta[n];
    exitW += V[n] * gamma[n];
  }
  // C = (1/q) sum_a beta_a g_a^T with g_a = sum_b V[a+b+1] gamma_b.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < nmax; ++a) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    for (int b = 0; a + b + 1 <= nmax; ++b)
      if (V[a + b + 1] != 0.0) g += V[a + b + 1] * gamma[b];
    C += beta[a] * g.transpose();
  }
  C /= q;

  out.next = cox;
  for (int i = 0; i < p; ++i) {
    const double Z = C(i, i);
    const double exitJumps = s0(i) * exitW(i);
    const double moveJumps = i + 1 < p ? ph.S(i, i + 1) * C(i + 1, i) : 0.0;
    if (!(Z > 0.0)) {
      out.finite = false;
      return out;
    }
    const double total = exitJumps + moveJumps;
    out.next.rate[i] = total / Z;
    if (i + 1 < p) out.next.cont[i] = total > 0.0 ? moveJumps / total : 0.0;
  }
  for (double r : out.next.rate)
    if (!(r > 0.0) || !std::isfinite(r)) out.finite = false;
  return out;
}

}  // namespace

void coxian_canonical(std::vector<double>& rates, std::vector<double>& cont) {
  if (cont.size() + 1 != rates.size()) throw InvalidArgument("coxian needs one continue probability fewer than rates");
  const std::size_t n = rates.size();
  // Adjacent swap of phases i, i+1 when the later one is faster keeps the law.
  for (std::size_t pass = 0; pass < n; ++pass)
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(rates[i + 1] > rates[i])) continue;
      const double pi = cont[i], pj = i + 1 < cont.size() ? cont[i + 1] : 0.0;
      const double np = 1.0 - (1.0 - pi) * rates[i] / rates[i + 1];
      std::swap(rates[i], rates[i + 1]);
      cont[i] = np;
      if (i + 1 < cont.size()) cont[i + 1] = np > 0.0 ? std::min(1.0, pi * pj / np) : 0.0;
    }
}

FitReport fit_ph_em(const std::vector<double>& samples, int phases, int maxIters, double tol, std::uint64_t seed) {
  if (phases < 1) throw InvalidArgument("phase count must be >= 1");
  if (samples.empty()) throw InvalidArgument("no samples to fit");
  for (double v : samples)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("EM fitting needs positive finite samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::mt19937_64 rng(seed);

  FitReport rep;
  rep.phases = phases;
  rep.samplesBefore = rep.samplesAfter = samples.size();
  rep.empiricalMean = mean;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    Cox cox;
    cox.rate.assign(phases, phases / mean);
    cox.cont.assign(phases - 1, 0.5);
    if (attempt > 0) {
      std::uniform_real_distribution<double> u(0.5, 1.5);
      for (double& r : cox.rate) r *= u(rng);
    }
    rep.logLikelihoodTrace.clear();
    bool ok = true;
    int it = 0;
    for (; it < maxIters; ++it) {
      EStep e = emStep(cox, samples);
      if (!e.finite) {
        ok = false;
        break;
      }
      rep.logLikelihoodTrace.push_back(e.loglik);
      cox = e.next;
      const auto& t = rep.logLikelihoodTrace;
      if (t.size() >= 2 && std::abs(t.back() - t[t.size() - 2]) < tol) break;
    }
    if (!ok) {
      rep.restarts = attempt + 1;
      continue;
    }
    // Likelihood at the final parameters.
    EStep last = emStep(cox, samples);
    if (!last.finite) {
      rep.restarts = attempt + 1;
      continue;
    }
    rep.logLikelihoodTrace.push_back(last.loglik);
    rep.iterations = it;
    rep.restarts = attempt;
    coxian_canonical(cox.rate, cox.cont);
    rep.fittedPH = DistributionSpec::coxian(cox.rate, cox.cont);
    rep.fittedMean = rep.fittedPH.mean();
    rep.logLikelihood = last.loglik;
    const double k = 2.0 * phases - 1.0;
    rep.aic = 2.0 * k - 2.0 * rep.logLikelihood;
    rep.bic = k * std::log(static_cast<double>(samples.size())) - 2.0 * rep.logLikelihood;
    return rep;
  }
  throw NumericalError(fmt::format("EM fit with {} phases failed after 5 restarts", phases));
}

FitReport select_phases(const std::vector<double>& samples, const std::vector<int>& candidates, int maxIters,
                        double tol, std::uint64_t seed) {
  if (candidates.empty()) throw InvalidArgument("no candidate phase counts");
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  bool have = false;
  FitReport best;
  std::string lastErr;
  for (int k : sorted) {
    try {
      FitReport r = fit_ph_em(samples, k, maxIters, tol, seed);
      if (!have || r.bic < best.bic) {
        best = r;
        have = true;
      }
    } catch (const Error& e) {
      lastErr = e.what();
      spdlog::warn("fit with {} phases failed: {}", k, e.what());
    }
  }
  if (!have) throw NumericalError("all candidate fits failed: " + lastErr);
  return best;
}

std::string format_report(const FitReport& r) {
  std::ostringstream o;
  const PhaseType ph = r.fittedPH.ph();
  o << "phases: " << r.phases << "\n";
  o << "rates: [";
  for (int i = 0; i < ph.order(); ++i) o << (i ? ", " : "") << fmt::format("{:.9g}", -ph.S(i, i));
  o << "]\ncontinue: [";
  for (int i = 0; i + 1 < ph.order(); ++i) o << (i ? ", " : "") << fmt::format("{:.9g}", ph.S(i, i + 1) / -ph.S(i, i));
  o << "]\n";
  o << fmt::format("log_likelihood: {:.9g}\naic: {:.9g}\nbic: {:.9g}\n", r.logLikelihood, r.aic, r.bic);
  o << fmt::format("samples_before: {}\nsamples_after: {}\n", r.samplesBefore, r.samplesAfter);
  o << fmt::format("empirical_mean: {:.9g}\nfitted_mean: {:.9g}\n", r.empiricalMean, r.fittedMean);
  o << fmt::format("iterations: {}\nrestarts: {}\n", r.iterations, r.restarts);
  o << "log_likelihood_trace: [";
  for (std::size_t i = 0; i < r.logLikelihoodTrace.size(); ++i)
    o << (i ? ", " : "") << fmt::format("{:.12g}", r.logLikelihoodTrace[i]);
  o << "]\n";
  return o.str();
}

}  // namespace ttl
