#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttlcache/distribution.hpp"

namespace ttl {

struct FitReport {
  DistributionSpec fittedPH = DistributionSpec::exponential(1.0);
  int phases = 0;
  std::vector<double> logLikelihoodTrace;
  double logLikelihood = 0;
  double aic = 0;
  double bic = 0;
  std::size_t samplesBefore = 0;
  std::size_t samplesAfter = 0;
  double empiricalMean = 0;
  double fittedMean = 0;
  int iterations = 0;
  int restarts = 0;
};

std::vector<double> read_timestamps(const std::string& path);
std::vector<double> interarrivals(const std::vector<double>& timestamps);

struct OutlierResult {
  std::vector<double> kept;
  double lambda = 1.0;  // chosen Box-Cox exponent
  std::size_t removed = 0;
};

// Box-Cox transform with the exponent chosen on the grid -2, -1.5, ..., 2,
// then drops samples with |z| > cutoff.
OutlierResult remove_outliers_detailed(const std::vector<double>& samples, double cutoff = 2.0);
inline std::vector<double> remove_outliers(const std::vector<double>& samples, double cutoff = 2.0) {
  return remove_outliers_detailed(samples, cutoff).kept;
}

// Reorders a Coxian (rates, continue probabilities) to nonincreasing rates
// without changing its distribution.
void coxian_canonical(std::vector<double>& rates, std::vector<double>& cont);

// EM fit of a Coxian with the given number of phases, returned in canonical order.
FitReport fit_ph_em(const std::vector<double>& samples, int phases, int maxIters = 500, double tol = 1e-7,
                    std::uint64_t seed = 1);

// Fits every candidate phase count and returns the BIC minimizer (fewer phases on ties).
FitReport select_phases(const std::vector<double>& samples, const std::vector<int>& candidates, int maxIters = 500,
                        double tol = 1e-7, std::uint64_t seed = 1);

// Density of a phase-type law at x.
double ph_density(const PhaseType& p, double x);

// Key-value text form of a report.
std::string format_report(const FitReport& r);

}  // namespace ttl
