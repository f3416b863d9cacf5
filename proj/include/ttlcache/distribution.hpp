#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace ttl {

// Phase-type representation (alpha, S); exit = -S*1. alpha may have mass
// deficit, which is treated as an atom at zero.
struct PhaseType {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd S;

  int order() const { return static_cast<int>(alpha.size()); }
  Eigen::VectorXd exit() const;
  // k-th raw moment, k! * alpha * (-S)^{-k} * 1.
  double moment(int k) const;
  double mean() const { return moment(1); }
};

struct Exponential {
  double rate;
};
struct Erlang {
  int phases;
  double rate;  // per phase
};
struct Coxian {
  std::vector<double> rates;
  std::vector<double> cont;  // size rates.size()-1
};
struct GeneralPH {
  PhaseType ph;
};
struct Deterministic {
  double value;
};

// One sampled PH sojourn: total duration and the time spent in the first
// visited phase.
struct PhaseSample {
  double total;
  double firstPhase;
};

class DistributionSpec {
 public:
  using Kind = std::variant<Exponential, Erlang, Coxian, GeneralPH, Deterministic>;

  static DistributionSpec exponential(double rate);
  static DistributionSpec exponential_mean(double mean) { return exponential(1.0 / mean); }
  static DistributionSpec erlang(int phases, double perPhaseRate);
  static DistributionSpec erlang_mean(int phases, double mean) { return erlang(phases, phases / mean); }
  static DistributionSpec coxian(std::vector<double> rates, std::vector<double> cont);
  static DistributionSpec general(Eigen::VectorXd alpha, Eigen::MatrixXd S);
  static DistributionSpec deterministic(double value);

  const Kind& kind() const { return kind_; }
  bool isPhaseType() const { return !std::holds_alternative<Deterministic>(kind_); }
  bool isExponential() const { return std::holds_alternative<Exponential>(kind_); }
  bool isDeterministic() const { return std::holds_alternative<Deterministic>(kind_); }

  double mean() const;
  double rate() const { return 1.0 / mean(); }
  // Throws UnsupportedError for Deterministic.
  PhaseType ph() const;
  // Same shape with every rate multiplied so that the mean becomes m.
  DistributionSpec withMean(double m) const;

  double sample(std::mt19937_64& rng) const;
  PhaseSample samplePhases(std::mt19937_64& rng) const;

  std::string describe() const;

 private:
  explicit DistributionSpec(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
  PhaseType ph_;  // cached for PH kinds
};

}  // namespace ttl
