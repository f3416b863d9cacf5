// ttlcache: command-line front end. Tree configs in, CSV tables out.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <random>
#include <limits>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <thread>

#include "ttlcache/approximation.hpp"
#include "ttlcache/config.hpp"
#include "ttlcache/errors.hpp"
#include "ttlcache/hierarchy.hpp"
#include "ttlcache/lumping.hpp"
#include "ttlcache/metrics.hpp"
#include "ttlcache/simulator.hpp"
#include "ttlcache/trace_pipeline.hpp"

namespace {

using namespace ttl;

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.9g}", v) : std::string(); }

struct Options {
  std::string config;
  std::string sweep;
  std::string out;
  std::string lump = "auto";
  std::string strategy = "renewal";
  std::string numerics;
  std::uint64_t requests = 1000000;
  int replications = 1;
  std::optional<std::uint64_t> seed;
  int phases = 0;
  int maxPhases = 12;
  std::string trace;
  std::string density;
  double tauT = 0;
  bool search = false;
  int maxN = 10;
  int jobs = 0;
};

NumericSettings numerics(const Options& o) {
  return o.numerics.empty() ? default_settings() : parse_numeric_settings(o.numerics, default_settings());
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw InvalidArgument("cannot write " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

// Sweep values; without --sweep the config is used as written (nullopt).
std::vector<std::optional<double>> sweepPoints(const Options& o) {
  if (o.sweep.empty()) return {std::nullopt};
  std::vector<std::optional<double>> p;
  for (double v : parse_sweep(o.sweep).points()) p.emplace_back(v);
  return p;
}

CacheTreeSpec at(const CacheTreeSpec& spec, std::optional<double> tau) {
  return tau ? with_delay_ratio(spec, *tau) : spec;
}

// The tau column for a config used as written: root link delay over the reference gap.
double tauOf(const CacheTreeSpec& spec, std::optional<double> tau) {
  return tau ? *tau : spec.root.delay.mean() / reference_interarrival(spec);
}

// Runs f over the sweep on a small pool; rows come back in sweep order.
template <class F>
std::vector<std::string> runSweep(const std::vector<std::optional<double>>& pts, int jobs, F f) {
  const std::size_t workers =
      std::max<std::size_t>(1, jobs > 0 ? static_cast<std::size_t>(jobs) : std::thread::hardware_concurrency());
  std::vector<std::string> rows(pts.size());
  std::size_t next = 0;
  while (next < pts.size()) {
    std::vector<std::future<std::string>> batch;
    for (std::size_t k = 0; k < workers && next < pts.size(); ++k, ++next)
      batch.push_back(std::async(std::launch::async, f, pts[next]));
    const std::size_t base = next - batch.size();
    for (std::size_t k = 0; k < batch.size(); ++k) rows[base + k] = batch[k].get();
  }
  return rows;
}

bool useLumping(const Options& o, const CacheTreeSpec& spec) {
  if (o.lump == "on") return true;
  if (o.lump == "off") return false;
  return projected_state_count(spec) > 10000;
}

int cmdAnalyze(const Options& o) {
  const CacheTreeSpec spec = load_tree_config(o.config);
  BuildOptions b;
  b.numerics = numerics(o);
  b.lumpPerLevel = useLumping(o, spec);
  const double rate = total_request_rate(spec);
  const double p0 = hit_probability(build_tree(with_delay_ratio(spec, 0.0), b), rate, b.numerics);
  auto rows = runSweep(sweepPoints(o), o.jobs, [&](std::optional<double> tau) {
    const CacheTreeSpec s = at(spec, tau);
    const LabeledMap m = build_tree(s, b);
    const double p = hit_probability(m, rate, b.numerics);
    return fmt::format("{},{},{},{},{}", num(tauOf(spec, tau)), num(p), num(1.0 - p / p0), projected_state_count(s),
                       m.size());
  });
  Output out(o.out);
  out.os() << "tau_delta,p_hit_exact,eta,states_original,states_lumped\n";
  for (const auto& r : rows) out.os() << r << "\n";
  return 0;
}

int cmdSimulate(const Options& o) {
  const CacheTreeSpec spec = load_tree_config(o.config);
  const std::uint64_t seed = o.seed ? *o.seed : std::random_device{}();
  if (!o.seed) spdlog::info("no --seed given, using {}", seed);
  if (o.replications < 1) throw InvalidArgument("--replications must be >= 1");
  // Sweep points run one after another; replications already use the cores.
  auto rows = runSweep(sweepPoints(o), 1, [&](std::optional<double> tau) {
    const CacheTreeSpec s = at(spec, tau);
    SimConfig c;
    c.spec = s;
    c.requestBudget = o.requests;
    c.seed = seed;
    c.replications = o.replications;
    const SimEstimate e = simulate(c);
    double exact = NAN;
    try {
      BuildOptions b;
      b.numerics = numerics(o);
      b.lumpPerLevel = useLumping(o, s);
      exact = tree_hit_probability(s, b);
    } catch (const Error& err) {
      spdlog::debug("no exact value: {}", err.what());
    }
    return fmt::format("{},{},{},{},{},{},{},{}", num(tauOf(spec, tau)), num(e.pHit), num(e.halfWidth95), num(exact),
                       e.requestCount, e.originFetchCount, o.replications, seed);
  });
  Output out(o.out);
  out.os() << "tau_delta,p_hit_sim,ci_half_width,p_hit_exact,requests,origin_fetches,replications,seed\n";
  for (const auto& r : rows) out.os() << r << "\n";
  return 0;
}

int cmdApprox(const Options& o) {
  const CacheTreeSpec spec = load_tree_config(o.config);
  SuperposeStrategy st;
  if (o.strategy == "renewal") st = SuperposeStrategy::Renewal;
  else if (o.strategy == "poisson") st = SuperposeStrategy::Poisson;
  else throw InvalidArgument("--strategy must be renewal or poisson");
  auto rows = runSweep(sweepPoints(o), o.jobs, [&](std::optional<double> tau) {
    const CacheTreeSpec s = at(spec, tau);
    const SystemApproxResult a = hierarchy_approx(s, st);
    double exact = NAN;
    try {
      BuildOptions b;
      b.numerics = numerics(o);
      b.lumpPerLevel = useLumping(o, s);
      exact = tree_hit_probability(s, b);
    } catch (const Error& err) {
      spdlog::debug("no exact value: {}", err.what());
    }
    return fmt::format("{},{},{},{},{}", num(tauOf(spec, tau)), num(a.pHitSys), num(exact), o.strategy,
                       a.fallbackUsed ? 1 : 0);
  });
  Output out(o.out);
  out.os() << "tau_delta,p_hit_approx,p_hit_exact,strategy,fallback\n";
  for (const auto& r : rows) out.os() << r << "\n";
  return 0;
}

int cmdLumpStats(const Options& o) {
  const CacheTreeSpec spec = load_tree_config(o.config);
  validate_for_exact(spec);
  if (o.maxN < 1) throw InvalidArgument("--max-n must be >= 1");
  const SubtreeCounts c = subtree_state_counts(spec.root);
  Output out(o.out);
  out.os() << "n,raw_states,lumped_states,lump_plus_states\n";
  std::uint64_t raw = 1;
  bool rawOverflow = false;
  for (int n = 1; n <= o.maxN; ++n) {
    if (!rawOverflow && raw > std::numeric_limits<std::uint64_t>::max() / c.raw) rawOverflow = true;
    if (!rawOverflow) raw *= c.raw;
    const std::string rawText = rawOverflow ? "overflow" : std::to_string(raw);
    auto count = [&](std::uint64_t m) {
      try {
        return std::to_string(partition_count(m, static_cast<std::uint64_t>(n)));
      } catch (const OverflowError&) {
        return std::string("overflow");
      }
    };
    out.os() << n << "," << rawText << "," << count(c.raw) << "," << count(c.lumpPlus) << "\n";
  }
  return 0;
}

int cmdFitTrace(const Options& o) {
  if (o.trace.empty()) throw InvalidArgument("fit-trace needs --trace <timestamps file>");
  const auto ts = read_timestamps(o.trace);
  const auto gaps = interarrivals(ts);
  const OutlierResult cleaned = remove_outliers_detailed(gaps);
  std::vector<double> kept;
  for (double v : cleaned.kept)
    if (v > 0.0) kept.push_back(v);
  if (kept.size() < 2) throw InvalidArgument("too few positive inter-arrival times after cleaning");
  const std::uint64_t seed = o.seed.value_or(1);
  FitReport r;
  if (o.phases > 0) {
    r = fit_ph_em(kept, o.phases, 500, 1e-7, seed);
  } else {
    std::vector<int> cands;
    for (int k = 1; k <= o.maxPhases; ++k) cands.push_back(k);
    r = select_phases(kept, cands, 500, 1e-7, seed);
  }
  r.samplesBefore = gaps.size();
  r.samplesAfter = kept.size();
  {
    Output out(o.out);
    out.os() << format_report(r);
    out.os() << fmt::format("box_cox_lambda: {:.9g}\nseed: {}\n", cleaned.lambda, seed);
  }
  if (!o.density.empty()) {
    std::vector<double> sorted = kept;
    std::sort(sorted.begin(), sorted.end());
    const double hi = sorted[static_cast<std::size_t>(0.99 * static_cast<double>(sorted.size() - 1))];
    constexpr int kBins = 40;
    const double w = hi / kBins;
    std::vector<double> counts(kBins, 0.0);
    for (double v : kept)
      if (v < hi) counts[std::min(kBins - 1, static_cast<int>(v / w))] += 1.0;
    std::ofstream d(o.density, std::ios::binary);
    if (!d) throw InvalidArgument("cannot write " + o.density);
    const PhaseType ph = r.fittedPH.ph();
    d << "x,empirical_density,fitted_density\n";
    for (int i = 0; i < kBins; ++i) {
      const double x = (i + 0.5) * w;
      d << num(x) << "," << num(counts[i] / (static_cast<double>(kept.size()) * w)) << "," << num(ph_density(ph, x))
        << "\n";
    }
  }
  return 0;
}

int cmdBound(const Options& o) {
  if (!(o.tauT > 0.0)) throw InvalidArgument("bound needs --tau-t > 0");
  Output out(o.out);
  const double plus = delay_upper_bound(o.tauT);
  if (!o.search) {
    out.os() << "tau_t,tau_delta_plus\n" << num(o.tauT) << "," << num(plus) << "\n";
    return 0;
  }
  // Near-periodic requests: Erlang-20 with unit mean, exponential TTL and delay.
  const CacheTreeSpec spec =
      single_cache_tree(DistributionSpec::erlang_mean(20, 1.0), DistributionSpec::exponential_mean(o.tauT),
                        DistributionSpec::exponential(1.0));
  BuildOptions b;
  b.numerics = numerics(o);
  const OptimalDelay d = optimal_delay(spec, 0.0, std::max(2.0, 2.0 * plus), 1e-3, b);
  out.os() << "tau_t,tau_delta_plus,delta_star,p_hit_max,kappa\n"
           << num(o.tauT) << "," << num(plus) << "," << num(d.deltaStar) << "," << num(d.pHitMax) << ","
           << num(d.kappa) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("ttlcache"));
  spdlog::set_level(spdlog::level::warn);
  CLI::App app{"TTL cache hierarchies with object fetch delays"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");
  app.add_option("--numerics", o.numerics, "numeric overrides, e.g. state_cap=500000,residual_tol=1e-9");

  auto addTreeOpts = [&](CLI::App* c) {
    c->add_option("--config", o.config, "tree config (YAML)")->required()->check(CLI::ExistingFile);
    c->add_option("--sweep", o.sweep, "tau_delta=start:step:stop");
    c->add_option("--out", o.out, "CSV output path (default stdout)");
    c->add_option("--jobs", o.jobs, "worker threads for the sweep (default: all cores)");
  };
  auto* analyze = app.add_subcommand("analyze", "exact hit probability over a delay sweep");
  addTreeOpts(analyze);
  analyze->add_option("--lump", o.lump, "per-level lumping")->check(CLI::IsMember({"on", "off", "auto"}));

  auto* sim = app.add_subcommand("simulate", "discrete-event simulation over a delay sweep");
  addTreeOpts(sim);
  sim->add_option("--requests", o.requests, "requests per replication, warmup included");
  sim->add_option("--replications", o.replications, "independent replications");
  sim->add_option("--seed", o.seed, "random seed (generated and reported when absent)");
  sim->add_option("--lump", o.lump, "lumping for the exact reference column")->check(CLI::IsMember({"on", "off", "auto"}));

  auto* approx = app.add_subcommand("approx", "renewal approximation over a delay sweep");
  addTreeOpts(approx);
  approx->add_option("--strategy", o.strategy, "superposition of child streams")
      ->check(CLI::IsMember({"renewal", "poisson"}));
  approx->add_option("--lump", o.lump, "lumping for the exact reference column")->check(CLI::IsMember({"on", "off", "auto"}));

  auto* lump = app.add_subcommand("lump-stats", "state counts for n copies of the configured sub-tree");
  lump->add_option("--config", o.config, "sub-tree config (YAML)")->required()->check(CLI::ExistingFile);
  lump->add_option("--max-n", o.maxN, "largest number of copies");
  lump->add_option("--out", o.out, "CSV output path (default stdout)");

  auto* fit = app.add_subcommand("fit-trace", "Coxian EM fit of request inter-arrival times");
  fit->add_option("--trace", o.trace, "file with one timestamp per line")->required();
  fit->add_option("--phases", o.phases, "fixed phase count (default: BIC over 1..max-phases)");
  fit->add_option("--max-phases", o.maxPhases, "largest phase count tried");
  fit->add_option("--out", o.out, "report path (default stdout)");
  fit->add_option("--density", o.density, "CSV with empirical and fitted densities");
  fit->add_option("--seed", o.seed, "seed for EM restarts");

  auto* bound = app.add_subcommand("bound", "largest harmless delay for near-periodic requests");
  bound->add_option("--tau-t", o.tauT, "normalized mean TTL")->required();
  bound->add_flag("--search", o.search, "also search the best delay on an Erlang-20 request stream");
  bound->add_option("--out", o.out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[E_USAGE]: " << e.what() << "\n";
    return 2;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*analyze) return cmdAnalyze(o);
    if (*sim) return cmdSimulate(o);
    if (*approx) return cmdApprox(o);
    if (*lump) return cmdLumpStats(o);
    if (*fit) return cmdFitTrace(o);
    if (*bound) return cmdBound(o);
  } catch (const Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
