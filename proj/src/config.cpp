#include "ttlcache/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <yaml-cpp/yaml.h>

#include "ttlcache/errors.hpp"

namespace ttl {

namespace {

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) {
  const auto m = n.Mark();
  throw ConfigError(what, m.line + 1, m.column + 1);
}

double num(const YAML::Node& n, const char* key) {
  const YAML::Node v = n[key];
  if (!v) fail(n, std::string("missing key '") + key + "'");
  try {
    return v.as<double>();
  } catch (const YAML::Exception&) {
    fail(v, std::string("'") + key + "' must be a number");
  }
}

std::vector<double> numList(const YAML::Node& n, const char* key) {
  const YAML::Node v = n[key];
  if (!v || !v.IsSequence()) fail(n, std::string("'") + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    try {
      out.push_back(e.as<double>());
    } catch (const YAML::Exception&) {
      fail(e, std::string("'") + key + "' entries must be numbers");
    }
  }
  return out;
}

DistributionSpec parseDist(const YAML::Node& n) {
  if (!n.IsMap()) fail(n, "distribution must be a mapping with a 'type' key");
  if (!n["type"]) fail(n, "distribution needs a 'type'");
  const std::string type = n["type"].as<std::string>();
  try {
    if (type == "exponential" || type == "exp") {
      if (n["rate"]) return DistributionSpec::exponential(num(n, "rate"));
      return DistributionSpec::exponential_mean(num(n, "mean"));
    }
    if (type == "erlang") {
      const double k = num(n, "phases");
      if (k < 1 || k != std::floor(k)) fail(n, "'phases' must be a positive integer");
      if (n["rate"]) return DistributionSpec::erlang(static_cast<int>(k), num(n, "rate"));
      return DistributionSpec::erlang_mean(static_cast<int>(k), num(n, "mean"));
    }
    if (type == "coxian") return DistributionSpec::coxian(numList(n, "rates"), numList(n, "continue"));
    if (type == "ph") {
      auto alpha = numList(n, "alpha");
      const YAML::Node s = n["S"];
      if (!s || !s.IsSequence() || s.size() != alpha.size()) fail(n, "'S' must be a square matrix matching 'alpha'");
      Eigen::MatrixXd S(alpha.size(), alpha.size());
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!s[i].IsSequence() || s[i].size() != alpha.size()) fail(s[i], "'S' rows must match 'alpha'");
        for (std::size_t j = 0; j < alpha.size(); ++j) S(i, j) = s[i][j].as<double>();
      }
      return DistributionSpec::general(Eigen::Map<Eigen::VectorXd>(alpha.data(), alpha.size()), S);
    }
    if (type == "deterministic") return DistributionSpec::deterministic(num(n, "value"));
  } catch (const InvalidArgument& e) {
    fail(n, e.what());
  }
  fail(n["type"], "unknown distribution type '" + type + "'");
}

std::vector<CacheNode> parseNode(const YAML::Node& n, const std::string& fallbackId) {
  if (!n.IsMap()) fail(n, "cache entry must be a mapping");
  static const char* known[] = {"id", "ttl", "delay", "arrival", "children", "count"};
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) fail(kv.first, "unknown key '" + key + "'");
  }
  CacheNode c;
  c.id = n["id"] ? n["id"].as<std::string>() : fallbackId;
  if (!n["ttl"]) fail(n, "cache '" + c.id + "' needs a 'ttl'");
  c.ttl = parseDist(n["ttl"]);
  if (!n["delay"]) fail(n, "cache '" + c.id + "' needs a 'delay'");
  c.delay = parseDist(n["delay"]);
  if (n["arrival"]) c.arrival = parseDist(n["arrival"]);
  if (n["children"]) {
    if (!n["children"].IsSequence()) fail(n["children"], "'children' must be a list");
    int k = 0;
    for (const auto& ch : n["children"]) {
      for (auto& x : parseNode(ch, c.id + "." + std::to_string(k))) c.children.push_back(std::move(x));
      ++k;
    }
  }
  int count = 1;
  if (n["count"]) {
    const double v = num(n, "count");
    if (v < 1 || v != std::floor(v)) fail(n["count"], "'count' must be a positive integer");
    count = static_cast<int>(v);
  }
  std::vector<CacheNode> out;
  if (count == 1) {
    out.push_back(std::move(c));
    return out;
  }
  // Replicated sub-trees get suffixed ids.
  std::function<void(CacheNode&, const std::string&)> suffix = [&](CacheNode& x, const std::string& s) {
    x.id += s;
    for (auto& y : x.children) suffix(y, s);
  };
  for (int i = 0; i < count; ++i) {
    CacheNode copy = c;
    suffix(copy, "#" + std::to_string(i));
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace

CacheTreeSpec parse_tree_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!doc.IsMap() || !doc["tree"]) throw ConfigError("config needs a top-level 'tree' mapping", 1, 1);
  auto nodes = parseNode(doc["tree"], "root");
  if (nodes.size() != 1) fail(doc["tree"], "the root cache cannot have 'count'");
  CacheTreeSpec spec;
  spec.root = std::move(nodes[0]);
  for (const auto& kv : doc) {
    const auto key = kv.first.as<std::string>();
    if (key != "tree" && key != "tau_unit") fail(kv.first, "unknown key '" + key + "'");
  }
  if (doc["tau_unit"]) {
    const double u = num(doc, "tau_unit");
    if (!(u > 0.0 && std::isfinite(u))) fail(doc["tau_unit"], "'tau_unit' must be positive");
    spec.tauUnit = u;
  }
  try {
    validate_tree(spec);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

CacheTreeSpec load_tree_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tree_config(ss.str());
}

std::vector<double> SweepSpec::points() const {
  std::vector<double> p;
  if (stop <= start) return {start};
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) p.push_back(start + static_cast<double>(i) * step);
  return p;
}

SweepSpec parse_sweep(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep must look like tau_delta=start:step:stop");
  SweepSpec s;
  s.variable = text.substr(0, eq);
  if (s.variable != "tau_delta") throw ConfigError("only tau_delta sweeps are supported, got " + s.variable);
  std::vector<double> parts;
  std::stringstream in(text.substr(eq + 1));
  std::string tok;
  while (std::getline(in, tok, ':')) {
    try {
      parts.push_back(std::stod(tok));
    } catch (const std::logic_error&) {
      throw ConfigError("bad sweep number '" + tok + "'");
    }
  }
  for (double v : parts)
    if (!std::isfinite(v)) throw ConfigError("sweep bounds must be finite");
  if (parts.size() == 1) {
    s.start = s.stop = parts[0];
  } else if (parts.size() == 3) {
    s.start = parts[0];
    s.step = parts[1];
    s.stop = parts[2];
    if (!(s.step > 0.0)) throw ConfigError("sweep step must be > 0");
  } else {
    throw ConfigError("sweep must have one value or start:step:stop");
  }
  if (s.start < 0.0) throw ConfigError("tau_delta must be >= 0");
  return s;
}

}  // namespace ttl
