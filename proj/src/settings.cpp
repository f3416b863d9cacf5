#include "ttlcache/settings.hpp"

#include <cstdlib>
#include <sstream>

#include "ttlcache/errors.hpp"

namespace ttl {

NumericSettings parse_numeric_settings(const std::string& spec, NumericSettings s) {
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("numeric setting without '=': " + item);
    auto trim = [](std::string x) {
      const auto a = x.find_first_not_of(" \t");
      const auto b = x.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : x.substr(a, b - a + 1);
    };
    std::string key = trim(item.substr(0, eq));
    std::string val = trim(item.substr(eq + 1));
    try {
      if (key == "row_sum_tol") s.rowSumTol = std::stod(val);
      else if (key == "residual_tol") s.residualTol = std::stod(val);
      else if (key == "condition_limit") s.conditionLimit = std::stod(val);
      else if (key == "state_cap") s.stateCap = std::stoull(val);
      else if (key == "dense_condition_max") s.denseConditionMax = std::stoull(val);
      else if (key == "direct_solve_max") s.directSolveMax = std::stoull(val);
      else throw InvalidArgument("unknown numeric setting: " + key);
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad value for numeric setting " + key + ": " + val);
    }
  }
  return s;
}

const NumericSettings& default_settings() {
  static const NumericSettings s = [] {
    const char* env = std::getenv("TTLCACHE_NUMERICS");
    return env ? parse_numeric_settings(env) : NumericSettings{};
  }();
  return s;
}

}  // namespace ttl
