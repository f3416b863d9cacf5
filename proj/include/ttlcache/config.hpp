#pragma once

#include <string>

#include "ttlcache/tree.hpp"

namespace ttl {

// YAML tree configuration; see configs/README.md for the schema.
CacheTreeSpec parse_tree_config(const std::string& text);
CacheTreeSpec load_tree_config(const std::string& path);

struct SweepSpec {
  std::string variable;
  double start = 0;
  double step = 1;
  double stop = 0;
  std::vector<double> points() const;
};

// "tau_delta=a:b:c" (start:step:stop) or "tau_delta=v".
SweepSpec parse_sweep(const std::string& text);

}  // namespace ttl
