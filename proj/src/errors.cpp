#include "ttlcache/errors.hpp"

#include <fmt/format.h>

namespace ttl {

CapacityError::CapacityError(std::size_t required, std::size_t allowed)
    : Error("E_CAPACITY",
            fmt::format("state space needs {} states but the cap is {}; enable lumping (--lump on) "
                        "or raise state_cap",
                        required, allowed)),
      required_(required),
      allowed_(allowed) {}

ConfigError::ConfigError(const std::string& what, int line, int column)
    : Error("E_CONFIG", line >= 0 ? fmt::format("line {}, column {}: {}", line, column, what) : what),
      line_(line),
      column_(column) {}

}  // namespace ttl
