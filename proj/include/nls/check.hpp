#pragma once

#include <stdexcept>
#include <string>

namespace nls {

// Precondition violations (bad arguments, malformed config) throw
// std::invalid_argument; numerical failures (non-convergence, blowup,
// certification failures) throw std::runtime_error.

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void ensure(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace nls
