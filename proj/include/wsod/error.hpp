#pragma once

#include <stdexcept>
#include <string>

namespace wsod {

// Invalid input: bad schema, broken invariant, out-of-range config value.
// The CLI maps this to exit code 1; any other failure exits 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wsod
