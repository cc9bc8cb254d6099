#pragma once

#include <stdexcept>
#include <string>

namespace vafuse {

// Error taxonomy mirrored by CLI exit codes: config=2, data=3, transport=4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vafuse
