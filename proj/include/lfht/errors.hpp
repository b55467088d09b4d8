#pragma once

#include <stdexcept>
#include <string>

namespace lfht {

/// Invalid parameters for a distribution or instance constructor.
struct ConstructionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inputs violate an operation's precondition (sizes, alphabets, kinds).
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Density estimates that coincide, so no geodesic or clamp can be formed.
struct DegenerateEstimates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed config, JSON document or sample file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

}  // namespace lfht
