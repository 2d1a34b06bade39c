#pragma once

#include <stdexcept>

namespace pimgemv {

// Invalid hardware description or data format.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problem/plan combination that cannot be placed as requested.
struct PlannerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A command stream violated a hardware invariant. This always indicates a
// trace-generation bug, never a data problem, so it aborts the run.
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pimgemv
