#pragma once

#include <stdexcept>

namespace longmatch {

/// Input data or precondition violation (bad CSV row, unknown id,
/// degenerate statistics). The CLI maps this to exit code 3.
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or stream failure. CLI exit code 5.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative fit did not converge where convergence is required.
/// CLI exit code 4. Library fits report `converged = false` instead of
/// throwing; only command-level wrappers raise this.
class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace longmatch
