// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace mleig {

// Invalid user input or a violated operation precondition (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative or dense solve failed (CLI exit code 3).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File input/output failure (CLI exit code 4).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mleig
