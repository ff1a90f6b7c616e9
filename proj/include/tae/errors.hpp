#pragma once

#include <stdexcept>
#include <string>

namespace tae {

// CLI exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// CLI exit code 2: missing/corrupt files, empty strata, bad manifests.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// CLI exit code 3: NaN losses and other numeric breakdowns.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tae
