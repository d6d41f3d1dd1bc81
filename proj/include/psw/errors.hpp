#pragma once

#include <stdexcept>
#include <string>

namespace psw {

// Invalid configuration: conflicting options, bad scheme names, out-of-range
// thresholds. The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unusable input data: missing columns, missing values, non-numeric cells,
// malformed CSV. The CLI maps this to exit code 3.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Model fitting failure: non-convergence, rank deficiency, singular systems,
// degenerate weights. The CLI maps this to exit code 4.
class fit_error : public std::runtime_error {
 public:
  explicit fit_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace psw
