#pragma once

#include <stdexcept>
#include <string>

namespace bcluster {

// Malformed or inconsistent input data (bad cells, ragged rows, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller misuse: invalid configuration, empty sample sets, bad ranges.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// A Monte-Carlo estimator could not produce a usable value
// (e.g. zero posterior-mode frequency). Reported, never silently ignored.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bcluster
