#pragma once

#include <stdexcept>
#include <string>

namespace ifest {

// Domain-specific error types. All derive from std::runtime_error so callers
// can catch coarsely; the CLI maps each family to a distinct exit code.

struct EmptySample : std::runtime_error {
  explicit EmptySample(const std::string& msg) : std::runtime_error(msg) {}
};

struct OutOfDomain : std::runtime_error {
  explicit OutOfDomain(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadBandwidth : std::runtime_error {
  explicit BadBandwidth(const std::string& msg) : std::runtime_error(msg) {}
};

struct IndexOutOfRange : std::runtime_error {
  explicit IndexOutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyGrid : std::runtime_error {
  explicit EmptyGrid(const std::string& msg) : std::runtime_error(msg) {}
};

struct TooFewSamples : std::runtime_error {
  explicit TooFewSamples(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridTooLarge : std::runtime_error {
  explicit GridTooLarge(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateCase : std::runtime_error {
  explicit DegenerateCase(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadExponents : std::runtime_error {
  explicit BadExponents(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadAlpha : std::runtime_error {
  explicit BadAlpha(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ifest
