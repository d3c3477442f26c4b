#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace synten {

/// Violated precondition on an argument (shape, range, mode).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but mathematically degenerate (zero norm, zero variance).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Ingestion failure. Carries every offending `file:line: message` location.
class DataError : public std::runtime_error {
 public:
  explicit DataError(std::vector<std::string> locations)
      : std::runtime_error(join(locations)), locations_(std::move(locations)) {}

  const std::vector<std::string>& locations() const noexcept { return locations_; }

 private:
  static std::string join(const std::vector<std::string>& locs) {
    if (locs.empty()) return "data error";
    std::string out = locs.front();
    if (locs.size() > 1) out += " (+" + std::to_string(locs.size() - 1) + " more)";
    return out;
  }

  std::vector<std::string> locations_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace synten
