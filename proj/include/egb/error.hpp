// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace egb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed case file content. Carries the case id (may be empty when the
/// failure happens before the id is known) and the offending field path.
class ParseError : public Error {
 public:
  ParseError(std::string case_id, std::string field, const std::string& what)
      : Error("case '" + case_id + "' field '" + field + "': " + what),
        case_id_(std::move(case_id)),
        field_(std::move(field)) {}

  const std::string& case_id() const noexcept { return case_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string case_id_;
  std::string field_;
};

/// One or more invariant violations. The message joins them; the list is
/// kept for callers that want to inspect each one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "validation failed:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

class UnresolvedReferenceError : public Error {
 public:
  using Error::Error;
};

/// Value could not be interpreted under its semantic type. The simulator
/// converts this into a mismatch.
class CanonicalizationError : public Error {
 public:
  using Error::Error;
};

/// The action names a tool outside the case toolset (harness misuse).
class UnknownToolError : public Error {
 public:
  using Error::Error;
};

class PolicyUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Backend cannot provide index probabilities (caller may fall back to sampling).
class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

class DegenerateDistributionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace egb
