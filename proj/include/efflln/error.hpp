#pragma once

#include <stdexcept>
#include <string>

namespace efflln {

/// Base for every error raised by a violated precondition or an impossible
/// request. The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A comparison between approximated reals stayed ambiguous after refining
/// to the full precision budget.
class UndecidedComparison : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A configured size cap (DP length, sampling length, search bound) was hit.
class CapExceeded : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Raised for malformed manifests, sequence files, and argument values.
class FormatError : public DomainError {
 public:
  using DomainError::DomainError;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace efflln
