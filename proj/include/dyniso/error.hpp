#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dyniso {

enum class ErrorKind {
  parameter,
  non_invertible,
  budget_exhausted,
  contract,
  singular,
  batch_too_large,
  oracle_scale,
  search_failure,
  magnitude,
  family_failure,
  domain,
  internal_invariant,
  no_path,
  isolation_failure,
  parse,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::non_invertible: return "non_invertible";
    case ErrorKind::budget_exhausted: return "budget_exhausted";
    case ErrorKind::contract: return "contract";
    case ErrorKind::singular: return "singular";
    case ErrorKind::batch_too_large: return "batch_too_large";
    case ErrorKind::oracle_scale: return "oracle_scale";
    case ErrorKind::search_failure: return "search_failure";
    case ErrorKind::magnitude: return "magnitude";
    case ErrorKind::family_failure: return "family_failure";
    case ErrorKind::domain: return "domain";
    case ErrorKind::internal_invariant: return "internal_invariant";
    case ErrorKind::no_path: return "no_path";
    case ErrorKind::isolation_failure: return "isolation_failure";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so the harness can
// report it as a structured record instead of crashing.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace dyniso
