#pragma once

#include <stdexcept>
#include <string>

namespace salmatch {

enum class ErrorCode {
  input,                   // malformed or inconsistent input data
  missing_field,           // instance file lacks a required field
  non_simplex,             // salience row off the simplex by more than the tolerance
  non_permutation,         // preference list or tie-break is not a permutation
  degenerate_perturbation, // normalisation constant T vanishes
  degenerate_instance,     // all attribute vectors coincide
  precondition,            // operation called outside its domain
  unstable_matching,       // matching is not stable where stability is required
  unsupported,             // dimension / norm combination not supported
  guard,                   // oracle-scale size guard exceeded
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::input: return "input";
    case ErrorCode::missing_field: return "missing_field";
    case ErrorCode::non_simplex: return "non_simplex";
    case ErrorCode::non_permutation: return "non_permutation";
    case ErrorCode::degenerate_perturbation: return "degenerate_perturbation";
    case ErrorCode::degenerate_instance: return "degenerate_instance";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::unstable_matching: return "unstable_matching";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::guard: return "guard";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace salmatch
