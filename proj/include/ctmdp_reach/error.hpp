#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctmdp {

enum class ErrorCode {
  ParseError,
  InvalidArgument,
  AbsorbingSource,
  IllConditioned,
  IdenticallyZero,
  BudgetExceeded,
  OrderCapExceeded,
  AmbiguousSimultaneity,
  MaxSwitchesExceeded,
  TooManyVectors,
  DegenerateGamma,
  AllMomentsZero,
  TrivialInstance,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the named failure kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ctmdp
