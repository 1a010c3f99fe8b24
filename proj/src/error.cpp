#include "ctmdp_reach/error.hpp"

namespace ctmdp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AbsorbingSource: return "AbsorbingSource";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::IdenticallyZero: return "IdenticallyZero";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::OrderCapExceeded: return "OrderCapExceeded";
    case ErrorCode::AmbiguousSimultaneity: return "AmbiguousSimultaneity";
    case ErrorCode::MaxSwitchesExceeded: return "MaxSwitchesExceeded";
    case ErrorCode::TooManyVectors: return "TooManyVectors";
    case ErrorCode::DegenerateGamma: return "DegenerateGamma";
    case ErrorCode::AllMomentsZero: return "AllMomentsZero";
    case ErrorCode::TrivialInstance: return "TrivialInstance";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ctmdp
