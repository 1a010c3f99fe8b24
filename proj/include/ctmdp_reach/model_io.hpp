#pragma once

#include "ctmdp_reach/ctmdp.hpp"
#include "ctmdp_reach/numeric.hpp"
#include "ctmdp_reach/policy.hpp"
#include "ctmdp_reach/skolem.hpp"

#include <json.hpp>

#include <filesystem>

namespace ctmdp {

using Json = nlohmann::ordered_json;

/// Accepts integers, strings ("3/4", "0.25") and {"num", "den"} objects. Floats are rejected.
Rational rational_from_json(const Json& j);
/// Integer when it fits in 64 bits, otherwise a "p/q" string.
Json rational_to_json(const Rational& r);
/// Decimal string with full working precision.
std::string format_real(const Real& x);

/// States are numbered from 1 in files.
Ctmdp model_from_json(const Json& j);
Json model_to_json(const Ctmdp& model);

SkolemInstance skolem_from_json(const Json& j);
Json skolem_to_json(const SkolemInstance& inst);

Json policy_to_json(const Ctmdp& model, const PiecewisePolicy& policy);
PiecewisePolicy policy_from_json(const Ctmdp& model, const Json& j);

/// Throws Error(ParseError) on unreadable or malformed files.
Json read_json_file(const std::filesystem::path& path);

}  // namespace ctmdp
