#include "ctmdp_reach/model_io.hpp"

#include "ctmdp_reach/error.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace ctmdp {

namespace {

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

Integer integer_from_json(const Json& j) {
  if (j.is_number_integer()) return j.is_number_unsigned() ? Integer(j.get<std::uint64_t>()) : Integer(j.get<std::int64_t>());
  if (j.is_string()) {
    Rational r = parse_rational(j.get<std::string>());
    if (boost::multiprecision::denominator(r) != 1) parse_error("expected an integer, got " + j.get<std::string>());
    return boost::multiprecision::numerator(r);
  }
  parse_error("expected an integer, got " + j.dump());
}

std::size_t state_from_json(const Json& j, const char* what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 1)
    parse_error(std::string(what) + " must be a positive integer state number");
  return static_cast<std::size_t>(j.get<std::int64_t>() - 1);
}

Json integer_to_json(const Integer& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return Json(v.convert_to<std::int64_t>());
  return Json(v.str());
}

}  // namespace

Rational rational_from_json(const Json& j) {
  if (j.is_number_integer()) return Rational(integer_from_json(j));
  if (j.is_number_float()) parse_error("floating-point numbers are not accepted; write the value as a string");
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_object()) {
    Integer num = integer_from_json(field(j, "num"));
    Integer den = j.contains("den") ? integer_from_json(j.at("den")) : Integer(1);
    if (den <= 0) parse_error("denominator must be positive");
    return Rational(num, den);
  }
  parse_error("expected a rational number, got " + j.dump());
}

Json rational_to_json(const Rational& r) {
  if (boost::multiprecision::denominator(r) == 1) {
    Json j = integer_to_json(boost::multiprecision::numerator(r));
    if (j.is_number_integer()) return j;
  }
  return Json(format_rational(r));
}

std::string format_real(const Real& x) {
  std::ostringstream os;
  os.precision(std::numeric_limits<Real>::max_digits10);
  os << x;
  return os.str();
}

Ctmdp model_from_json(const Json& j) {
  if (!j.is_object()) parse_error("model must be a JSON object");
  const Json& states = field(j, "states");
  if (!states.is_number_integer() || states.get<std::int64_t>() < 1) parse_error("'states' must be a positive integer");
  const auto n = static_cast<std::size_t>(states.get<std::int64_t>());
  const std::size_t good = state_from_json(field(j, "good"), "'good'");
  std::optional<std::size_t> bad;
  if (j.contains("bad") && !j.at("bad").is_null()) bad = state_from_json(j.at("bad"), "'bad'");
  if (good >= n || (bad && (*bad >= n || *bad == good))) parse_error("'good' or 'bad' is out of range");

  Ctmdp model(n, good, bad);
  const Json& actions = field(j, "actions");
  if (!actions.is_object()) parse_error("'actions' must map state numbers to lists of names");
  std::vector<bool> seen(n, false);
  for (const auto& [key, names] : actions.items()) {
    std::size_t s = 0;
    try {
      std::size_t pos = 0;
      long v = std::stol(key, &pos);
      if (pos != key.size() || v < 1 || static_cast<std::size_t>(v) > n) throw std::out_of_range(key);
      s = static_cast<std::size_t>(v - 1);
    } catch (const std::exception&) {
      parse_error("invalid state key '" + key + "' in 'actions'");
    }
    if (!names.is_array()) parse_error("actions of state " + key + " must be a list");
    for (const auto& name : names) {
      if (!name.is_string()) parse_error("action names must be strings");
      model.add_action(s, name.get<std::string>());
    }
    seen[s] = true;
  }
  for (std::size_t s = 0; s < n; ++s)
    if (!seen[s] && model.is_target(s)) model.add_action(s, "idle");

  if (j.contains("rates")) {
    const Json& rates = j.at("rates");
    if (!rates.is_array()) parse_error("'rates' must be a list");
    for (const auto& r : rates) {
      std::size_t from = state_from_json(field(r, "from"), "'from'");
      std::size_t to = state_from_json(field(r, "to"), "'to'");
      const Json& action = field(r, "action");
      if (!action.is_string()) parse_error("'action' must be a string");
      Rational rate = r.contains("rate") ? rational_from_json(r.at("rate")) : rational_from_json(r);
      if (model.rates().count(RateKey{from, action.get<std::string>(), to}))
        parse_error("rate (" + std::to_string(from + 1) + "," + action.get<std::string>() + "," +
                    std::to_string(to + 1) + ") given twice");
      model.set_rate(from, action.get<std::string>(), to, rate);
    }
  }
  return model;
}

Json model_to_json(const Ctmdp& model) {
  Json j;
  j["states"] = model.num_states();
  j["good"] = model.good() + 1;
  j["bad"] = model.bad() ? Json(*model.bad() + 1) : Json(nullptr);
  Json actions = Json::object();
  for (StateIndex s = 0; s < model.num_states(); ++s) actions[std::to_string(s + 1)] = model.actions(s);
  j["actions"] = actions;
  Json rates = Json::array();
  for (const auto& [key, rate] : model.rates()) {
    Json r;
    r["from"] = key.from + 1;
    r["action"] = key.action;
    r["to"] = key.to + 1;
    r["num"] = integer_to_json(boost::multiprecision::numerator(rate));
    r["den"] = integer_to_json(boost::multiprecision::denominator(rate));
    rates.push_back(r);
  }
  j["rates"] = rates;
  return j;
}

SkolemInstance skolem_from_json(const Json& j) {
  if (!j.is_object()) parse_error("instance must be a JSON object");
  SkolemInstance inst;
  const Json& coeffs = field(j, "coefficients");
  const Json& init = field(j, "initial");
  if (!coeffs.is_array() || !init.is_array()) parse_error("'coefficients' and 'initial' must be lists");
  for (const auto& c : coeffs) inst.coefficients.push_back(rational_from_json(c));
  for (const auto& c : init) inst.initial.push_back(rational_from_json(c));
  inst.bound = rational_from_json(field(j, "bound"));
  try {
    check_instance(inst);
  } catch (const Error& e) {
    parse_error(e.what());
  }
  return inst;
}

Json skolem_to_json(const SkolemInstance& inst) {
  Json j;
  j["coefficients"] = Json::array();
  for (const auto& c : inst.coefficients) j["coefficients"].push_back(rational_to_json(c));
  j["initial"] = Json::array();
  for (const auto& c : inst.initial) j["initial"].push_back(rational_to_json(c));
  j["bound"] = rational_to_json(inst.bound);
  return j;
}

Json policy_to_json(const Ctmdp& model, const PiecewisePolicy& policy) {
  Json j;
  j["bound"] = rational_to_json(policy.bound);
  j["decisions"] = Json::array();
  for (const auto& d : policy.schedule.decisions) {
    Json names = Json::array();
    for (StateIndex s = 0; s < d.size(); ++s) names.push_back(model.actions(s)[d[s]]);
    j["decisions"].push_back(names);
  }
  j["switches"] = Json::array();
  for (const auto& b : policy.schedule.switches) {
    Json sw;
    sw["lo"] = format_rational(to_rational(b.lo));
    sw["hi"] = format_rational(to_rational(b.hi));
    sw["midpoint"] = to_double(b.midpoint());
    sw["width"] = to_double(b.width());
    j["switches"].push_back(sw);
  }
  return j;
}

PiecewisePolicy policy_from_json(const Ctmdp& model, const Json& j) {
  PiecewisePolicy p;
  p.bound = rational_from_json(field(j, "bound"));
  const Json& decisions = field(j, "decisions");
  if (!decisions.is_array() || decisions.empty()) parse_error("'decisions' must be a non-empty list");
  for (const auto& names : decisions) {
    if (!names.is_array() || names.size() != model.num_states())
      parse_error("each decision must name one action per state");
    std::vector<std::size_t> choice;
    for (StateIndex s = 0; s < model.num_states(); ++s) {
      if (!names[s].is_string()) parse_error("action names must be strings");
      auto a = model.action_index(s, names[s].get<std::string>());
      if (!a) parse_error("unknown action '" + names[s].get<std::string>() + "' at state " + std::to_string(s + 1));
      choice.push_back(*a);
    }
    p.schedule.decisions.emplace_back(std::move(choice));
  }
  if (j.contains("switches")) {
    for (const auto& sw : j.at("switches"))
      p.schedule.switches.push_back(Interval{to_real(rational_from_json(field(sw, "lo"))),
                                             to_real(rational_from_json(field(sw, "hi")))});
  }
  if (p.schedule.switches.size() + 1 != p.schedule.decisions.size())
    parse_error("a policy needs exactly one more decision than switches");
  for (std::size_t i = 0; i < p.schedule.switches.size(); ++i) {
    const auto& sw = p.schedule.switches[i];
    if (!(sw.lo <= sw.hi) || (i > 0 && !(p.schedule.switches[i - 1].hi <= sw.lo)))
      parse_error("switch brackets must be ordered and disjoint");
  }
  return p;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    parse_error("'" + path.string() + "': " + e.what());
  }
}

}  // namespace ctmdp
