#include "ctmdp_reach/cli.hpp"

#include "ctmdp_reach/error.hpp"
#include "ctmdp_reach/model_io.hpp"
#include "ctmdp_reach/oracle.hpp"
#include "ctmdp_reach/policy.hpp"
#include "ctmdp_reach/skolem.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace ctmdp {

namespace {

constexpr int kExitParse = 2;
constexpr int kExitBudget = 4;
constexpr int kExitTrivial = 5;

struct Settings {
  std::string tol = "1e-9";
  std::size_t max_switches = 64;
  std::string relative_width = "1e-8";
  std::uint64_t paths = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct Flags {
  std::string config;
  std::string tol;
  std::size_t max_switches = 0;
  std::string relative_width;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

std::string json_string(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw Error(ErrorCode::ParseError, std::string("config field '") + key + "' must be a string or integer");
}

template <class T>
T json_count(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw Error(ErrorCode::ParseError, std::string("config field '") + key + "' must be a non-negative integer");
  return static_cast<T>(v.get<std::uint64_t>());
}

Settings resolve_settings(const Flags& flags, const CLI::App& cmd) {
  Settings s;
  if (!flags.config.empty()) {
    Json cfg = read_json_file(flags.config);
    if (!cfg.is_object()) throw Error(ErrorCode::ParseError, "config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      if (key == "tol") s.tol = json_string(cfg, "tol");
      else if (key == "max_switches") s.max_switches = json_count<std::size_t>(cfg, "max_switches");
      else if (key == "relative_width") s.relative_width = json_string(cfg, "relative_width");
      else if (key == "paths") s.paths = json_count<std::uint64_t>(cfg, "paths");
      else if (key == "seed") s.seed = json_count<std::uint64_t>(cfg, "seed");
      else if (key == "threads") s.threads = json_count<unsigned>(cfg, "threads");
      else throw Error(ErrorCode::ParseError, "unknown config field '" + key + "'");
    }
  }
  auto given = [&](const char* name) {
    auto* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--tol")) s.tol = flags.tol;
  if (given("--max-switches")) s.max_switches = flags.max_switches;
  if (given("--width")) s.relative_width = flags.relative_width;
  if (given("--paths")) s.paths = flags.paths;
  if (given("--seed")) s.seed = flags.seed;
  if (given("--threads")) s.threads = flags.threads;
  return s;
}

Json settings_json(const Settings& s) {
  Json j;
  j["tol"] = s.tol;
  j["max_switches"] = s.max_switches;
  j["relative_width"] = s.relative_width;
  j["paths"] = s.paths;
  j["seed"] = s.seed;
  return j;
}

SynthesisConfig synthesis_config(const Settings& s) {
  SynthesisConfig cfg;
  cfg.max_switches = s.max_switches;
  Rational w = parse_rational(s.relative_width);
  if (w <= 0 || w >= 1) throw Error(ErrorCode::ParseError, "relative width must lie in (0, 1)");
  cfg.isolation.relative_width = to_real(w);
  return cfg;
}

Ctmdp load_valid_model(const std::string& path, Json& report) {
  Ctmdp model = model_from_json(read_json_file(path));
  ValidationReport v = validate(model);
  if (!v.ok()) {
    Json list = Json::array();
    for (const auto& x : v.violations) list.push_back(x.message);
    report["violations"] = list;
    throw Error(ErrorCode::ParseError, "model is invalid");
  }
  return model;
}

Json state_names(const Ctmdp& model, const DecisionVector& d) {
  Json names = Json::array();
  for (StateIndex s = 0; s < d.size(); ++s) names.push_back(model.actions(s)[d[s]]);
  return names;
}

Json switch_json(const Ctmdp& model, const SwitchRecord& rec) {
  Json j;
  j["lo"] = format_rational(to_rational(rec.bracket.lo));
  j["hi"] = format_rational(to_rational(rec.bracket.hi));
  j["midpoint"] = to_double(rec.bracket.midpoint());
  j["width"] = to_double(rec.bracket.width());
  Json changed = Json::array();
  for (std::size_t i = 0; i < rec.changed_states.size(); ++i) {
    StateIndex s = rec.changed_states[i];
    changed.push_back({{"state", s + 1},
                       {"from", model.actions(s)[rec.old_decision[s]]},
                       {"to", model.actions(s)[rec.new_decision[s]]},
                       {"contact_order", rec.contact_orders[i]}});
  }
  j["changed"] = changed;
  return j;
}

Json matrix_json(const RationalMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(rational_to_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

Json vector_json(const RationalVector& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(rational_to_json(x));
  return out;
}

std::vector<Rational> parse_thresholds(const std::string& arg, const Ctmdp& model) {
  std::vector<Rational> given;
  if (std::filesystem::is_regular_file(arg)) {
    Json j = read_json_file(arg);
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "threshold file must hold a list");
    for (const auto& x : j) given.push_back(rational_from_json(x));
  } else {
    std::size_t start = 0;
    while (start <= arg.size()) {
      std::size_t comma = arg.find(',', start);
      if (comma == std::string::npos) comma = arg.size();
      given.push_back(parse_rational(arg.substr(start, comma - start)));
      start = comma + 1;
    }
  }
  const auto ordinary = model.ordinary_states();
  if (given.size() != 1 && given.size() != ordinary.size())
    throw Error(ErrorCode::ParseError, "expected 1 or " + std::to_string(ordinary.size()) + " thresholds");
  std::vector<Rational> out(model.num_states(), Rational(0));
  for (std::size_t i = 0; i < ordinary.size(); ++i) out[ordinary[i]] = given.size() == 1 ? given[0] : given[i];
  return out;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
      return kExitParse;
    case ErrorCode::TrivialInstance:
    case ErrorCode::DegenerateGamma:
    case ErrorCode::AllMomentsZero:
      return kExitTrivial;
    default:
      return kExitBudget;
  }
}

int cmd_validate(const std::string& path, Json& report) {
  Ctmdp model = model_from_json(read_json_file(path));
  ValidationReport v = validate(model);
  report["states"] = model.num_states();
  report["valid"] = v.ok();
  Json list = Json::array();
  for (const auto& x : v.violations) {
    Json item;
    item["kind"] = to_string(x.kind);
    item["state"] = x.state ? Json(*x.state + 1) : Json(nullptr);
    item["action"] = x.action ? Json(*x.action) : Json(nullptr);
    item["target"] = x.target ? Json(*x.target + 1) : Json(nullptr);
    item["message"] = x.message;
    list.push_back(item);
  }
  report["violations"] = list;
  return v.ok() ? 0 : 1;
}

int cmd_solve(const std::string& path, const std::string& bound, const std::string& thresholds,
              const Settings& settings, Json& report) {
  Ctmdp model = load_valid_model(path, report);
  ReachSpec spec{parse_rational(bound), parse_thresholds(thresholds, model)};
  check_reach_spec(model, spec);
  Real tol = to_real(parse_rational(settings.tol));
  ReachabilityDecision d = decide_reachability(model, spec, tol, synthesis_config(settings));

  report["bound"] = rational_to_json(spec.bound);
  report["verdict"] = to_string(d.verdict);
  report["margin"] = to_double(d.margin);
  report["error_bound"] = to_double(d.value.error_bound);
  Json states = Json::array();
  const Real band = d.value.error_bound + tol;
  for (StateIndex s : model.ordinary_states()) {
    Real v = d.value.value[s];
    Real r = to_real(spec.thresholds[s]);
    std::string verdict = v - band > r ? "Yes" : v + band < r ? "No" : "Inconclusive";
    states.push_back({{"state", s + 1},
                      {"value", to_double(v)},
                      {"value_digits", format_real(v)},
                      {"threshold", rational_to_json(spec.thresholds[s])},
                      {"verdict", verdict}});
  }
  report["states"] = states;
  report["policy"] = policy_to_json(model, d.policy);
  Json switches = Json::array();
  for (const auto& rec : d.policy.switches) switches.push_back(switch_json(model, rec));
  report["switches"] = switches;
  switch (d.verdict) {
    case Verdict::Yes: return 0;
    case Verdict::No: return 1;
    case Verdict::Inconclusive: return 3;
  }
  return 3;
}

int cmd_check_stationary(const std::string& path, const std::string& bound, const Settings& settings,
                         Json& report) {
  Ctmdp model = load_valid_model(path, report);
  Rational b = parse_rational(bound);
  StationarityDecision d = decide_stationary(model, b, synthesis_config(settings));
  report["bound"] = rational_to_json(b);
  report["verdict"] = to_string(d.verdict);
  report["initial_decision"] = state_names(model, d.initial);
  report["first_switch"] = d.first_switch ? switch_json(model, *d.first_switch) : Json(nullptr);
  if (!d.diagnostic.empty()) report["diagnostic"] = d.diagnostic;
  switch (d.verdict) {
    case Stationarity::Stationary: return 0;
    case Stationarity::NotStationary: return 1;
    case Stationarity::Inconclusive: return 3;
  }
  return 3;
}

int cmd_reduce(const std::string& path, const std::string& out_path, std::size_t verify, Json& report) {
  SkolemInstance inst = skolem_from_json(read_json_file(path));
  report["instance"] = skolem_to_json(inst);
  ReductionOutput out = reduce(inst);
  report["states"] = out.model.num_states();
  report["gamma"] = rational_to_json(out.gamma);
  report["lambda"] = rational_to_json(out.lambda);
  report["lambda0"] = rational_to_json(out.lambda0);
  report["r_perturb"] = rational_to_json(out.r_perturb);
  report["first_nonzero_moment"] = out.generators.first_nonzero_moment;
  Json prov;
  prov["normalized"] = skolem_to_json(out.normalized);
  prov["companion"] = matrix_json(out.companion);
  prov["shifted"] = matrix_json(out.shifted);
  prov["P2"] = matrix_json(out.substochastic.p2);
  prov["P"] = matrix_json(out.substochastic.p);
  prov["beta"] = vector_json(out.substochastic.beta);
  prov["theta"] = vector_json(out.generators.theta);
  prov["Qa"] = matrix_json(out.generators.qa);
  prov["Qb"] = matrix_json(out.generators.qb);
  report["provenance"] = prov;
  try {
    ExpPolyClosedForm cf = closed_form(companion_form(inst).observable(), to_double(to_real(inst.bound)));
    Json terms = Json::array();
    for (const auto& t : cf.terms) {
      Json coeffs = Json::array();
      for (const auto& c : t.coefficients) coeffs.push_back({{"amplitude", c.amplitude}, {"phase", c.phase}});
      terms.push_back({{"real", t.real}, {"imag", t.imag}, {"coefficients", coeffs}});
    }
    report["closed_form"] = terms;
  } catch (const Error&) {
    report["closed_form"] = nullptr;
  }
  if (verify > 0) report["identity_error"] = verify_identity(inst, out, verify);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write '" + out_path + "'");
    f << model_to_json(out.model).dump(2) << "\n";
    report["model_file"] = out_path;
  }
  return 0;
}

PiecewisePolicy select_policy(const Ctmdp& model, const std::string& spec, const Rational& bound,
                              const Settings& settings, Json& report) {
  if (spec == "optimal") {
    PiecewisePolicy p = synthesize(model, bound, synthesis_config(settings));
    return p;
  }
  if (spec == "stationary") return stationary_policy(initial_decision(model), bound);
  const std::string prefix = "stationary:";
  if (spec.rfind(prefix, 0) == 0) {
    std::vector<std::string> names;
    std::string rest = spec.substr(prefix.size());
    std::size_t start = 0;
    while (start <= rest.size()) {
      std::size_t comma = rest.find(',', start);
      if (comma == std::string::npos) comma = rest.size();
      names.push_back(rest.substr(start, comma - start));
      start = comma + 1;
    }
    if (names.size() != model.num_states())
      throw Error(ErrorCode::ParseError, "stationary policy must name one action per state");
    std::vector<std::size_t> choice;
    for (StateIndex s = 0; s < names.size(); ++s) {
      auto a = model.action_index(s, names[s]);
      if (!a) throw Error(ErrorCode::ParseError, "unknown action '" + names[s] + "'");
      choice.push_back(*a);
    }
    return stationary_policy(DecisionVector(std::move(choice)), bound);
  }
  PiecewisePolicy p = policy_from_json(model, read_json_file(spec));
  if (p.bound != bound) throw Error(ErrorCode::ParseError, "policy file bound differs from --bound");
  report["policy_file"] = spec;
  return p;
}

int cmd_simulate(const std::string& path, const std::string& bound, const std::string& policy_spec,
                 std::optional<std::size_t> start, const Settings& settings, Json& report) {
  Ctmdp model = load_valid_model(path, report);
  Rational b = parse_rational(bound);
  if (b < 0) throw Error(ErrorCode::ParseError, "bound must be non-negative");
  if (settings.paths == 0) throw Error(ErrorCode::ParseError, "at least one path is required");
  PiecewisePolicy policy = b == 0 ? stationary_policy(initial_decision(model), b)
                                  : select_policy(model, policy_spec, b, settings, report);
  ValueVector value = reach_probability(model, policy, true);

  std::vector<StateIndex> starts;
  if (start) {
    if (*start < 1 || *start > model.num_states()) throw Error(ErrorCode::ParseError, "start state out of range");
    starts.push_back(*start - 1);
  } else {
    starts = model.ordinary_states();
  }
  SimConfig cfg{settings.paths, settings.seed, b, settings.threads};
  report["bound"] = rational_to_json(b);
  report["policy"] = policy_to_json(model, policy);
  Json states = Json::array();
  for (StateIndex s : starts) {
    Estimate e = simulate(model, policy, s, cfg);
    double v = to_double(value.value[s]);
    double err = to_double(value.error_bound);
    states.push_back({{"state", s + 1},
                      {"mean", e.mean},
                      {"half_width", e.half_width},
                      {"hits", e.hits},
                      {"paths", e.paths},
                      {"policy_value", v},
                      {"policy_error_bound", err},
                      {"within_band", std::abs(e.mean - v) <= e.half_width + err}});
  }
  report["states"] = states;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-bounded reachability for continuous-time Markov decision processes"};
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON file with default settings");
  };
  auto add_synthesis = [&](CLI::App* cmd) {
    cmd->add_option("--tol", flags.tol, "decision tolerance (rational or decimal)");
    cmd->add_option("--max-switches", flags.max_switches, "switch cap");
    cmd->add_option("--width", flags.relative_width, "switch bracket width relative to the search interval");
  };

  std::string model_path, bound, thresholds, out_path, policy_spec = "optimal";
  std::size_t verify = 0;
  std::size_t start_state = 0;

  auto* validate_cmd = app.add_subcommand("validate", "check a model file");
  validate_cmd->add_option("model", model_path)->required();

  auto* solve_cmd = app.add_subcommand("solve", "decide time-bounded reachability against thresholds");
  solve_cmd->add_option("model", model_path)->required();
  solve_cmd->add_option("--bound", bound)->required();
  solve_cmd->add_option("--thresholds", thresholds, "file with a JSON list, or comma-separated values")->required();
  add_common(solve_cmd);
  add_synthesis(solve_cmd);

  auto* stat_cmd = app.add_subcommand("check-stationary", "decide whether a stationary policy is optimal");
  stat_cmd->add_option("model", model_path)->required();
  stat_cmd->add_option("--bound", bound)->required();
  add_common(stat_cmd);
  add_synthesis(stat_cmd);

  auto* reduce_cmd = app.add_subcommand("reduce", "build the CTMDP for a Skolem instance");
  reduce_cmd->add_option("instance", model_path)->required();
  reduce_cmd->add_option("--out", out_path, "write the model here");
  reduce_cmd->add_option("--verify", verify, "check the identity at this many sample points");

  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo estimate under a policy");
  sim_cmd->add_option("model", model_path)->required();
  sim_cmd->add_option("--bound", bound)->required();
  sim_cmd->add_option("--policy", policy_spec, "optimal | stationary | stationary:a1,a2,... | policy file");
  sim_cmd->add_option("--paths", flags.paths, "number of sample paths");
  sim_cmd->add_option("--seed", flags.seed, "random seed");
  sim_cmd->add_option("--threads", flags.threads, "worker threads");
  sim_cmd->add_option("--start", start_state, "single start state (default: all ordinary states)");
  add_common(sim_cmd);
  add_synthesis(sim_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitParse;
  }

  CLI::App* cmd = app.get_subcommands().front();
  Json report;
  report["command"] = cmd->get_name();
  report["arguments"] = args;
  const auto started = std::chrono::steady_clock::now();
  int code = 0;
  try {
    Settings settings = resolve_settings(flags, *cmd);
    if (cmd != validate_cmd && cmd != reduce_cmd) report["config"] = settings_json(settings);
    if (cmd == validate_cmd)
      code = cmd_validate(model_path, report);
    else if (cmd == solve_cmd)
      code = cmd_solve(model_path, bound, thresholds, settings, report);
    else if (cmd == stat_cmd)
      code = cmd_check_stationary(model_path, bound, settings, report);
    else if (cmd == reduce_cmd)
      code = cmd_reduce(model_path, out_path, verify, report);
    else
      code = cmd_simulate(model_path, bound, policy_spec,
                          sim_cmd->get_option("--start")->count() ? std::optional<std::size_t>(start_state)
                                                                  : std::nullopt,
                          settings, report);
  } catch (const Error& e) {
    code = exit_for(e);
    report["error"] = {{"kind", to_string(e.code())}, {"message", e.what()}};
    err << e.what() << "\n";
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report["exit_code"] = code;
  report["timing"] = {{"seconds", seconds}};
  out << report.dump(2) << "\n";
  return code;
}

}  // namespace ctmdp
