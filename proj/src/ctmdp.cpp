#include "ctmdp_reach/ctmdp.hpp"

#include "ctmdp_reach/error.hpp"

#include <limits>
#include <set>

namespace ctmdp {

namespace {
std::string one_based(StateIndex s) { return std::to_string(s + 1); }
}  // namespace

Ctmdp::Ctmdp(std::size_t num_states, StateIndex good, std::optional<StateIndex> bad)
    : good_(good), bad_(bad), actions_(num_states), rows_(num_states) {
  if (num_states == 0) throw Error(ErrorCode::InvalidArgument, "a model needs at least one state");
  if (good >= num_states) throw Error(ErrorCode::InvalidArgument, "good state out of range");
  if (bad && (*bad >= num_states || *bad == good))
    throw Error(ErrorCode::InvalidArgument, "bad state out of range or equal to good");
}

std::size_t Ctmdp::add_action(StateIndex s, std::string name) {
  if (s >= num_states()) throw Error(ErrorCode::InvalidArgument, "state " + one_based(s) + " out of range");
  actions_[s].push_back(std::move(name));
  rows_[s].emplace_back();
  rebuild_rows(s);
  return actions_[s].size() - 1;
}

void Ctmdp::set_rate(StateIndex from, std::string_view action, StateIndex to, Rational rate) {
  RateKey key{from, std::string(action), to};
  if (rate == 0)
    rates_.erase(key);
  else
    rates_[key] = std::move(rate);
  if (from < num_states()) rebuild_rows(from);
}

std::optional<std::size_t> Ctmdp::action_index(StateIndex s, std::string_view name) const {
  const auto& names = actions_.at(s);
  for (std::size_t a = 0; a < names.size(); ++a)
    if (names[a] == name) return a;
  return std::nullopt;
}

void Ctmdp::rebuild_rows(StateIndex s) {
  for (auto& r : rows_[s]) r.clear();
  auto it = rates_.lower_bound(RateKey{s, std::string(), 0});
  for (; it != rates_.end() && it->first.from == s; ++it) {
    const RateKey& key = it->first;
    if (key.to >= num_states() || key.to == s) continue;
    auto a = action_index(s, key.action);
    if (!a) continue;
    rows_[s][*a].push_back(Transition{key.to, it->second});
  }
}

std::vector<StateIndex> Ctmdp::ordinary_states() const {
  std::vector<StateIndex> out;
  for (StateIndex s = 0; s < num_states(); ++s)
    if (!is_target(s)) out.push_back(s);
  return out;
}

std::size_t Ctmdp::decision_count() const {
  constexpr std::size_t cap = std::numeric_limits<std::size_t>::max();
  std::size_t total = 1;
  for (const auto& a : actions_) {
    if (a.empty()) return 0;
    if (total > cap / a.size()) return cap;
    total *= a.size();
  }
  return total;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::InvalidState: return "InvalidState";
    case ViolationKind::DuplicateAction: return "DuplicateAction";
    case ViolationKind::NegativeRate: return "NegativeRate";
    case ViolationKind::SelfRate: return "SelfRate";
    case ViolationKind::NonAbsorbingGood: return "NonAbsorbingGood";
    case ViolationKind::NonAbsorbingBad: return "NonAbsorbingBad";
    case ViolationKind::EmptyActionSet: return "EmptyActionSet";
    case ViolationKind::CrossStateDependence: return "CrossStateDependence";
  }
  return "Unknown";
}

ValidationReport validate(const Ctmdp& model) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::optional<StateIndex> s, std::optional<std::string> a,
                 std::optional<StateIndex> t, std::string msg) {
    report.violations.push_back(Violation{kind, s, std::move(a), t, std::move(msg)});
  };

  for (StateIndex s = 0; s < model.num_states(); ++s) {
    const auto& names = model.actions(s);
    if (names.empty()) add(ViolationKind::EmptyActionSet, s, {}, {}, "state " + one_based(s) + " has no action");
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second)
        add(ViolationKind::DuplicateAction, s, n, {}, "action '" + n + "' listed twice at state " + one_based(s));
  }

  for (const auto& [key, rate] : model.rates()) {
    std::string where = "(" + one_based(key.from) + "," + key.action + "," + one_based(key.to) + ")";
    if (key.from >= model.num_states() || key.to >= model.num_states()) {
      add(ViolationKind::InvalidState, key.from, key.action, key.to, "state out of range at " + where);
      continue;
    }
    if (rate < 0) add(ViolationKind::NegativeRate, key.from, key.action, key.to, "negative rate at " + where);
    if (key.from == key.to)
      add(ViolationKind::SelfRate, key.from, key.action, key.to, "self rate stored at " + where);
    if (!model.action_index(key.from, key.action))
      add(ViolationKind::CrossStateDependence, key.from, key.action, key.to,
          "rate at " + where + " names an action not available at state " + one_based(key.from));
    if (key.from == model.good() && key.from != key.to)
      add(ViolationKind::NonAbsorbingGood, key.from, key.action, key.to, "good state has outgoing rate " + where);
    if (model.bad() && key.from == *model.bad() && key.from != key.to)
      add(ViolationKind::NonAbsorbingBad, key.from, key.action, key.to, "bad state has outgoing rate " + where);
  }
  return report;
}

std::string generator_defect(const RationalMatrix& m) {
  if (m.rows() != m.cols()) return "matrix is not square";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Rational off = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (i == j) continue;
      if (m(i, j) < 0) return "negative off-diagonal entry in row " + one_based(i);
      off += m(i, j);
    }
    if (m(i, i) != -off) return "row " + one_based(i) + " does not sum to zero";
  }
  return {};
}

GeneratorMatrix::GeneratorMatrix(RationalMatrix entries) : entries_(std::move(entries)) {
  if (auto defect = generator_defect(entries_); !defect.empty())
    throw Error(ErrorCode::InvalidArgument, "not a generator matrix: " + defect);
}

void check_decision(const Ctmdp& model, const DecisionVector& d) {
  if (d.size() != model.num_states())
    throw Error(ErrorCode::InvalidArgument, "decision vector length does not match the state count");
  for (StateIndex s = 0; s < d.size(); ++s)
    if (d[s] >= model.actions(s).size())
      throw Error(ErrorCode::InvalidArgument, "decision vector picks a missing action at state " + one_based(s));
}

DecisionVector first_decision(const Ctmdp& model) {
  return DecisionVector(std::vector<std::size_t>(model.num_states(), 0));
}

RationalVector action_row(const Ctmdp& model, StateIndex s, std::size_t a) {
  RationalVector row(model.num_states());
  Rational total = 0;
  for (const auto& t : model.row(s, a)) {
    row[t.target] = t.rate;
    total += t.rate;
  }
  row[s] = -total;
  return row;
}

GeneratorMatrix generator_for(const Ctmdp& model, const DecisionVector& d) {
  check_decision(model, d);
  const std::size_t n = model.num_states();
  RationalMatrix q(n, n);
  for (StateIndex s = 0; s < n; ++s) {
    Rational total = 0;
    for (const auto& t : model.row(s, d[s])) {
      q(s, t.target) = t.rate;
      total += t.rate;
    }
    q(s, s) = -total;
  }
  return GeneratorMatrix(std::move(q));
}

Rational exit_rate(const Ctmdp& model, const DecisionVector& d, StateIndex s) {
  check_decision(model, d);
  Rational total = 0;
  for (const auto& t : model.row(s, d[s])) total += t.rate;
  return total;
}

Rational jump_probability(const Ctmdp& model, const DecisionVector& d, StateIndex s, StateIndex target) {
  Rational e = exit_rate(model, d, s);
  if (e == 0) throw Error(ErrorCode::AbsorbingSource, "state " + one_based(s) + " has exit rate zero");
  for (const auto& t : model.row(s, d[s]))
    if (t.target == target) return t.rate / e;
  return Rational(0);
}

void check_reach_spec(const Ctmdp& model, const ReachSpec& spec) {
  if (spec.bound <= 0) throw Error(ErrorCode::InvalidArgument, "time bound must be positive");
  if (spec.thresholds.size() != model.num_states())
    throw Error(ErrorCode::InvalidArgument, "threshold vector length does not match the state count");
  for (const auto& r : spec.thresholds)
    if (r < 0 || r > 1) throw Error(ErrorCode::InvalidArgument, "threshold outside [0, 1]");
}

}  // namespace ctmdp
