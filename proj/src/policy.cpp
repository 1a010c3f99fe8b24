#include "ctmdp_reach/policy.hpp"

#include "ctmdp_reach/error.hpp"

#include <algorithm>

namespace ctmdp {

namespace {

using boost::multiprecision::abs;

std::size_t chain_length(const Ctmdp& model) { return model.ordinary_states().size() + 2; }

ActionSets all_actions(const Ctmdp& model) {
  ActionSets sets(model.num_states());
  for (StateIndex s = 0; s < model.num_states(); ++s)
    for (std::size_t a = 0; a < model.actions(s).size(); ++a) sets[s].push_back(a);
  return sets;
}

Rational row_dot(const Ctmdp& model, StateIndex s, std::size_t a, const RationalVector& v) {
  Rational total = 0;
  for (const auto& t : model.row(s, a)) total += t.rate * (v[t.target] - v[s]);
  return total;
}

struct RealRows {
  explicit RealRows(const Ctmdp& model) : rows(model.num_states()) {
    for (StateIndex s = 0; s < model.num_states(); ++s)
      for (std::size_t a = 0; a < model.actions(s).size(); ++a) {
        std::vector<std::pair<StateIndex, Real>> r;
        for (const auto& t : model.row(s, a)) r.emplace_back(t.target, to_real(t.rate));
        rows[s].push_back(std::move(r));
      }
  }

  /// q^a . v and the magnitude used for tolerances.
  std::pair<Real, Real> dot(StateIndex s, std::size_t a, const Vector& v) const {
    Real total = 0;
    Real scale = 0;
    for (const auto& [target, rate] : rows[s][a]) {
      total += rate * (v(static_cast<Eigen::Index>(target)) - v(static_cast<Eigen::Index>(s)));
      scale += rate * (abs(v(static_cast<Eigen::Index>(target))) + abs(v(static_cast<Eigen::Index>(s))));
    }
    return {total, scale};
  }

  std::vector<std::vector<std::vector<std::pair<StateIndex, Real>>>> rows;
};

}  // namespace

std::vector<ActionSets> lexi_chain(const Ctmdp& model, const RationalVector& w) {
  if (w.size() != model.num_states()) throw Error(ErrorCode::InvalidArgument, "value vector has the wrong length");
  std::vector<ActionSets> chain;
  ActionSets current = all_actions(model);
  RationalVector v = w;
  for (std::size_t j = 0; j < chain_length(model); ++j) {
    ActionSets next(model.num_states());
    RationalVector nv(model.num_states());
    for (StateIndex s = 0; s < model.num_states(); ++s) {
      std::optional<Rational> best;
      for (std::size_t a : current[s]) {
        Rational x = row_dot(model, s, a, v);
        if (!best || x > *best) {
          best = x;
          next[s] = {a};
        } else if (x == *best) {
          next[s].push_back(a);
        }
      }
      nv[s] = best.value_or(Rational(0));
    }
    current = next;
    v = std::move(nv);
    chain.push_back(current);
  }
  return chain;
}

std::vector<ActionSets> lexi_chain(const Ctmdp& model, const Vector& w) {
  if (static_cast<std::size_t>(w.size()) != model.num_states())
    throw Error(ErrorCode::InvalidArgument, "value vector has the wrong length");
  RealRows rows(model);
  std::vector<ActionSets> chain;
  ActionSets current = all_actions(model);
  Vector v = w;
  for (std::size_t j = 0; j < chain_length(model); ++j) {
    ActionSets next(model.num_states());
    Vector nv = Vector::Zero(v.size());
    for (StateIndex s = 0; s < model.num_states(); ++s) {
      std::vector<std::pair<Real, Real>> values;
      Real best = 0;
      Real scale = 0;
      for (std::size_t i = 0; i < current[s].size(); ++i) {
        auto [x, mag] = rows.dot(s, current[s][i], v);
        values.emplace_back(x, mag);
        if (i == 0 || x > best) best = x;
        scale = std::max(scale, mag);
      }
      const Real tol = Real(1e-12) * scale;
      for (std::size_t i = 0; i < current[s].size(); ++i) {
        if (values[i].first < best - tol) continue;
        if (next[s].empty()) nv(static_cast<Eigen::Index>(s)) = values[i].first;
        next[s].push_back(current[s][i]);
      }
    }
    current = next;
    v = std::move(nv);
    chain.push_back(current);
  }
  return chain;
}

DecisionVector smallest_member(const ActionSets& sets) {
  std::vector<std::size_t> choice;
  for (const auto& s : sets) {
    if (s.empty()) throw Error(ErrorCode::InvalidArgument, "empty action set");
    choice.push_back(*std::min_element(s.begin(), s.end()));
  }
  return DecisionVector(std::move(choice));
}

DecisionVector initial_decision(const Ctmdp& model) {
  RationalVector w(model.num_states());
  w[model.good()] = 1;
  return smallest_member(lexi_chain(model, w).back());
}

const DecisionVector& PolicyPrefix::active(const Real& t) const {
  std::size_t i = 0;
  while (i < switches.size() && t > switches[i].midpoint()) ++i;
  return decisions.at(i);
}

const Matrix& GeneratorCache::operator()(const DecisionVector& d) {
  auto it = cache_.find(d);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(d, to_real(generator_for(model_, d).entries())).first->second;
}

namespace {

Vector good_indicator(const Ctmdp& model) {
  Vector w = Vector::Zero(static_cast<Eigen::Index>(model.num_states()));
  w(static_cast<Eigen::Index>(model.good())) = 1;
  return w;
}

/// W at the start of the last segment.
Vector value_at_last_origin(const Ctmdp& model, const PolicyPrefix& prefix, GeneratorCache& gens) {
  Vector w = good_indicator(model);
  for (std::size_t i = 0; i + 1 < prefix.decisions.size(); ++i) {
    Real h = prefix.segment_start(i + 1) - prefix.segment_start(i);
    w = expm(gens(prefix.decisions[i]) * h) * w;
  }
  return w;
}

void check_prefix(const Ctmdp& model, const PolicyPrefix& prefix) {
  if (prefix.decisions.empty() || prefix.decisions.size() != prefix.switches.size() + 1)
    throw Error(ErrorCode::InvalidArgument, "policy prefix needs one more decision than switches");
  for (const auto& d : prefix.decisions) check_decision(model, d);
}

}  // namespace

Vector backward_value(const Ctmdp& model, const PolicyPrefix& prefix, const Real& t) {
  check_prefix(model, prefix);
  GeneratorCache gens(model);
  Vector w = good_indicator(model);
  for (std::size_t i = 0; i < prefix.decisions.size(); ++i) {
    Real start = prefix.segment_start(i);
    if (t <= start) break;
    Real end = i < prefix.switches.size() ? std::min(t, prefix.switches[i].midpoint()) : t;
    w = expm(gens(prefix.decisions[i]) * (end - start)) * w;
  }
  return w;
}

LinearObservable switch_observable(const Ctmdp& model, const PolicyPrefix& prefix, StateIndex s, std::size_t b) {
  check_prefix(model, prefix);
  const DecisionVector& d = prefix.decisions.back();
  if (b >= model.actions(s).size() || b == d[s])
    throw Error(ErrorCode::InvalidArgument, "switch candidate must be a different available action");
  GeneratorCache gens(model);
  Vector w = value_at_last_origin(model, prefix, gens);
  RationalVector c = action_row(model, s, d[s]);
  RationalVector cb = action_row(model, s, b);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= cb[i];
  return LinearObservable(gens(d), std::move(w), to_real_row(c));
}

std::optional<SwitchRecord> find_next_switch(const Ctmdp& model, const PolicyPrefix& prefix, const Real& from,
                                             const Real& bound, const SynthesisConfig& config) {
  check_prefix(model, prefix);
  if (!(from < bound)) throw Error(ErrorCode::InvalidArgument, "search interval is empty");
  const DecisionVector& d = prefix.decisions.back();
  const Real origin = prefix.segment_start(prefix.decisions.size() - 1);
  GeneratorCache gens(model);
  const Vector w = value_at_last_origin(model, prefix, gens);
  const Matrix& q = gens(d);

  IsolationConfig iso = config.isolation;
  if (iso.width <= 0) iso.width = iso.relative_width * (bound - from);
  const Real delta = iso.width;

  struct Candidate {
    StateIndex state;
    std::size_t action;
    ZeroBracket bracket;  // global time
    LinearObservable obs;
  };
  std::vector<Candidate> candidates;
  for (StateIndex s = 0; s < model.num_states(); ++s) {
    for (std::size_t b = 0; b < model.actions(s).size(); ++b) {
      if (b == d[s]) continue;
      RationalVector c = action_row(model, s, d[s]);
      RationalVector cb = action_row(model, s, b);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] -= cb[i];
      LinearObservable obs(q, w, to_real_row(c));
      if (is_identically_zero(obs)) continue;
      for (const auto& z : isolate_zeros(obs, from - origin, bound - origin, iso)) {
        if (z.kind != ZeroKind::NonTangential) continue;
        if (z.sign_before < 0)
          throw Error(ErrorCode::AmbiguousSimultaneity,
                      "candidate at state " + std::to_string(s + 1) + " is already preferred before its crossing");
        ZeroBracket g = z;
        g.lo += origin;
        g.hi += origin;
        candidates.push_back(Candidate{s, b, g, obs});
        break;
      }
    }
  }
  if (candidates.empty()) return std::nullopt;

  auto first = std::min_element(candidates.begin(), candidates.end(),
                                [](const Candidate& x, const Candidate& y) { return x.bracket.lo < y.bracket.lo; });
  Interval cut{first->bracket.lo, first->bracket.hi};
  std::vector<const Candidate*> group;
  for (const auto& c : candidates) {
    bool overlaps = c.bracket.lo <= first->bracket.hi && c.bracket.hi >= first->bracket.lo;
    if (overlaps) {
      group.push_back(&c);
      cut.lo = std::max(cut.lo, c.bracket.lo);
      cut.hi = std::min(cut.hi, c.bracket.hi);
    } else if (c.bracket.lo - first->bracket.hi < delta) {
      throw Error(ErrorCode::AmbiguousSimultaneity, "distinct switch candidates lie within the bracket width");
    }
  }
  if (!(cut.lo < cut.hi))
    throw Error(ErrorCode::AmbiguousSimultaneity, "overlapping switch brackets have no common part");

  SwitchRecord record;
  record.bracket = cut;
  record.old_decision = d;
  record.new_decision = d;
  const Real probe = cut.hi + cut.width() - origin;
  std::map<StateIndex, std::pair<Real, const Candidate*>> best;
  for (const Candidate* c : group) {
    Real y = evaluate(c->obs, probe);
    auto it = best.find(c->state);
    if (it == best.end() || y < it->second.first ||
        (y == it->second.first && c->action < it->second.second->action))
      best[c->state] = {y, c};
  }
  for (const auto& [s, entry] : best) {
    record.new_decision.set(s, entry.second->action);
    record.changed_states.push_back(s);
    record.contact_orders.push_back(entry.second->bracket.contact_order);
  }
  return record;
}

PiecewisePolicy stationary_policy(const DecisionVector& d, const Rational& bound) {
  PiecewisePolicy p;
  p.schedule.decisions.push_back(d);
  p.bound = bound;
  return p;
}

PiecewisePolicy synthesize(const Ctmdp& model, const Rational& bound, const SynthesisConfig& config) {
  if (bound <= 0) throw Error(ErrorCode::InvalidArgument, "time bound must be positive");
  PiecewisePolicy policy = stationary_policy(initial_decision(model), bound);
  const Real b = to_real(bound);
  Real from = 0;
  while (from < b) {
    auto next = find_next_switch(model, policy.schedule, from, b, config);
    if (!next) break;
    if (policy.switches.size() >= config.max_switches)
      throw Error(ErrorCode::MaxSwitchesExceeded,
                  "more than " + std::to_string(config.max_switches) + " switches on the horizon");
    from = next->bracket.hi;
    policy.schedule.switches.push_back(next->bracket);
    policy.schedule.decisions.push_back(next->new_decision);
    policy.switches.push_back(std::move(*next));
  }
  return policy;
}

ValueVector reach_probability(const Ctmdp& model, const PiecewisePolicy& policy, bool interval_aware) {
  const PolicyPrefix& prefix = policy.schedule;
  check_prefix(model, prefix);
  const Real b = to_real(policy.bound);
  if (b < 0) throw Error(ErrorCode::InvalidArgument, "time bound must be non-negative");
  Vector w = backward_value(model, prefix, b);
  ValueVector out;
  for (Eigen::Index i = 0; i < w.size(); ++i) out.value.push_back(w(i));

  GeneratorCache gens(model);
  Real err = 0;
  std::size_t segments = 1;
  for (std::size_t i = 0; i < prefix.switches.size(); ++i) {
    if (prefix.switches[i].midpoint() >= b) break;
    ++segments;
    if (interval_aware)
      err += prefix.switches[i].width() / 2 * inf_norm(gens(prefix.decisions[i]) - gens(prefix.decisions[i + 1]));
  }
  Real rate = 0;
  for (const auto& d : prefix.decisions) rate = std::max(rate, inf_norm(gens(d)));
  err += 64 * Real(model.num_states() + 1) * machine_epsilon() * Real(segments) * (1 + rate * b);
  out.error_bound = err;
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Yes: return "Yes";
    case Verdict::No: return "No";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

ReachabilityDecision decide_reachability(const Ctmdp& model, const ReachSpec& spec, const Real& tol,
                                         const SynthesisConfig& config) {
  check_reach_spec(model, spec);
  ReachabilityDecision out{Verdict::Yes, Real(0), synthesize(model, spec.bound, config), {}};
  out.value = reach_probability(model, out.policy, true);
  const Real band = out.value.error_bound + tol;
  bool all_above = true;
  bool some_below = false;
  bool first = true;
  for (StateIndex s : model.ordinary_states()) {
    Real gap = out.value.value[s] - to_real(spec.thresholds[s]);
    if (first || abs(gap) < out.margin) out.margin = abs(gap);
    first = false;
    if (!(gap > band)) all_above = false;
    if (gap < -band) some_below = true;
  }
  out.verdict = some_below ? Verdict::No : all_above ? Verdict::Yes : Verdict::Inconclusive;
  return out;
}

std::string_view to_string(Stationarity s) {
  switch (s) {
    case Stationarity::Stationary: return "Stationary";
    case Stationarity::NotStationary: return "NotStationary";
    case Stationarity::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

StationarityDecision decide_stationary(const Ctmdp& model, const Rational& bound, const SynthesisConfig& config) {
  if (bound <= 0) throw Error(ErrorCode::InvalidArgument, "time bound must be positive");
  StationarityDecision out{Stationarity::Stationary, initial_decision(model), std::nullopt, {}};
  PolicyPrefix prefix{{out.initial}, {}};
  try {
    out.first_switch = find_next_switch(model, prefix, Real(0), to_real(bound), config);
    if (out.first_switch) out.verdict = Stationarity::NotStationary;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::AmbiguousSimultaneity:
      case ErrorCode::BudgetExceeded:
      case ErrorCode::OrderCapExceeded:
      case ErrorCode::IdenticallyZero:
        out.verdict = Stationarity::Inconclusive;
        out.diagnostic = e.what();
        break;
      default:
        throw;
    }
  }
  return out;
}

}  // namespace ctmdp
