#pragma once

#include "ctmdp_reach/ctmdp.hpp"
#include "ctmdp_reach/expoly.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ctmdp {

/// Allowed actions per state; a product set of decision vectors.
using ActionSets = std::vector<std::vector<std::size_t>>;

/// F_1 ... F_{n+2} for value vector `w` (exact comparisons).
std::vector<ActionSets> lexi_chain(const Ctmdp& model, const RationalVector& w);
/// Same with comparisons up to 1e-12 of the row scale.
std::vector<ActionSets> lexi_chain(const Ctmdp& model, const Vector& w);

/// Lexicographically first member of the last level.
DecisionVector smallest_member(const ActionSets& sets);
DecisionVector initial_decision(const Ctmdp& model);

struct Interval {
  Real lo;
  Real hi;

  Real midpoint() const { return (lo + hi) / 2; }
  Real width() const { return hi - lo; }
};

/// Backward-time schedule: decisions[i] is played between switches[i-1] and switches[i].
struct PolicyPrefix {
  std::vector<DecisionVector> decisions;
  std::vector<Interval> switches;

  /// Decision active at backward time t, switching at bracket midpoints.
  const DecisionVector& active(const Real& t) const;
  Real segment_start(std::size_t i) const { return i == 0 ? Real(0) : switches[i - 1].midpoint(); }
};

struct SwitchRecord {
  Interval bracket;
  DecisionVector old_decision;
  DecisionVector new_decision;
  std::vector<StateIndex> changed_states;
  std::vector<unsigned> contact_orders;
};

struct SynthesisConfig {
  IsolationConfig isolation;
  std::size_t max_switches = 64;
};

/// Numeric generators keyed by decision vector.
class GeneratorCache {
 public:
  explicit GeneratorCache(const Ctmdp& model) : model_(model) {}
  const Matrix& operator()(const DecisionVector& d);

 private:
  const Ctmdp& model_;
  std::map<DecisionVector, Matrix> cache_;
};

/// W_t: reach probabilities within backward time t under the schedule.
Vector backward_value(const Ctmdp& model, const PolicyPrefix& prefix, const Real& t);

/// y^{s,b} for the last decision of `prefix`, in local time measured from the
/// last switch midpoint.
LinearObservable switch_observable(const Ctmdp& model, const PolicyPrefix& prefix, StateIndex s, std::size_t b);

std::optional<SwitchRecord> find_next_switch(const Ctmdp& model, const PolicyPrefix& prefix, const Real& from,
                                             const Real& bound, const SynthesisConfig& config = {});

struct ValueVector {
  std::vector<Real> value;
  Real error_bound;
};

struct PiecewisePolicy {
  PolicyPrefix schedule;
  Rational bound;
  std::vector<SwitchRecord> switches;

  const DecisionVector& terminal() const { return schedule.decisions.back(); }
};

PiecewisePolicy stationary_policy(const DecisionVector& d, const Rational& bound);
PiecewisePolicy synthesize(const Ctmdp& model, const Rational& bound, const SynthesisConfig& config = {});

/// Values at backward time B; with `interval_aware` the bound also covers the bracket widths.
ValueVector reach_probability(const Ctmdp& model, const PiecewisePolicy& policy, bool interval_aware = true);

enum class Verdict { Yes, No, Inconclusive };
std::string_view to_string(Verdict v);

struct ReachabilityDecision {
  Verdict verdict;
  /// Smallest |value - r| over ordinary states.
  Real margin;
  PiecewisePolicy policy;
  ValueVector value;
};

ReachabilityDecision decide_reachability(const Ctmdp& model, const ReachSpec& spec, const Real& tol,
                                         const SynthesisConfig& config = {});

enum class Stationarity { Stationary, NotStationary, Inconclusive };
std::string_view to_string(Stationarity s);

struct StationarityDecision {
  Stationarity verdict;
  DecisionVector initial;
  std::optional<SwitchRecord> first_switch;
  std::string diagnostic;
};

StationarityDecision decide_stationary(const Ctmdp& model, const Rational& bound, const SynthesisConfig& config = {});

}  // namespace ctmdp
