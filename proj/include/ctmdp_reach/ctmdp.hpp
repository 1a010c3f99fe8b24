#pragma once

#include "ctmdp_reach/rational.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctmdp {

/// Zero-based state index. Reports and files use one-based numbering.
using StateIndex = std::size_t;

struct RateKey {
  StateIndex from;
  std::string action;
  StateIndex to;

  auto operator<=>(const RateKey&) const = default;
};

struct Transition {
  StateIndex target;
  Rational rate;
};

/// One action index per state.
class DecisionVector {
 public:
  DecisionVector() = default;
  explicit DecisionVector(std::vector<std::size_t> choice) : choice_(std::move(choice)) {}

  std::size_t size() const { return choice_.size(); }
  std::size_t operator[](StateIndex s) const { return choice_[s]; }
  void set(StateIndex s, std::size_t action) { choice_[s] = action; }
  const std::vector<std::size_t>& choices() const { return choice_; }

  auto operator<=>(const DecisionVector&) const = default;

 private:
  std::vector<std::size_t> choice_;
};

/// Finite CTMDP with exact rational rates and absorbing good/bad states.
class Ctmdp {
 public:
  Ctmdp(std::size_t num_states, StateIndex good, std::optional<StateIndex> bad = std::nullopt);

  /// Appends an action to D_s and returns its index.
  std::size_t add_action(StateIndex s, std::string name);
  /// Stores a rate; zero rates are erased. Entries naming unknown actions or
  /// states are kept so that validate() can report them.
  void set_rate(StateIndex from, std::string_view action, StateIndex to, Rational rate);

  std::size_t num_states() const { return actions_.size(); }
  StateIndex good() const { return good_; }
  std::optional<StateIndex> bad() const { return bad_; }

  const std::vector<std::string>& actions(StateIndex s) const { return actions_.at(s); }
  std::optional<std::size_t> action_index(StateIndex s, std::string_view name) const;
  const std::map<RateKey, Rational>& rates() const { return rates_; }

  /// Outgoing transitions of action `a` at state `s`, ordered by target.
  const std::vector<Transition>& row(StateIndex s, std::size_t a) const { return rows_.at(s).at(a); }

  bool is_target(StateIndex s) const { return s == good_ || (bad_ && s == *bad_); }
  /// All states other than good and bad, ascending.
  std::vector<StateIndex> ordinary_states() const;
  /// Product of action-set sizes, saturating at SIZE_MAX.
  std::size_t decision_count() const;

 private:
  void rebuild_rows(StateIndex s);

  StateIndex good_;
  std::optional<StateIndex> bad_;
  std::vector<std::vector<std::string>> actions_;
  std::map<RateKey, Rational> rates_;
  std::vector<std::vector<std::vector<Transition>>> rows_;
};

enum class ViolationKind {
  InvalidState,
  DuplicateAction,
  NegativeRate,
  SelfRate,
  NonAbsorbingGood,
  NonAbsorbingBad,
  EmptyActionSet,
  CrossStateDependence,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::optional<StateIndex> state;
  std::optional<std::string> action;
  std::optional<StateIndex> target;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const Ctmdp& model);

/// Square rational matrix with non-negative off-diagonal entries and zero row sums.
class GeneratorMatrix {
 public:
  /// Checks the generator invariants exactly; throws Error(InvalidArgument).
  explicit GeneratorMatrix(RationalMatrix entries);

  std::size_t size() const { return entries_.rows(); }
  const RationalMatrix& entries() const { return entries_; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  RationalVector row(std::size_t i) const { return entries_.row(i); }

 private:
  RationalMatrix entries_;
};

/// Empty string when `m` is a valid generator, otherwise the first problem found.
std::string generator_defect(const RationalMatrix& m);

void check_decision(const Ctmdp& model, const DecisionVector& d);
/// The first action at every state.
DecisionVector first_decision(const Ctmdp& model);

GeneratorMatrix generator_for(const Ctmdp& model, const DecisionVector& d);
/// Rate row q^a of action `a` at state `s`, diagonal included.
RationalVector action_row(const Ctmdp& model, StateIndex s, std::size_t a);
Rational exit_rate(const Ctmdp& model, const DecisionVector& d, StateIndex s);
/// Throws Error(AbsorbingSource) when the exit rate is zero.
Rational jump_probability(const Ctmdp& model, const DecisionVector& d, StateIndex s, StateIndex target);

struct ReachSpec {
  Rational bound;
  /// One entry per state; entries for good and bad are ignored.
  std::vector<Rational> thresholds;
};

/// Throws Error(InvalidArgument) unless 0 < B and every threshold lies in [0, 1].
void check_reach_spec(const Ctmdp& model, const ReachSpec& spec);

}  // namespace ctmdp
