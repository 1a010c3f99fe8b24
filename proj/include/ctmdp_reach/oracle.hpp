#pragma once

#include "ctmdp_reach/ctmdp.hpp"
#include "ctmdp_reach/numeric.hpp"
#include "ctmdp_reach/policy.hpp"

#include <cstdint>
#include <vector>

namespace ctmdp {

/// Transient probability of being in `good` at time B, per start state.
std::vector<Real> uniformize(const GeneratorMatrix& q, StateIndex good, const Rational& bound, double tol = 1e-14);

struct StationaryOptimum {
  std::vector<Real> value;
  /// Lexicographically first decision vector attaining value[s].
  std::vector<DecisionVector> achiever;
};

/// Exhaustive search over decision vectors; Error(TooManyVectors) above 10^6 of them.
StationaryOptimum best_stationary(const Ctmdp& model, const Rational& bound, double tol = 1e-14);

struct SimConfig {
  std::uint64_t paths = 1;
  std::uint64_t seed = 0;
  Rational bound;
  /// Zero means CTMDP_REACH_THREADS or the hardware concurrency.
  unsigned threads = 0;
};

struct Estimate {
  double mean;
  double half_width;
  std::uint64_t paths;
  std::uint64_t hits;
};

/// Forward-time simulation; the policy's bound must equal cfg.bound.
Estimate simulate(const Ctmdp& model, const PiecewisePolicy& policy, StateIndex start, const SimConfig& cfg);

/// Thread count from CTMDP_REACH_THREADS, else the hardware concurrency.
unsigned default_threads();

}  // namespace ctmdp
