#pragma once

#include "ctmdp_reach/ctmdp.hpp"
#include "ctmdp_reach/expoly.hpp"

#include <optional>

namespace ctmdp {

/// z^(n) + a_{n-1} z^(n-1) + ... + a_0 z = 0 with initial derivatives z0.
struct SkolemInstance {
  /// a_{n-1}, ..., a_0.
  RationalVector coefficients;
  /// z(0), z'(0), ..., z^(n-1)(0).
  RationalVector initial;
  Rational bound;

  std::size_t order() const { return coefficients.size(); }
};

/// Throws Error(InvalidArgument) on inconsistent sizes or a non-positive bound.
void check_instance(const SkolemInstance& inst);

struct CompanionSystem {
  RationalMatrix a;
  RationalVector x0;
  RationalVector c;

  LinearObservable observable() const { return LinearObservable(a, x0, c); }
};

CompanionSystem companion_form(const SkolemInstance& inst);

/// Order-2n instance whose solution is t * z_t.
SkolemInstance normalize_initial(const SkolemInstance& inst);

struct DiagonalShift {
  RationalMatrix a;
  Rational lambda0;
};

DiagonalShift shift_diagonal(const RationalMatrix& a);

RationalMatrix phi1(const RationalMatrix& a);
RationalVector phi2(const RationalVector& x);

struct Substochastic {
  RationalMatrix p2;
  /// (2n+1) x (2n+1): [P2 | drift/gamma ; 0].
  RationalMatrix p;
  RationalVector y2;
  RationalVector beta;
  /// P2 Y2 + beta.
  RationalVector drift;
  Rational gamma;
  Rational lambda;
};

/// Requires x0[0] == 0 and a(0,0) < 0. Throws Error(DegenerateGamma) when gamma is zero.
Substochastic build_substochastic(const RationalMatrix& a, const RationalVector& x0);

struct Generators {
  RationalMatrix qa;
  RationalMatrix qb;
  RationalVector theta;
  Rational r_perturb;
  /// C-bar (Q^a)^k Y-bar_0 for k = 0 .. first nonzero.
  RationalVector moments;
  std::size_t first_nonzero_moment;
};

/// Throws Error(AllMomentsZero) if no moment up to index 2n+2 is nonzero.
Generators build_generators(const Substochastic& sub);

struct ReductionOutput {
  Ctmdp model;
  Rational gamma;
  Rational lambda;
  Rational lambda0;
  Rational r_perturb;
  SkolemInstance normalized;
  RationalMatrix companion;
  RationalMatrix shifted;
  Substochastic substochastic;
  Generators generators;
};

/// Full pipeline. Throws Error(TrivialInstance) for identically vanishing instances.
ReductionOutput reduce(const SkolemInstance& inst);

/// Max relative deviation of C e^{At} X0 = gamma e^{(lambda+lambda0) t} C-bar e^{Q^a t} Y-bar_0
/// over `samples` points of [0, B], with A the normalized companion matrix.
double verify_identity(const SkolemInstance& inst, const ReductionOutput& out, std::size_t samples);

}  // namespace ctmdp
