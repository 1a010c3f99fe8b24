#pragma once

#include "ctmdp_reach/numeric.hpp"
#include "ctmdp_reach/rational.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

namespace ctmdp {

/// z_t = c * exp(A t) * x0.
class LinearObservable {
 public:
  LinearObservable(Matrix a, Vector x0, RowVector c);
  /// Keeps the exact data so that exact checks can use it.
  LinearObservable(const RationalMatrix& a, const RationalVector& x0, const RationalVector& c);

  const Matrix& system() const { return a_; }
  const Vector& initial() const { return x0_; }
  const RowVector& output() const { return c_; }
  std::size_t dimension() const { return static_cast<std::size_t>(a_.rows()); }
  bool has_exact() const { return exact_.has_value(); }

  friend LinearObservable derivative(const LinearObservable& obs, unsigned k);
  friend bool is_identically_zero(const LinearObservable& obs);

 private:
  struct Exact {
    RationalMatrix a;
    RationalVector x0;
    RationalVector c;
  };

  Matrix a_;
  Vector x0_;
  RowVector c_;
  std::optional<Exact> exact_;
};

Real evaluate(const LinearObservable& obs, const Real& t);
/// Same system with output row c * A^k.
LinearObservable derivative(const LinearObservable& obs, unsigned k);
/// c A^k x0 = 0 for k < dim: exactly when rational data is present, else within 1e-12 of the scale.
bool is_identically_zero(const LinearObservable& obs);

struct ClosedFormCoefficient {
  double amplitude;
  double phase;
};

/// e^{real t} * sum_l amplitude_l t^l cos(imag t + phase_l)
struct ClosedFormTerm {
  double real;
  double imag;
  std::vector<ClosedFormCoefficient> coefficients;
};

struct ExpPolyClosedForm {
  std::vector<ClosedFormTerm> terms;

  double evaluate(double t) const;
};

/// Throws Error(IllConditioned) if the reconstruction misses by more than 1e-9
/// relative on a grid over [0, horizon].
ExpPolyClosedForm closed_form(const LinearObservable& obs, double horizon = 1.0);

enum class ZeroKind { Tangential, NonTangential };

struct ZeroBracket {
  Real lo;
  Real hi;
  unsigned contact_order;
  ZeroKind kind;
  /// Certified signs of z just left and right of the bracket.
  int sign_before;
  int sign_after;

  Real midpoint() const { return (lo + hi) / 2; }
};

struct ZeroClass {
  unsigned contact_order;
  ZeroKind kind;
};

struct IsolationConfig {
  /// Bracket width as a fraction of hi - lo; ignored when `width` is positive.
  Real relative_width = Real(1e-8);
  Real width = 0;
  unsigned max_depth = 64;
  std::size_t max_pieces = 1u << 20;
  /// Longest run of adjacent unresolved leaves before precision counts as exhausted.
  std::size_t max_unresolved_run = 512;
  /// Cap on the contact order; zero means dimension + 2.
  unsigned order_cap = 0;
};

/// Certified sign information for z and its derivatives on intervals.
class SignCertifier {
 public:
  explicit SignCertifier(const LinearObservable& obs);

  /// +1 or -1 if z^(k) has that sign on all of [a, b], else 0.
  int sign_on(unsigned k, const Real& a, const Real& b);
  int sign_at(unsigned k, const Real& t) { return sign_on(k, t, t); }

 private:
  struct State {
    Vector w;
    Real noise;
  };

  const State& state_at(const Real& t);
  const RowVector& output(unsigned k);

  const LinearObservable& obs_;
  Real norm_a_;
  std::vector<RowVector> outputs_;
  std::vector<Real> output_norms_;
  std::map<Real, State> cache_;
};

/// Zeros of z in the open interval (lo, hi), each bracketed, ordered by position.
std::vector<ZeroBracket> isolate_zeros(const LinearObservable& obs, const Real& lo, const Real& hi,
                                       const IsolationConfig& config = {});

/// Contact order of the single zero in (lo, hi).
ZeroClass classify_zero(const LinearObservable& obs, const Real& lo, const Real& hi,
                        const IsolationConfig& config = {});

}  // namespace ctmdp
