#include "ctmdp_reach/skolem.hpp"

#include "ctmdp_reach/error.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>

namespace ctmdp {

void check_instance(const SkolemInstance& inst) {
  if (inst.order() == 0) throw Error(ErrorCode::InvalidArgument, "instance order must be positive");
  if (inst.initial.size() != inst.order())
    throw Error(ErrorCode::InvalidArgument, "initial vector length differs from the order");
  if (inst.bound <= 0) throw Error(ErrorCode::InvalidArgument, "bound must be positive");
}

CompanionSystem companion_form(const SkolemInstance& inst) {
  const std::size_t n = inst.order();
  if (inst.initial.size() != n) throw Error(ErrorCode::InvalidArgument, "initial vector length differs from the order");
  CompanionSystem sys{RationalMatrix(n, n), inst.initial, RationalVector(n)};
  for (std::size_t i = 0; i + 1 < n; ++i) sys.a(i, i + 1) = 1;
  for (std::size_t j = 0; j < n; ++j) sys.a(n - 1, j) = -inst.coefficients[n - 1 - j];
  sys.c[0] = 1;
  return sys;
}

SkolemInstance normalize_initial(const SkolemInstance& inst) {
  const std::size_t n = inst.order();
  if (inst.initial.size() != n) throw Error(ErrorCode::InvalidArgument, "initial vector length differs from the order");

  // p(s) = s^n + a_{n-1} s^{n-1} + ... + a_0, low degree first.
  RationalVector p(n + 1);
  for (std::size_t i = 0; i < n; ++i) p[i] = inst.coefficients[n - 1 - i];
  p[n] = 1;
  RationalVector sq(2 * n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j) sq[i + j] += p[i] * p[j];

  // Derivatives of z at zero up to order 2n - 2.
  RationalVector z = inst.initial;
  while (z.size() + 1 < 2 * n) {
    const std::size_t k = z.size() - n;
    Rational next = 0;
    for (std::size_t i = 0; i < n; ++i) next -= p[i] * z[i + k];
    z.push_back(next);
  }

  SkolemInstance out;
  out.bound = inst.bound;
  out.coefficients.resize(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) out.coefficients[2 * n - 1 - i] = sq[i];
  out.initial.resize(2 * n);
  for (std::size_t k = 1; k < 2 * n; ++k) out.initial[k] = Rational(k) * z[k - 1];
  return out;
}

DiagonalShift shift_diagonal(const RationalMatrix& a) {
  if (a.rows() == 0 || a.rows() != a.cols()) throw Error(ErrorCode::InvalidArgument, "expected a square matrix");
  DiagonalShift out{a, std::max(Rational(0), Rational(a(0, 0) + 1))};
  for (std::size_t i = 0; i < a.rows(); ++i) out.a(i, i) -= out.lambda0;
  return out;
}

RationalMatrix phi1(const RationalMatrix& a) {
  RationalMatrix out(2 * a.rows(), 2 * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const Rational alpha = a(i, j) > 0 ? a(i, j) : Rational(0);
      const Rational beta = a(i, j) < 0 ? Rational(-a(i, j)) : Rational(0);
      out(2 * i, 2 * j) = alpha;
      out(2 * i + 1, 2 * j + 1) = alpha;
      out(2 * i, 2 * j + 1) = beta;
      out(2 * i + 1, 2 * j) = beta;
    }
  return out;
}

RationalVector phi2(const RationalVector& x) {
  RationalVector out(2 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[2 * i] = x[i];
  return out;
}

Substochastic build_substochastic(const RationalMatrix& a, const RationalVector& x0) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n || x0.size() != n) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if (x0[0] != 0) throw Error(ErrorCode::InvalidArgument, "first initial entry must be zero");
  if (!(a(0, 0) < 0)) throw Error(ErrorCode::InvalidArgument, "entry (1,1) must be negative");

  Substochastic out;
  out.lambda = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rational row = 0;
    for (std::size_t j = 0; j < n; ++j) row += abs(a(i, j));
    out.lambda = std::max(out.lambda, row);
  }
  out.lambda += 1;

  out.p2 = phi1(a);
  for (std::size_t i = 0; i < 2 * n; ++i) out.p2(i, i) -= out.lambda;
  out.y2 = phi2(x0);
  RationalVector v = out.p2 * out.y2;
  out.beta.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    Rational b = std::max({Rational(0), Rational(-v[2 * i]), Rational(-v[2 * i + 1])});
    out.beta[2 * i] = b;
    out.beta[2 * i + 1] = b;
  }
  out.drift.resize(2 * n);
  out.gamma = 0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    out.drift[i] = v[i] + out.beta[i];
    out.gamma = std::max(out.gamma, out.drift[i]);
  }
  if (out.gamma == 0) throw Error(ErrorCode::DegenerateGamma, "gamma vanishes; the observable is identically zero");

  out.p = RationalMatrix(2 * n + 1, 2 * n + 1);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    for (std::size_t j = 0; j < 2 * n; ++j) out.p(i, j) = out.p2(i, j);
    out.p(i, 2 * n) = out.drift[i] / out.gamma;
  }
  return out;
}

Generators build_generators(const Substochastic& sub) {
  const std::size_t m = sub.p2.rows();  // 2n
  const std::size_t bad = m;
  const std::size_t good = m + 1;
  const std::size_t total = m + 2;

  Generators out;
  out.qa = RationalMatrix(total, total);
  out.theta.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    Rational sum = 0;
    for (std::size_t j = 0; j < m; ++j) {
      out.qa(i, j) = sub.p2(i, j);
      sum += sub.p2(i, j);
    }
    out.qa(i, good) = sub.drift[i] / sub.gamma;
    sum += out.qa(i, good);
    out.theta[i] = -sum;
    out.qa(i, bad) = out.theta[i];
  }

  RationalVector cbar(total);
  cbar[0] = 1;
  cbar[1] = -1;
  RationalVector v(total);
  v[good] = 1;
  std::optional<std::size_t> first;
  for (std::size_t k = 0; k <= total; ++k) {
    Rational mk = dot(cbar, v);
    out.moments.push_back(mk);
    if (mk != 0) {
      first = k;
      break;
    }
    v = out.qa * v;
  }
  if (!first) throw Error(ErrorCode::AllMomentsZero, "every moment vanishes; the instance is trivial");
  out.first_nonzero_moment = *first;

  const Rational& q12 = out.qa(0, 1);
  if (out.moments.back() > 0)
    out.r_perturb = std::min(Rational(1), q12);
  else
    out.r_perturb = -q12 / 2;
  if (out.r_perturb == 0) throw Error(ErrorCode::InvalidArgument, "entry (1,2) of Q^a is zero; no admissible perturbation");

  out.qb = out.qa;
  out.qb(0, 0) -= out.r_perturb;
  out.qb(0, 1) += out.r_perturb;
  return out;
}

ReductionOutput reduce(const SkolemInstance& inst) {
  check_instance(inst);
  SkolemInstance normalized = normalize_initial(inst);
  CompanionSystem comp = companion_form(normalized);
  DiagonalShift shift = shift_diagonal(comp.a);
  Substochastic sub;
  Generators gen;
  try {
    sub = build_substochastic(shift.a, comp.x0);
    gen = build_generators(sub);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateGamma || e.code() == ErrorCode::AllMomentsZero)
      throw Error(ErrorCode::TrivialInstance, e.what());
    throw;
  }

  const std::size_t total = gen.qa.rows();
  Ctmdp model(total, total - 1, total - 2);
  for (std::size_t s = 0; s < total; ++s) model.add_action(s, "a");
  model.add_action(0, "b");
  for (std::size_t s = 0; s < total; ++s)
    for (std::size_t t = 0; t < total; ++t) {
      if (s == t) continue;
      if (gen.qa(s, t) != 0) model.set_rate(s, "a", t, gen.qa(s, t));
      if (s == 0 && gen.qb(s, t) != 0) model.set_rate(s, "b", t, gen.qb(s, t));
    }

  return ReductionOutput{std::move(model), sub.gamma, sub.lambda, shift.lambda0, gen.r_perturb,
                         std::move(normalized), std::move(comp.a), std::move(shift.a), std::move(sub),
                         std::move(gen)};
}

namespace {

using Mp = boost::multiprecision::mpfr_float;

/// Dense square matrix at the current MPFR precision, row-major.
struct MpMatrix {
  std::size_t n = 0;
  std::vector<Mp> v;

  explicit MpMatrix(std::size_t dim) : n(dim), v(dim * dim, Mp(0)) {}
  Mp& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
  const Mp& operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

Mp to_mp(const Rational& q) {
  return Mp(boost::multiprecision::numerator(q).str()) / Mp(boost::multiprecision::denominator(q).str());
}

MpMatrix multiply(const MpMatrix& a, const MpMatrix& b) {
  MpMatrix c(a.n);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t k = 0; k < a.n; ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < a.n; ++j) c(i, j) += a(i, k) * b(k, j);
    }
  return c;
}

std::vector<Mp> mat_vec(const MpMatrix& a, const std::vector<Mp>& x) {
  std::vector<Mp> y(a.n, Mp(0));
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < a.n; ++j) y[i] += a(i, j) * x[j];
  return y;
}

/// e^{h M} by scaling and squaring with a Taylor core accurate to 2^-bits.
MpMatrix expm_mp(const RationalMatrix& m, const Mp& h, unsigned bits) {
  const std::size_t n = m.rows();
  MpMatrix a(n);
  Mp norm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Mp row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = to_mp(m(i, j)) * h;
      row += abs(a(i, j));
    }
    norm = std::max(norm, row);
  }
  unsigned squarings = 0;
  while (norm > Mp(0.5)) {
    norm /= 2;
    ++squarings;
  }
  const Mp scale = boost::multiprecision::ldexp(Mp(1), -static_cast<int>(squarings));
  for (auto& x : a.v) x *= scale;

  MpMatrix result(n), term(n);
  for (std::size_t i = 0; i < n; ++i) result(i, i) = term(i, i) = 1;
  const Mp floor = boost::multiprecision::ldexp(Mp(1), -static_cast<int>(bits));
  for (unsigned k = 1; k < 4 * bits; ++k) {
    term = multiply(term, a);
    Mp size = 0;
    for (auto& x : term.v) {
      x /= k;
      size = std::max(size, Mp(abs(x)));
    }
    for (std::size_t i = 0; i < n * n; ++i) result.v[i] += term.v[i];
    if (size < floor) break;
  }
  for (unsigned s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

/// c . e^{M t_i} x for the evenly spaced t_i = i h.
std::vector<Mp> trajectory(const RationalMatrix& m, const RationalVector& x0, const RationalVector& c, const Mp& h,
                           std::size_t samples, unsigned bits) {
  const MpMatrix step = expm_mp(m, h, bits);
  std::vector<Mp> x(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x[i] = to_mp(x0[i]);
  std::vector<Mp> out;
  for (std::size_t s = 0; s < samples; ++s) {
    if (s > 0) x = mat_vec(step, x);
    Mp value = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] != 0) value += to_mp(c[i]) * x[i];
    out.push_back(value);
  }
  return out;
}

double log2_of(const Rational& q) { return std::log2(std::max(1.0, std::abs(q.convert_to<double>()))); }

}  // namespace

double verify_identity(const SkolemInstance& inst, const ReductionOutput& out, std::size_t samples) {
  if (samples == 0) return 0;
  const CompanionSystem comp = companion_form(out.normalized);
  const std::size_t total = out.generators.qa.rows();
  RationalVector cbar(total);
  cbar[0] = 1;
  cbar[1] = -1;
  RationalVector ybar(total);
  ybar[total - 1] = 1;

  // Both sides lose about log2 of their growth factor to cancellation.
  Rational norm = 0;
  for (std::size_t i = 0; i < comp.a.rows(); ++i) {
    Rational row = 0;
    for (std::size_t j = 0; j < comp.a.cols(); ++j) row += abs(comp.a(i, j));
    norm = std::max(norm, row);
  }
  const double growth = (out.lambda + out.lambda0 + norm).convert_to<double>() * inst.bound.convert_to<double>();
  const unsigned bits = 192 + static_cast<unsigned>(std::ceil(log2_of(out.gamma) + growth * 1.4426950408889634));

  const unsigned saved = Mp::default_precision();
  Mp::default_precision(static_cast<unsigned>(std::ceil(bits * 0.30103)) + 10);
  double worst = 0;
  {
    const Mp b = to_mp(inst.bound);
    const Mp h = samples > 1 ? b / Mp(samples - 1) : Mp(0);
    const std::vector<Mp> lhs = trajectory(comp.a, comp.x0, comp.c, h, samples, bits);
    const std::vector<Mp> rhs = trajectory(out.generators.qa, ybar, cbar, h, samples, bits);
    const Mp gamma = to_mp(out.gamma);
    const Mp rate = to_mp(out.lambda + out.lambda0);
    for (std::size_t i = 0; i < samples; ++i) {
      const Mp t = h * Mp(i);
      const Mp r = gamma * exp(rate * t) * rhs[i];
      const Mp denom = std::max(Mp(abs(lhs[i])), Mp(1e-14));
      worst = std::max(worst, Mp(abs(lhs[i] - r) / denom).convert_to<double>());
    }
  }
  Mp::default_precision(saved);
  return worst;
}

}  // namespace ctmdp
