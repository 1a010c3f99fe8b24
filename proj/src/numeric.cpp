#include "ctmdp_reach/numeric.hpp"

#include "ctmdp_reach/error.hpp"

#include <cmath>
#include <limits>

namespace ctmdp {

Real machine_epsilon() { return std::numeric_limits<Real>::epsilon(); }

Real to_real(const Rational& value) {
  const Integer& num = boost::multiprecision::numerator(value);
  const Integer& den = boost::multiprecision::denominator(value);
  return num.convert_to<Real>() / den.convert_to<Real>();
}

Rational to_rational(const Real& value) {
  if (!boost::multiprecision::isfinite(value))
    throw Error(ErrorCode::InvalidArgument, "cannot convert a non-finite value to a rational");
  if (value == 0) return Rational(0);
  int exponent = 0;
  Real mantissa = boost::multiprecision::frexp(boost::multiprecision::abs(value), &exponent);
  constexpr int digits = std::numeric_limits<Real>::digits;
  Real scaled = boost::multiprecision::ldexp(mantissa, digits);
  Real two64 = boost::multiprecision::ldexp(Real(1), 64);
  Real hi = boost::multiprecision::floor(scaled / two64);
  Real lo = scaled - hi * two64;
  Integer m = (Integer(hi.convert_to<unsigned long long>()) << 64) + Integer(lo.convert_to<unsigned long long>());
  int shift = exponent - digits;
  Rational r = shift >= 0 ? Rational(m << shift) : Rational(m, Integer(1) << -shift);
  return value < 0 ? Rational(-r) : r;
}

double to_double(const Real& value) { return value.convert_to<double>(); }

Matrix to_real(const RationalMatrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_real(m(i, j));
  return out;
}

Vector to_real_vector(const RationalVector& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = to_real(v[i]);
  return out;
}

RowVector to_real_row(const RationalVector& v) { return to_real_vector(v).transpose(); }

Real inf_norm(const Matrix& m) {
  Real best = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Real s = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += boost::multiprecision::abs(m(i, j));
    if (s > best) best = s;
  }
  return best;
}

Real one_norm(const Matrix& m) {
  Real best = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Real s = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += boost::multiprecision::abs(m(i, j));
    if (s > best) best = s;
  }
  return best;
}

Real max_abs(const Vector& v) {
  Real best = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) best = std::max(best, Real(boost::multiprecision::abs(v(i))));
  return best;
}

Real abs_sum(const RowVector& v) {
  Real s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += boost::multiprecision::abs(v(i));
  return s;
}

Matrix expm(const Matrix& a, int* squarings) {
  const Eigen::Index n = a.rows();
  Real norm = one_norm(a);
  int s = 0;
  while (norm > Real(0.5)) {
    norm /= 2;
    ++s;
  }
  Matrix b = a;
  if (s > 0) b /= boost::multiprecision::ldexp(Real(1), s);

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  const Real eps = machine_epsilon();
  for (int k = 1; k < 80; ++k) {
    term = (term * b) / Real(k);
    result += term;
    if (one_norm(term) <= eps * one_norm(result) * Real(0.01)) break;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  if (squarings) *squarings = s;
  return result;
}

}  // namespace ctmdp
