#pragma once

#include "ctmdp_reach/rational.hpp"

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <Eigen/Dense>

namespace ctmdp {

/// Working precision for all inexact numerics (binary128).
using Real = boost::multiprecision::float128;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

Real machine_epsilon();

Real to_real(const Rational& value);
/// Exact dyadic rational equal to a finite Real.
Rational to_rational(const Real& value);
double to_double(const Real& value);

Matrix to_real(const RationalMatrix& m);
Vector to_real_vector(const RationalVector& v);
RowVector to_real_row(const RationalVector& v);

Real inf_norm(const Matrix& m);
Real one_norm(const Matrix& m);
Real max_abs(const Vector& v);
Real abs_sum(const RowVector& v);

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
/// Returns the number of squarings through `squarings` if non-null.
Matrix expm(const Matrix& a, int* squarings = nullptr);

}  // namespace ctmdp
