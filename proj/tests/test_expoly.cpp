#include "support.hpp"

#include "ctmdp_reach/error.hpp"
#include "ctmdp_reach/expoly.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

using namespace ctmdp;

namespace {

const double pi = std::numbers::pi;

LinearObservable sine() {
  RationalMatrix a(2, 2);
  a(0, 1) = 1;
  a(1, 0) = -1;
  return LinearObservable(a, {0, 1}, {1, 0});
}

LinearObservable cosine() {
  RationalMatrix a(2, 2);
  a(0, 1) = 1;
  a(1, 0) = -1;
  return LinearObservable(a, {1, 0}, {1, 0});
}

LinearObservable one_minus_cos() {
  RationalMatrix a(3, 3);
  a(1, 2) = -1;
  a(2, 1) = 1;
  return LinearObservable(a, {1, 1, 0}, {1, -1, 0});
}

LinearObservable decay() {
  RationalMatrix a(1, 1);
  a(0, 0) = -1;
  return LinearObservable(a, {1}, {1});
}

LinearObservable random_observable(std::mt19937_64& rng, std::size_t m) {
  std::uniform_int_distribution<int> num(-3, 3);
  std::uniform_int_distribution<int> den(1, 2);
  RationalMatrix a(m, m);
  RationalVector x0(m), c(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) a(i, j) = Rational(num(rng), den(rng));
    x0[i] = Rational(num(rng), den(rng));
    c[i] = Rational(num(rng), den(rng));
  }
  return LinearObservable(a, x0, c);
}

Eigen::MatrixXd to_double_matrix(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = to_double(m(i, j));
  return out;
}

/// Values of z at lo + (i + 1/2) h for i < count, by repeated propagation.
std::vector<Real> dense_samples(const LinearObservable& obs, double lo, double hi, int count) {
  const Real h = Real(hi - lo) / count;
  Matrix step = expm(obs.system() * h);
  Vector w = expm(obs.system() * (Real(lo) + h / 2)) * obs.initial();
  std::vector<Real> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(obs.output().dot(w));
    w = step * w;
  }
  return out;
}

}  // namespace

TEST_CASE("evaluate examples") {
  CHECK(to_double(evaluate(sine(), Real(pi / 2))) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(evaluate(sine(), Real(0)) == 0);
  RationalMatrix zero(2, 2);
  LinearObservable flat(zero, {3, 5}, {2, -1});
  for (double t : {0.0, 1.0, -4.0, 20.0}) CHECK(evaluate(flat, Real(t)) == 1);
  for (double t : {0.3, 1.7, 5.2}) CHECK(std::abs(to_double(evaluate(sine(), Real(t))) - std::sin(t)) < 1e-15);
}

TEST_CASE("derivative examples") {
  LinearObservable d1 = derivative(sine(), 1);
  CHECK(evaluate(d1, Real(0)) == 1);
  LinearObservable d0 = derivative(sine(), 0);
  CHECK(d0.output() == sine().output());
  LinearObservable d2 = derivative(sine(), 2);
  CHECK(to_double(evaluate(d2, Real(pi / 2))) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("derivative matches finite differences on random observables") {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 20; ++iter) {
    LinearObservable obs = random_observable(rng, 2 + iter % 4);
    LinearObservable d = derivative(obs, 1);
    for (double t : {0.1, 0.5, 1.3}) {
      const Real h = Real(1e-6);
      Real fd = (evaluate(obs, Real(t) + h) - evaluate(obs, Real(t) - h)) / (2 * h);
      Real exact = evaluate(d, Real(t));
      Real scale = std::max(Real(1), Real(boost::multiprecision::abs(exact)));
      CHECK(to_double(boost::multiprecision::abs(fd - exact) / scale) < 1e-6);
    }
  }
}

TEST_CASE("matrix exponential: semigroup law and agreement with an independent double implementation") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 20; ++iter) {
    LinearObservable obs = random_observable(rng, 2 + iter % 4);
    const Matrix& a = obs.system();
    Real t = Real(0.7), s = Real(1.9);
    Matrix lhs = expm(a * (t + s));
    Matrix rhs = expm(a * t) * expm(a * s);
    Real scale = std::max(Real(1), inf_norm(lhs));
    CHECK(to_double(inf_norm(lhs - rhs) / scale) < 1e-10);

    Eigen::MatrixXd ref = (to_double_matrix(a) * 1.3).exp();
    Eigen::MatrixXd mine = to_double_matrix(expm(a * Real(1.3)));
    CHECK((ref - mine).lpNorm<Eigen::Infinity>() / std::max(1.0, ref.lpNorm<Eigen::Infinity>()) < 1e-12);
  }
}

TEST_CASE("closed_form examples") {
  ExpPolyClosedForm s = closed_form(sine(), 7.0);
  REQUIRE(s.terms.size() == 1);
  CHECK(s.terms[0].real == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.terms[0].imag == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(s.terms[0].coefficients.size() == 1);
  CHECK(s.terms[0].coefficients[0].amplitude == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.terms[0].coefficients[0].phase == doctest::Approx(-pi / 2).epsilon(1e-12));

  RationalMatrix diag(2, 2);
  diag(0, 0) = -1;
  diag(1, 1) = -2;
  ExpPolyClosedForm d = closed_form(LinearObservable(diag, {1, 1}, {1, 1}), 3.0);
  REQUIRE(d.terms.size() == 2);
  std::vector<double> rates{d.terms[0].real, d.terms[1].real};
  std::sort(rates.begin(), rates.end());
  CHECK(rates[0] == doctest::Approx(-2.0));
  CHECK(rates[1] == doctest::Approx(-1.0));
  for (const auto& t : d.terms) {
    CHECK(t.imag == 0.0);
    CHECK(t.coefficients[0].amplitude == doctest::Approx(1.0));
    CHECK(t.coefficients[0].phase == 0.0);
  }

  RationalMatrix jordan(2, 2);
  jordan(0, 0) = -1;
  jordan(0, 1) = 1;
  jordan(1, 1) = -1;
  ExpPolyClosedForm j = closed_form(LinearObservable(jordan, {0, 1}, {1, 0}), 5.0);
  REQUIRE(j.terms.size() == 1);
  CHECK(j.terms[0].real == doctest::Approx(-1.0));
  REQUIRE(j.terms[0].coefficients.size() == 2);
  CHECK(j.terms[0].coefficients[0].amplitude == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(j.terms[0].coefficients[1].amplitude == doctest::Approx(1.0));
  for (double t : {0.5, 2.0, 4.0}) CHECK(j.evaluate(t) == doctest::Approx(t * std::exp(-t)).epsilon(1e-12));
}

TEST_CASE("is_identically_zero examples") {
  LinearObservable cancel(RationalMatrix::identity(2), {1, 1}, {1, -1});
  CHECK(is_identically_zero(cancel));
  CHECK_FALSE(is_identically_zero(sine()));
  LinearObservable empty(RationalMatrix::identity(3), {0, 0, 0}, {1, 2, 3});
  CHECK(is_identically_zero(empty));
  LinearObservable inexact(Matrix::Identity(2, 2), Vector::Ones(2), RowVector{{Real(1), Real(-1)}});
  CHECK(is_identically_zero(inexact));
}

TEST_CASE("isolate_zeros examples") {
  auto z = isolate_zeros(sine(), Real(0.5), Real(7));
  REQUIRE(z.size() == 2);
  CHECK(z[0].kind == ZeroKind::NonTangential);
  CHECK(z[0].contact_order == 1);
  CHECK(std::abs(to_double(z[0].midpoint()) - pi) < 1e-6);
  CHECK(std::abs(to_double(z[1].midpoint()) - 2 * pi) < 1e-6);
  CHECK(z[0].lo < Real(std::numbers::pi_v<long double>));
  CHECK(z[0].hi > Real(std::numbers::pi_v<long double>));

  CHECK(isolate_zeros(decay(), Real(0), Real(5)).empty());

  auto t = isolate_zeros(one_minus_cos(), Real(3), Real(7));
  REQUIRE(t.size() == 1);
  CHECK(t[0].kind == ZeroKind::Tangential);
  CHECK(t[0].contact_order == 2);
  CHECK(std::abs(to_double(t[0].midpoint()) - 2 * pi) < 1e-6);
  CHECK(t[0].sign_before == t[0].sign_after);
}

TEST_CASE("isolate_zeros honours the width and open-interval semantics") {
  IsolationConfig cfg;
  cfg.width = Real(1e-12);
  auto z = isolate_zeros(sine(), Real(1), Real(4), cfg);
  REQUIRE(z.size() == 1);
  CHECK(z[0].hi - z[0].lo <= Real(1e-12));
  CHECK(isolate_zeros(sine(), Real(0), Real(3)).empty());
  Real pi_hi = Real(std::numbers::pi_v<long double>);
  CHECK(isolate_zeros(sine(), Real(1), pi_hi).size() <= 1);
}

TEST_CASE("isolate_zeros errors") {
  LinearObservable zero(RationalMatrix::identity(2), {1, 1}, {1, -1});
  CHECK_THROWS_WITH_AS(isolate_zeros(zero, Real(0), Real(1)), doctest::Contains("IdenticallyZero"), Error);
  IsolationConfig tight;
  tight.max_depth = 3;
  CHECK_THROWS_WITH_AS(isolate_zeros(sine(), Real(0.5), Real(7), tight), doctest::Contains("BudgetExceeded"), Error);
}

TEST_CASE("classify_zero examples") {
  ZeroClass s = classify_zero(sine(), Real(3.1), Real(3.2));
  CHECK(s.contact_order == 1);
  CHECK(s.kind == ZeroKind::NonTangential);
  ZeroClass t = classify_zero(one_minus_cos(), Real(6.2), Real(6.35));
  CHECK(t.contact_order == 2);
  CHECK(t.kind == ZeroKind::Tangential);
  ZeroClass c = classify_zero(cosine(), Real(1.5), Real(1.6));
  CHECK(c.contact_order == 1);
  CHECK(c.kind == ZeroKind::NonTangential);
  IsolationConfig cap;
  cap.order_cap = 1;
  CHECK_THROWS_WITH_AS(classify_zero(one_minus_cos(), Real(6.2), Real(6.35), cap),
                       doctest::Contains("OrderCapExceeded"), Error);
}

TEST_CASE("higher contact orders: t^3 has an odd, non-tangential zero of order 3") {
  // z = (t - 1)^3 realised by a 4-dimensional nilpotent shift.
  RationalMatrix a(4, 4);
  for (int i = 0; i < 3; ++i) a(i, i + 1) = 1;
  // Taylor coefficients of (t-1)^3 at 0: -1, 3, -6, 6.
  LinearObservable cube(a, {-1, 3, -6, 6}, {1, 0, 0, 0});
  auto z = isolate_zeros(cube, Real(0.25), Real(2));
  REQUIRE(z.size() == 1);
  CHECK(z[0].contact_order == 3);
  CHECK(z[0].kind == ZeroKind::NonTangential);
  CHECK(z[0].lo < 1);
  CHECK(z[0].hi > 1);
}

TEST_CASE("brackets are sound, complete against dense sampling, and obey the parity law") {
  std::mt19937_64 rng(17);
  int checked = 0;
  std::size_t total_brackets = 0;
  for (int iter = 0; iter < 30; ++iter) {
    LinearObservable obs = random_observable(rng, 2 + iter % 3);
    if (is_identically_zero(obs)) continue;
    const double lo = 0.0, hi = 4.0;
    std::vector<ZeroBracket> brackets;
    try {
      brackets = isolate_zeros(obs, Real(lo), Real(hi));
    } catch (const Error& e) {
      MESSAGE("skipped degenerate instance: " << e.what());
      continue;
    }
    ++checked;
    total_brackets += brackets.size();
    const Real delta = Real(1e-8) * Real(hi - lo);
    for (const auto& b : brackets) {
      CHECK(b.hi - b.lo <= delta);
      CHECK((b.kind == ZeroKind::NonTangential) == (b.contact_order % 2 == 1));
      Real zl = evaluate(obs, b.lo), zh = evaluate(obs, b.hi);
      if (b.kind == ZeroKind::NonTangential)
        CHECK(zl * zh < 0);
      else
        CHECK(zl * zh > 0);
      SignCertifier cert(obs);
      CHECK(cert.sign_on(b.contact_order, b.lo, b.hi) != 0);
    }
    const int count = 10000;
    std::vector<Real> v = dense_samples(obs, lo, hi, count);
    const double h = (hi - lo) / count;
    for (int i = 0; i + 1 < count; ++i) {
      if ((v[i] > 0 && v[i + 1] < 0) || (v[i] < 0 && v[i + 1] > 0)) {
        Real a = Real(lo + (i + 0.5) * h), b = Real(lo + (i + 1.5) * h);
        bool covered = false;
        for (const auto& z : brackets)
          if (z.hi >= a && z.lo <= b && z.kind == ZeroKind::NonTangential) covered = true;
        CHECK_MESSAGE(covered, "sign change near t = " << to_double(a) << " not bracketed");
      }
    }
  }
  CHECK(checked >= 25);
  CHECK(total_brackets >= 10);
}
