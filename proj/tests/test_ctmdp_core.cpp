#include "support.hpp"

#include "ctmdp_reach/error.hpp"

#include <doctest.h>

using namespace ctmdp;

namespace {

Ctmdp two_state(const Rational& rate_a, std::optional<Rational> rate_b = std::nullopt) {
  Ctmdp m(2, 1);
  m.add_action(0, "a");
  m.set_rate(0, "a", 1, rate_a);
  if (rate_b) {
    m.add_action(0, "b");
    m.set_rate(0, "b", 1, *rate_b);
  }
  m.add_action(1, "idle");
  return m;
}

bool has(const ValidationReport& r, ViolationKind k) {
  for (const auto& v : r.violations)
    if (v.kind == k) return true;
  return false;
}

}  // namespace

TEST_CASE("rational parsing is exact") {
  CHECK(parse_rational("7") == 7);
  CHECK(parse_rational("-3/4") == Rational(-3, 4));
  CHECK(parse_rational("1.25") == Rational(5, 4));
  CHECK(parse_rational("2.5e-3") == Rational(1, 400));
  CHECK(parse_rational(" 1e2 ") == 100);
  CHECK(parse_rational(".5") == Rational(1, 2));
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("abc"), Error);
  CHECK_THROWS_AS(parse_rational(""), Error);
  CHECK(format_rational(Rational(6, 4)) == "3/2");
  CHECK(format_rational(Rational(-5)) == "-5");
}

TEST_CASE("binary128 values convert to exact dyadic rationals") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    Real x = Real(u(rng)) / Real(3) * boost::multiprecision::ldexp(Real(1), static_cast<int>(i % 40) - 20);
    Rational r = to_rational(x);
    CHECK(to_real(r) == x);
    CHECK(boost::multiprecision::msb(boost::multiprecision::denominator(r)) ==
          boost::multiprecision::lsb(boost::multiprecision::denominator(r)));
  }
  CHECK(to_rational(Real(0.75)) == Rational(3, 4));
  CHECK(to_rational(Real(-2)) == -2);
}

TEST_CASE("validate accepts the minimal chain") {
  CHECK(validate(two_state(1)).ok());
  CHECK(validate(testing::load_model("models/chain.json")).ok());
}

TEST_CASE("validate reports a negative rate with coordinates") {
  ValidationReport r = validate(two_state(-1));
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].kind == ViolationKind::NegativeRate);
  CHECK(*r.violations[0].state == 0);
  CHECK(*r.violations[0].action == "a");
  CHECK(*r.violations[0].target == 1);
}

TEST_CASE("validate reports outgoing rates of good") {
  CHECK(has(validate(testing::load_model("invalid/good_not_absorbing.json")), ViolationKind::NonAbsorbingGood));
  Ctmdp m(3, 1, 2);
  m.add_action(0, "a");
  m.add_action(1, "x");
  m.add_action(2, "x");
  m.set_rate(0, "a", 1, 1);
  m.set_rate(2, "x", 0, 1);
  CHECK(has(validate(m), ViolationKind::NonAbsorbingBad));
}

TEST_CASE("validate reports empty action sets and foreign actions") {
  CHECK(has(validate(testing::load_model("invalid/empty_actions.json")), ViolationKind::EmptyActionSet));
  CHECK(has(validate(testing::load_model("invalid/foreign_action.json")), ViolationKind::CrossStateDependence));
  Ctmdp m = two_state(1);
  m.set_rate(0, "a", 0, 1);
  CHECK(has(validate(m), ViolationKind::SelfRate));
}

TEST_CASE("generator_for examples") {
  Ctmdp m = two_state(1, Rational(2));
  GeneratorMatrix qa = generator_for(m, DecisionVector({0, 0}));
  CHECK(qa(0, 0) == -1);
  CHECK(qa(0, 1) == 1);
  CHECK(qa(1, 0) == 0);
  CHECK(qa(1, 1) == 0);
  GeneratorMatrix qb = generator_for(m, DecisionVector({1, 0}));
  CHECK(qb(0, 0) == -2);
  CHECK(qb(0, 1) == 2);

  Ctmdp three(3, 2);
  three.add_action(0, "a");
  three.add_action(1, "a");
  three.add_action(2, "a");
  three.set_rate(0, "a", 1, 1);
  three.set_rate(0, "a", 2, 2);
  CHECK(generator_for(three, first_decision(three))(0, 0) == -3);
  CHECK_THROWS_AS(generator_for(three, DecisionVector({1, 0, 0})), Error);
}

TEST_CASE("exit_rate and jump_probability examples") {
  Ctmdp m = two_state(1, Rational(2));
  DecisionVector db({1, 0});
  CHECK(exit_rate(m, db, 0) == 2);
  CHECK(exit_rate(m, db, 1) == 0);

  Ctmdp three(3, 2);
  for (int s = 0; s < 3; ++s) three.add_action(s, "a");
  three.set_rate(0, "a", 1, 1);
  three.set_rate(0, "a", 2, 1);
  DecisionVector d = first_decision(three);
  CHECK(exit_rate(three, d, 0) == 2);
  CHECK(jump_probability(three, d, 0, 1) == Rational(1, 2));
  CHECK(jump_probability(three, d, 0, 2) == Rational(1, 2));
  CHECK(jump_probability(m, DecisionVector({0, 0}), 0, 1) == 1);
  CHECK_THROWS_WITH_AS(jump_probability(three, d, 2, 0), doctest::Contains("AbsorbingSource"), Error);
}

TEST_CASE("generator invariants hold exactly on random models") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 40; ++iter) {
    Ctmdp m = testing::random_ctmdp(rng, 1 + iter % 5, 1 + iter % 3, iter % 2 == 0);
    REQUIRE(validate(m).ok());
    std::uniform_int_distribution<std::size_t> coin(0, 7);
    std::vector<std::size_t> c1, c2;
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      c1.push_back(coin(rng) % m.actions(s).size());
      c2.push_back(coin(rng) % m.actions(s).size());
    }
    DecisionVector d1(c1), d2(c2);
    GeneratorMatrix q1 = generator_for(m, d1);
    GeneratorMatrix q2 = generator_for(m, d2);
    CHECK(generator_defect(q1.entries()).empty());
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      if (d1[s] == d2[s]) CHECK(q1.row(s) == q2.row(s));
      if (m.is_target(s)) CHECK(exit_rate(m, d1, s) == 0);
      if (exit_rate(m, d1, s) == 0) continue;
      Rational total = 0;
      for (StateIndex t = 0; t < m.num_states(); ++t)
        if (t != s) total += jump_probability(m, d1, s, t);
      CHECK(total == 1);
    }
  }
}

TEST_CASE("GeneratorMatrix rejects non-generators") {
  RationalMatrix m(2, 2);
  m(0, 0) = -1;
  m(0, 1) = 2;
  CHECK_THROWS_AS(GeneratorMatrix{m}, Error);
  m(0, 1) = 1;
  CHECK_NOTHROW(GeneratorMatrix{m});
  m(1, 0) = -1;
  m(1, 1) = 1;
  CHECK_THROWS_AS(GeneratorMatrix{m}, Error);
}

TEST_CASE("reach spec checks") {
  Ctmdp m = two_state(1);
  CHECK_NOTHROW(check_reach_spec(m, ReachSpec{1, {Rational(1, 2), 0}}));
  CHECK_THROWS_AS(check_reach_spec(m, ReachSpec{0, {Rational(1, 2), 0}}), Error);
  CHECK_THROWS_AS(check_reach_spec(m, ReachSpec{1, {Rational(3, 2), 0}}), Error);
}

TEST_CASE("model files round-trip and reject floats") {
  Ctmdp m = testing::load_model("models/ctmc_with_sink.json");
  CHECK(m.bad().has_value());
  CHECK(m.rates().at(RateKey{0, "a", 3}) == Rational(1, 4));
  Ctmdp back = model_from_json(model_to_json(m));
  CHECK(back.rates() == m.rates());
  CHECK(back.good() == m.good());
  CHECK_THROWS_WITH_AS(testing::load_model("invalid/float_rate.json"), doctest::Contains("ParseError"), Error);
  CHECK_THROWS_WITH_AS(testing::load_model("invalid/malformed.json"), doctest::Contains("ParseError"), Error);
}
