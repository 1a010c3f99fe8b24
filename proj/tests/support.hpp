#pragma once

#include "ctmdp_reach/ctmdp.hpp"
#include "ctmdp_reach/model_io.hpp"
#include "ctmdp_reach/numeric.hpp"

#include <random>
#include <string>

namespace testing {

inline std::string data_path(const std::string& rel) { return std::string(CTMDP_TEST_DATA) + "/" + rel; }

inline ctmdp::Ctmdp load_model(const std::string& rel) {
  return ctmdp::model_from_json(ctmdp::read_json_file(data_path(rel)));
}

inline ctmdp::SkolemInstance load_instance(const std::string& rel) {
  return ctmdp::skolem_from_json(ctmdp::read_json_file(data_path(rel)));
}

inline ctmdp::Rational random_rate(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(1, 8);
  std::uniform_int_distribution<int> den(1, 4);
  return ctmdp::Rational(num(rng), den(rng));
}

/// `ordinary` ordinary states followed by good (and bad when requested).
inline ctmdp::Ctmdp random_ctmdp(std::mt19937_64& rng, std::size_t ordinary, std::size_t actions, bool with_bad = false) {
  const std::size_t total = ordinary + 1 + (with_bad ? 1 : 0);
  const std::size_t good = ordinary;
  std::optional<std::size_t> bad;
  if (with_bad) bad = ordinary + 1;
  ctmdp::Ctmdp model(total, good, bad);
  std::bernoulli_distribution edge(0.5);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  for (std::size_t s = 0; s < total; ++s) {
    if (model.is_target(s)) {
      model.add_action(s, "idle");
      continue;
    }
    for (std::size_t a = 0; a < actions; ++a) {
      std::string name = "a" + std::to_string(a);
      model.add_action(s, name);
      bool any = false;
      for (std::size_t t = 0; t < total; ++t) {
        if (t == s || !edge(rng)) continue;
        model.set_rate(s, name, t, random_rate(rng));
        any = true;
      }
      if (!any) {
        std::size_t t = pick(rng);
        if (t == s) t = good;
        model.set_rate(s, name, t, random_rate(rng));
      }
    }
  }
  return model;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testing
