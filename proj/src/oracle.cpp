#include "ctmdp_reach/oracle.hpp"

#include "ctmdp_reach/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace ctmdp {

std::vector<Real> uniformize(const GeneratorMatrix& q, StateIndex good, const Rational& bound, double tol) {
  const std::size_t n = q.size();
  if (good >= n) throw Error(ErrorCode::InvalidArgument, "good state out of range");
  if (bound < 0) throw Error(ErrorCode::InvalidArgument, "bound must be non-negative");
  for (std::size_t j = 0; j < n; ++j)
    if (q(good, j) != 0) throw Error(ErrorCode::InvalidArgument, "good state must be absorbing");

  Matrix qr = to_real(q.entries());
  Real rate = 0;
  for (Eigen::Index i = 0; i < qr.rows(); ++i) rate = std::max(rate, Real(-qr(i, i)));
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  v(static_cast<Eigen::Index>(good)) = 1;
  if (rate == 0 || bound == 0) return std::vector<Real>(v.data(), v.data() + v.size());

  Matrix p = Matrix::Identity(qr.rows(), qr.cols()) + qr / rate;
  const Real lt = rate * to_real(bound);
  Real weight = boost::multiprecision::exp(-lt);
  Real cumulative = weight;
  Vector result = weight * v;
  const Real target = Real(1) - Real(tol);
  for (std::uint64_t k = 1; cumulative < target; ++k) {
    v = p * v;
    weight *= lt / Real(k);
    cumulative += weight;
    result += weight * v;
    if (k > 100000000) throw Error(ErrorCode::BudgetExceeded, "Poisson series did not converge");
  }
  return std::vector<Real>(result.data(), result.data() + result.size());
}

StationaryOptimum best_stationary(const Ctmdp& model, const Rational& bound, double tol) {
  const std::size_t count = model.decision_count();
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "a state has no action");
  if (count > 1000000) throw Error(ErrorCode::TooManyVectors, std::to_string(count) + " decision vectors");

  const std::size_t n = model.num_states();
  StationaryOptimum best{std::vector<Real>(n, Real(-1)), std::vector<DecisionVector>(n)};
  std::vector<std::size_t> choice(n, 0);
  for (std::size_t iter = 0; iter < count; ++iter) {
    DecisionVector d(choice);
    std::vector<Real> v = uniformize(generator_for(model, d), model.good(), bound, tol);
    for (StateIndex s = 0; s < n; ++s)
      if (v[s] > best.value[s]) {
        best.value[s] = v[s];
        best.achiever[s] = d;
      }
    // Odometer with the last state varying fastest gives lexicographic order.
    for (std::size_t s = n; s-- > 0;) {
      if (++choice[s] < model.actions(s).size()) break;
      choice[s] = 0;
    }
  }
  return best;
}

unsigned default_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CTMDP_REACH_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

namespace {

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// SplitMix64 stream seeded from (seed, path).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix(s);
    std::uint64_t p = path ^ 0xD1B54A32D192ED03ULL;
    state_ = a ^ splitmix(p);
  }
  /// Uniform in (0, 1].
  double next() { return static_cast<double>((splitmix(state_) >> 11) + 1) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

struct Choice {
  double exit_rate = 0;
  std::vector<double> cumulative;
  std::vector<StateIndex> targets;
};

}  // namespace

Estimate simulate(const Ctmdp& model, const PiecewisePolicy& policy, StateIndex start, const SimConfig& cfg) {
  if (cfg.paths == 0) throw Error(ErrorCode::InvalidArgument, "at least one path is required");
  if (start >= model.num_states()) throw Error(ErrorCode::InvalidArgument, "start state out of range");
  if (policy.bound != cfg.bound) throw Error(ErrorCode::InvalidArgument, "policy and simulation bounds differ");
  if (cfg.bound < 0) throw Error(ErrorCode::InvalidArgument, "bound must be non-negative");
  for (const auto& d : policy.schedule.decisions) check_decision(model, d);

  if (start == model.good()) return Estimate{1.0, 0.0, cfg.paths, cfg.paths};
  if (cfg.bound == 0) return Estimate{0.0, 0.0, cfg.paths, 0};

  const double horizon = to_double(to_real(cfg.bound));
  // Forward-time segments: segment i of the backward schedule covers forward
  // times (B - m_i, B - m_{i-1}].
  const auto& prefix = policy.schedule;
  const std::size_t segs = prefix.decisions.size();
  std::vector<double> fwd_end(segs);  // forward time at which backward segment i ends
  for (std::size_t i = 0; i < segs; ++i)
    fwd_end[i] = i == 0 ? horizon : horizon - to_double(prefix.switches[i - 1].midpoint());

  std::vector<std::vector<Choice>> table(model.num_states());
  for (StateIndex s = 0; s < model.num_states(); ++s)
    for (std::size_t a = 0; a < model.actions(s).size(); ++a) {
      Choice c;
      Rational total = 0;
      for (const auto& t : model.row(s, a)) total += t.rate;
      c.exit_rate = to_double(to_real(total));
      Rational acc = 0;
      for (const auto& t : model.row(s, a)) {
        acc += t.rate;
        c.cumulative.push_back(to_double(to_real(acc / total)));
        c.targets.push_back(t.target);
      }
      if (!c.cumulative.empty()) c.cumulative.back() = 1.0;
      table[s].push_back(std::move(c));
    }

  auto run_path = [&](std::uint64_t path) -> bool {
    PathRng rng(cfg.seed, path);
    StateIndex state = start;
    double t = 0;
    std::size_t seg = segs - 1;
    while (true) {
      if (state == model.good()) return true;
      while (seg > 0 && t >= fwd_end[seg]) --seg;
      const double seg_end = fwd_end[seg];
      const Choice& c = table[state][prefix.decisions[seg][state]];
      if (c.exit_rate == 0) {
        if (seg == 0) return false;
        t = seg_end;
        continue;
      }
      double dt = -std::log(rng.next()) / c.exit_rate;
      if (t + dt >= seg_end) {
        if (seg == 0) return false;
        t = seg_end;
        continue;
      }
      t += dt;
      double u = rng.next();
      auto it = std::lower_bound(c.cumulative.begin(), c.cumulative.end(), u);
      state = c.targets[static_cast<std::size_t>(it - c.cumulative.begin())];
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : default_threads();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, cfg.paths / 1024)));
  std::vector<std::uint64_t> hits(threads, 0);
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (cfg.paths + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      std::uint64_t lo = w * chunk;
      std::uint64_t hi = std::min(cfg.paths, lo + chunk);
      std::uint64_t count = 0;
      for (std::uint64_t p = lo; p < hi; ++p) count += run_path(p) ? 1 : 0;
      hits[w] = count;
    });
  for (auto& th : pool) th.join();

  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  const double n = static_cast<double>(cfg.paths);
  const double mean = static_cast<double>(total) / n;
  const double p = std::clamp(mean, 0.5 / n, 1.0 - 0.5 / n);
  return Estimate{mean, 3.0 * std::sqrt(p * (1.0 - p) / n), cfg.paths, total};
}

}  // namespace ctmdp
