#include "ctmdp_reach/expoly.hpp"

#include "ctmdp_reach/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace ctmdp {

namespace {

using boost::multiprecision::abs;

void check_dimensions(const Matrix& a, const Vector& x0, const RowVector& c) {
  if (a.rows() != a.cols() || x0.size() != a.rows() || c.size() != a.rows())
    throw Error(ErrorCode::InvalidArgument, "observable dimensions are inconsistent");
}

}  // namespace

LinearObservable::LinearObservable(Matrix a, Vector x0, RowVector c)
    : a_(std::move(a)), x0_(std::move(x0)), c_(std::move(c)) {
  check_dimensions(a_, x0_, c_);
}

LinearObservable::LinearObservable(const RationalMatrix& a, const RationalVector& x0, const RationalVector& c)
    : a_(to_real(a)), x0_(to_real_vector(x0)), c_(to_real_row(c)), exact_(Exact{a, x0, c}) {
  check_dimensions(a_, x0_, c_);
}

Real evaluate(const LinearObservable& obs, const Real& t) {
  Matrix e = expm(obs.system() * t);
  return obs.output().dot(e * obs.initial());
}

LinearObservable derivative(const LinearObservable& obs, unsigned k) {
  if (obs.exact_) {
    RationalVector c = obs.exact_->c;
    for (unsigned i = 0; i < k; ++i) c = left_multiply(c, obs.exact_->a);
    return LinearObservable(obs.exact_->a, obs.exact_->x0, c);
  }
  RowVector c = obs.c_;
  for (unsigned i = 0; i < k; ++i) c = c * obs.a_;
  return LinearObservable(obs.a_, obs.x0_, c);
}

bool is_identically_zero(const LinearObservable& obs) {
  const std::size_t m = obs.dimension();
  if (obs.exact_) {
    RationalVector v = obs.exact_->x0;
    for (std::size_t k = 0; k < m; ++k) {
      if (dot(obs.exact_->c, v) != 0) return false;
      v = obs.exact_->a * v;
    }
    return true;
  }
  Vector v = obs.x0_;
  const Real norm_a = std::max(inf_norm(obs.a_), Real(1));
  Real scale = abs_sum(obs.c_) * max_abs(obs.x0_);
  for (std::size_t k = 0; k < m; ++k) {
    if (abs(obs.c_.dot(v)) > Real(1e-12) * scale) return false;
    v = obs.a_ * v;
    scale *= norm_a;
  }
  return true;
}

double ExpPolyClosedForm::evaluate(double t) const {
  double total = 0;
  for (const auto& term : terms) {
    double inner = 0;
    double power = 1;
    for (const auto& c : term.coefficients) {
      inner += c.amplitude * power * std::cos(term.imag * t + c.phase);
      power *= t;
    }
    total += std::exp(term.real * t) * inner;
  }
  return total;
}

ExpPolyClosedForm closed_form(const LinearObservable& obs, double horizon) {
  using LD = long double;
  using Complex = std::complex<LD>;
  using MatrixL = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorC = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  const auto m = static_cast<Eigen::Index>(obs.dimension());
  ExpPolyClosedForm form;
  if (m == 0) return form;

  MatrixL a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = obs.system()(i, j).convert_to<LD>();
  Eigen::EigenSolver<MatrixL> solver(a, false);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::IllConditioned, "eigenvalue computation failed");
  std::vector<Complex> eig(solver.eigenvalues().data(), solver.eigenvalues().data() + m);

  LD spectral = 1;
  for (const auto& e : eig) spectral = std::max(spectral, std::abs(e));
  const LD cluster_tol = 1e-6L * spectral;

  // Group eigenvalues that agree within the tolerance.
  std::vector<bool> used(eig.size(), false);
  struct Group {
    Complex center;
    Eigen::Index multiplicity;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < eig.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> members{i};
    used[i] = true;
    for (std::size_t p = 0; p < members.size(); ++p)
      for (std::size_t j = 0; j < eig.size(); ++j)
        if (!used[j] && std::abs(eig[j] - eig[members[p]]) <= cluster_tol) {
          used[j] = true;
          members.push_back(j);
        }
    Complex sum = 0;
    for (auto j : members) sum += eig[j];
    groups.push_back({sum / LD(members.size()), static_cast<Eigen::Index>(members.size())});
  }

  // Match derivatives at zero: z^(k)(0) = c A^k x0.
  VectorC rhs(m);
  Vector v = obs.initial();
  for (Eigen::Index k = 0; k < m; ++k) {
    rhs(k) = Complex(obs.output().dot(v).convert_to<LD>(), 0);
    v = obs.system() * v;
  }
  MatrixC basis = MatrixC::Zero(m, m);
  Eigen::Index col = 0;
  for (const auto& g : groups) {
    for (Eigen::Index l = 0; l < g.multiplicity; ++l, ++col) {
      for (Eigen::Index k = l; k < m; ++k) {
        LD falling = 1;
        for (Eigen::Index i = 0; i < l; ++i) falling *= LD(k - i);
        basis(k, col) = falling * std::pow(g.center, static_cast<int>(k - l));
      }
    }
  }
  VectorC alpha = basis.fullPivLu().solve(rhs);

  col = 0;
  for (const auto& g : groups) {
    const bool is_real = std::abs(g.center.imag()) <= cluster_tol;
    const bool upper = g.center.imag() > cluster_tol;
    if (is_real || upper) {
      ClosedFormTerm term;
      term.real = static_cast<double>(g.center.real());
      term.imag = is_real ? 0.0 : static_cast<double>(g.center.imag());
      for (Eigen::Index l = 0; l < g.multiplicity; ++l) {
        Complex coef = alpha(col + l);
        if (is_real) {
          LD re = coef.real();
          term.coefficients.push_back({static_cast<double>(std::abs(re)), re < 0 ? std::numbers::pi : 0.0});
        } else {
          term.coefficients.push_back({static_cast<double>(2 * std::abs(coef)), static_cast<double>(std::arg(coef))});
        }
      }
      form.terms.push_back(std::move(term));
    }
    col += g.multiplicity;
  }

  constexpr int samples = 64;
  std::vector<double> exact(samples + 1);
  double scale = 0;
  for (int i = 0; i <= samples; ++i) {
    double t = horizon * i / samples;
    exact[i] = to_double(evaluate(obs, Real(t)));
    scale = std::max(scale, std::abs(exact[i]));
  }
  for (int i = 0; i <= samples; ++i) {
    double t = horizon * i / samples;
    double err = std::abs(form.evaluate(t) - exact[i]);
    if (!(err <= 1e-9 * std::max(scale, 1e-300)) && !(scale == 0 && err == 0))
      throw Error(ErrorCode::IllConditioned, "closed form does not reproduce the observable");
  }
  return form;
}

SignCertifier::SignCertifier(const LinearObservable& obs) : obs_(obs), norm_a_(inf_norm(obs.system())) {}

const RowVector& SignCertifier::output(unsigned k) {
  while (outputs_.size() <= k) {
    RowVector next = outputs_.empty() ? obs_.output() : RowVector(outputs_.back() * obs_.system());
    output_norms_.push_back(abs_sum(next));
    outputs_.push_back(std::move(next));
  }
  return outputs_[k];
}

const SignCertifier::State& SignCertifier::state_at(const Real& t) {
  auto it = cache_.find(t);
  if (it != cache_.end()) return it->second;
  int squarings = 0;
  Matrix e = expm(obs_.system() * t, &squarings);
  Vector w = e * obs_.initial();
  const Real dim = Real(obs_.dimension() + 2);
  Real noise = 8 * dim * Real(squarings + 4) * machine_epsilon() * inf_norm(e) * max_abs(obs_.initial());
  return cache_.emplace(t, State{std::move(w), noise}).first->second;
}

int SignCertifier::sign_on(unsigned k, const Real& a, const Real& b) {
  const RowVector& ck = output(k);
  const Real ck_norm = output_norms_[k];
  if (ck_norm == 0) return 0;
  const Real mid = (a + b) / 2;
  const Real rho = (b - a) / 2;
  const State& st = state_at(mid);
  const Real g0 = ck.dot(st.w);
  const Real mag = abs(g0);
  const Real w_norm = max_abs(st.w);
  const Real nr = norm_a_ * rho;
  const Real growth = boost::multiprecision::exp(nr);
  const Real eps = machine_epsilon();
  const Real dim = Real(obs_.dimension() + 1);
  const Real noise = ck_norm * (st.noise + 16 * dim * eps * w_norm) * growth + 16 * eps * mag;
  if (mag <= noise) return 0;

  Real sum = 0;
  if (rho > 0) {
    constexpr unsigned max_terms = 48;
    Vector v = st.w;
    Real weight = 1;     // rho^j / j!
    Real tail_pow = nr;  // (N rho)^j / j!
    bool converged = false;
    for (unsigned j = 1; j <= max_terms; ++j) {
      v = obs_.system() * v;
      weight *= rho / Real(j);
      sum += abs(ck.dot(v)) * weight;
      if (sum + noise >= mag) return 0;
      tail_pow *= nr / Real(j + 1);
      Real tail = ck_norm * w_norm * tail_pow * growth;
      if (sum + noise + tail < mag) {
        converged = true;
        break;
      }
      if (tail_pow < eps * eps && j > 8) break;
    }
    if (!converged) return 0;
  }
  return g0 > 0 ? 1 : -1;
}

namespace {

struct Piece {
  Real a;
  Real b;
  int sign;
};

unsigned effective_cap(const LinearObservable& obs, const IsolationConfig& config) {
  return config.order_cap ? config.order_cap : static_cast<unsigned>(obs.dimension() + 2);
}

bool zero_free_cover(SignCertifier& cert, unsigned k, const Real& a, const Real& b, const Real& resolution,
                     unsigned depth) {
  for (unsigned j = 0; j <= k; ++j)
    if (cert.sign_on(j, a, b) != 0) return true;
  if (b - a <= resolution || depth >= 48) return false;
  Real m = (a + b) / 2;
  return zero_free_cover(cert, k, a, m, resolution, depth + 1) && zero_free_cover(cert, k, m, b, resolution, depth + 1);
}

/// Smallest k with z, ..., z^(k) free of common zeros on [lo, hi]; 0 means z itself has none.
unsigned contact_order(SignCertifier& cert, const Real& lo, const Real& hi, unsigned cap) {
  const Real resolution = (hi - lo) / 4096;
  for (unsigned k = 0; k <= cap; ++k)
    if (zero_free_cover(cert, k, lo, hi, resolution, 0)) return k;
  throw Error(ErrorCode::OrderCapExceeded, "contact order exceeds the cap of " + std::to_string(cap));
}

ZeroKind kind_for(unsigned k) { return k % 2 == 1 ? ZeroKind::NonTangential : ZeroKind::Tangential; }

/// Narrows [lo, hi] around the simple zero of z^(k0-1) until it is at most
/// `delta` wide and z^(k0) is certified sign-constant on it.
void refine(SignCertifier& cert, unsigned k0, Real& lo, Real& hi, int sign_lo, int sign_hi, const Real& delta) {
  const unsigned j = k0 - 1;
  int sl = j == 0 ? sign_lo : cert.sign_at(j, lo);
  int sr = j == 0 ? sign_hi : cert.sign_at(j, hi);
  for (int iter = 0; iter < 400; ++iter) {
    if (hi - lo <= delta && cert.sign_on(k0, lo, hi) != 0) return;
    if (sl == 0 || sr == 0 || sl == sr) break;
    Real m = (lo + hi) / 2;
    int sm = cert.sign_at(j, m);
    if (sm == 0) break;
    if (sm == sl)
      lo = m;
    else
      hi = m;
  }
  throw Error(ErrorCode::BudgetExceeded, "zero bracket could not be certified at the requested width");
}

}  // namespace

std::vector<ZeroBracket> isolate_zeros(const LinearObservable& obs, const Real& lo, const Real& hi,
                                       const IsolationConfig& config) {
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "isolation interval is empty");
  if (is_identically_zero(obs)) throw Error(ErrorCode::IdenticallyZero, "observable vanishes identically");

  const Real delta = config.width > 0 ? config.width : config.relative_width * (hi - lo);
  const Real leaf = delta / 2;
  const unsigned cap = effective_cap(obs, config);
  SignCertifier cert(obs);

  std::vector<Piece> pieces;
  struct Task {
    Real a;
    Real b;
    unsigned depth;
  };
  std::vector<Task> stack{{lo, hi, 0}};
  std::size_t run = 0;
  while (!stack.empty()) {
    Task task = stack.back();
    stack.pop_back();
    if (int s = cert.sign_on(0, task.a, task.b); s != 0) {
      pieces.push_back({task.a, task.b, s});
    } else if (task.b - task.a <= leaf) {
      if (!pieces.empty() && pieces.back().sign == 0)
        ++run;
      else
        run = 1;
      if (run > config.max_unresolved_run)
        throw Error(ErrorCode::BudgetExceeded, "working precision exhausted; sign undecidable over a wide region");
      pieces.push_back({task.a, task.b, 0});
    } else {
      if (task.depth >= config.max_depth)
        throw Error(ErrorCode::BudgetExceeded, "subdivision depth cap reached");
      Real m = (task.a + task.b) / 2;
      stack.push_back({m, task.b, task.depth + 1});
      stack.push_back({task.a, m, task.depth + 1});
    }
    if (pieces.size() + stack.size() > config.max_pieces)
      throw Error(ErrorCode::BudgetExceeded, "piece budget exhausted");
  }

  std::vector<ZeroBracket> brackets;
  std::size_t i = 0;
  while (i < pieces.size()) {
    if (pieces[i].sign != 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < pieces.size() && pieces[j + 1].sign == 0) ++j;
    const bool at_boundary = i == 0 || j + 1 == pieces.size();
    if (!at_boundary) {
      Real p = pieces[i].a;
      Real q = pieces[j].b;
      const int sl = pieces[i - 1].sign;
      const int sr = pieces[j + 1].sign;
      unsigned k = contact_order(cert, p, q, cap);
      bool keep = true;
      if (k == 0) {
        if (sl != sr) throw Error(ErrorCode::BudgetExceeded, "sign change without a certified zero");
        keep = false;
      } else if (sl != sr) {
        if (k % 2 == 0) throw Error(ErrorCode::BudgetExceeded, "even contact order at a sign change");
      } else if (k % 2 == 1) {
        if (k == 1 && cert.sign_on(1, p, q) != 0)
          keep = false;
        else
          throw Error(ErrorCode::BudgetExceeded, "odd contact order without a sign change");
      }
      if (keep) {
        refine(cert, k, p, q, sl, sr, delta);
        brackets.push_back(ZeroBracket{p, q, k, kind_for(k), sl, sr});
      }
    }
    i = j + 1;
  }
  return brackets;
}

ZeroClass classify_zero(const LinearObservable& obs, const Real& lo, const Real& hi, const IsolationConfig& config) {
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "classification interval is empty");
  if (is_identically_zero(obs)) throw Error(ErrorCode::IdenticallyZero, "observable vanishes identically");
  SignCertifier cert(obs);
  unsigned k = contact_order(cert, lo, hi, effective_cap(obs, config));
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "interval contains no zero");
  return ZeroClass{k, kind_for(k)};
}

}  // namespace ctmdp
