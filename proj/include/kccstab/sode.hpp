#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/expr.hpp"
#include "kccstab/taylor2.hpp"

namespace kccstab {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>;

/**
 * @brief Planar first-order system du/dt = f(u,v), dv/dt = g(u,v).
 *
 * Holds one evaluator per scalar type so jets can be pushed through the same field.
 * The optional guard marks points where the field is undefined.
 */
class VectorField2 {
 public:
  using ValueFn = std::function<std::array<double, 2>(double, double)>;
  using JetFn = std::function<std::array<Jet, 2>(const Jet&, const Jet&)>;
  using DualJetFn = std::function<std::array<DualJet, 2>(const DualJet&, const DualJet&)>;
  using Guard = std::function<bool(double, double)>;

  VectorField2() = default;

  /// Builds a field from a callable generic over the scalar type.
  template <class F>
  static VectorField2 native(F fn, Guard guard = {}, std::string description = {},
                             std::array<std::string, 2> names = {"u", "v"}) {
    VectorField2 vf;
    vf.value_ = [fn](double u, double v) -> std::array<double, 2> {
      const auto r = fn(u, v);
      return {r[0], r[1]};
    };
    vf.jet_ = [fn](const Jet& u, const Jet& v) -> std::array<Jet, 2> {
      const auto r = fn(u, v);
      return {r[0], r[1]};
    };
    vf.dual_ = [fn](const DualJet& u, const DualJet& v) -> std::array<DualJet, 2> {
      const auto r = fn(u, v);
      return {r[0], r[1]};
    };
    vf.guard_ = std::move(guard);
    vf.description_ = std::move(description);
    vf.names_ = std::move(names);
    return vf;
  }

  static VectorField2 from_expressions(const ExprAst& f, const ExprAst& g, const Params& params,
                                       std::array<std::string, 2> names = {"u", "v"}) {
    for (const auto& n : names)
      if (params.count(n)) throw InputError("'" + n + "' is both a state variable and a parameter");
    const std::vector<std::string> vars{names[0], names[1]};
    auto bf = std::make_shared<const BoundExpr>(f, vars, params);
    auto bg = std::make_shared<const BoundExpr>(g, vars, params);
    auto fn = [bf, bg](const auto& u, const auto& v) {
      using T = std::decay_t<decltype(u)>;
      const std::array<T, 2> s{u, v};
      return std::array<T, 2>{bf->eval<T>(s), bg->eval<T>(s)};
    };
    return native(fn, {}, "d" + names[0] + "/dt = " + f.source() + "; d" + names[1] + "/dt = " + g.source(),
                  std::move(names));
  }

  bool in_domain(double u, double v) const {
    if (!std::isfinite(u) || !std::isfinite(v)) return false;
    return !guard_ || guard_(u, v);
  }

  std::array<double, 2> operator()(double u, double v) const {
    check(u, v);
    return value_(u, v);
  }
  std::array<Jet, 2> operator()(const Jet& u, const Jet& v) const {
    check(primal(u), primal(v));
    return jet_(u, v);
  }
  std::array<DualJet, 2> operator()(const DualJet& u, const DualJet& v) const {
    check(primal(u), primal(v));
    return dual_(u, v);
  }

  Mat2 jacobian(double u, double v) const {
    const auto r = (*this)(Jet::variable(0, u, 2), Jet::variable(1, v, 2));
    return {{{r[0].grad(0), r[0].grad(1)}, {r[1].grad(0), r[1].grad(1)}}};
  }

  double divergence(double u, double v) const {
    const Mat2 j = jacobian(u, v);
    return j[0][0] + j[1][1];
  }

  const std::string& description() const noexcept { return description_; }
  const std::array<std::string, 2>& names() const noexcept { return names_; }
  const Guard& guard() const noexcept { return guard_; }

 private:
  void check(double u, double v) const {
    if (!in_domain(u, v)) throw DomainError("vector field evaluated outside its domain");
  }

  ValueFn value_;
  JetFn jet_;
  DualJetFn dual_;
  Guard guard_;
  std::string description_;
  std::array<std::string, 2> names_{"u", "v"};
};

/// G^i with its first and second partial derivatives over the seeds (x_1..x_n, y_1..y_n).
struct SemisprayValue {
  std::size_t n = 0;
  std::vector<Jet> jets;

  double G(std::size_t i) const { return jets[i].value(); }
  double dGdx(std::size_t i, std::size_t j) const { return jets[i].grad(j); }
  double dGdy(std::size_t i, std::size_t j) const { return jets[i].grad(n + j); }
  /// Second derivative of G^i over seeds a, b in 0..2n-1.
  double d2G(std::size_t i, std::size_t a, std::size_t b) const { return jets[i].hess(a, b); }
};

/**
 * @brief Coefficients G^i(x, y) of d²x^i/dt² + 2G^i(x, dx/dt) = 0.
 *
 * The evaluator writes n jets over 2n seeds. Copies own their evaluator state
 * (the elimination warm start), so one instance must not be shared across threads.
 */
class Semispray {
 public:
  using JetEval = std::function<void(std::span<const double> x, std::span<const double> y, std::span<Jet> out)>;
  using Guard = std::function<bool(std::span<const double> x, std::span<const double> y)>;

  Semispray() = default;
  Semispray(std::size_t n, JetEval eval, Guard guard = {}, std::string description = {})
      : n_(n), eval_(std::move(eval)), guard_(std::move(guard)), description_(std::move(description)) {
    if (n_ == 0 || 2 * n_ > kMaxSeeds) throw std::invalid_argument("Semispray: dimension must be 1 or 2");
  }

  /// One-dimensional semispray from a callable G(x, y) generic over the scalar type.
  template <class F>
  static Semispray native1(F g, std::function<bool(double, double)> guard = {}, std::string description = {}) {
    JetEval eval = [g](std::span<const double> x, std::span<const double> y, std::span<Jet> out) {
      out[0] = g(Jet::variable(0, x[0], 2), Jet::variable(1, y[0], 2));
    };
    Guard gd;
    if (guard) gd = [guard](std::span<const double> x, std::span<const double> y) { return guard(x[0], y[0]); };
    return Semispray(1, std::move(eval), std::move(gd), std::move(description));
  }

  std::size_t dim() const noexcept { return n_; }
  const std::string& description() const noexcept { return description_; }

  bool in_domain(std::span<const double> x, std::span<const double> y) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (!std::isfinite(x[i]) || !std::isfinite(y[i])) return false;
    return !guard_ || guard_(x, y);
  }

  SemisprayValue evaluate(std::span<const double> x, std::span<const double> y) const {
    if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("Semispray: point dimension mismatch");
    if (!in_domain(x, y)) throw DomainError("semispray evaluated outside its domain");
    SemisprayValue sv;
    sv.n = n_;
    sv.jets.assign(n_, Jet::constant(0.0, 2 * n_));
    eval_(x, y, sv.jets);
    for (const Jet& j : sv.jets)
      if (!std::isfinite(j.value())) throw DomainError("semispray value is not finite");
    return sv;
  }

  std::vector<double> G(std::span<const double> x, std::span<const double> y) const {
    const SemisprayValue sv = evaluate(x, y);
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = sv.G(i);
    return out;
  }

 private:
  std::size_t n_ = 0;
  JetEval eval_;
  Guard guard_;
  std::string description_;
};

inline SemisprayValue semispray_value(const Semispray& s, std::span<const double> x, std::span<const double> y) {
  return s.evaluate(x, y);
}

inline SemisprayValue semispray_value(const Semispray& s, double x, double y) {
  const double xs[1] = {x};
  const double ys[1] = {y};
  return s.evaluate(xs, ys);
}

/// Semispray from expressions G^1..G^n over x1..xn, y1..yn.
inline Semispray semispray_from_expr(std::span<const ExprAst> exprs, const Params& params) {
  const std::size_t n = exprs.size();
  if (n == 0 || 2 * n > kMaxSeeds) throw InputError("semispray dimension must be 1 or 2");
  std::vector<std::string> vars;
  for (std::size_t i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) vars.push_back("y" + std::to_string(i));
  auto bound = std::make_shared<std::vector<BoundExpr>>();
  std::string desc;
  for (const ExprAst& e : exprs) {
    bound->emplace_back(e, vars, params);
    desc += (desc.empty() ? "" : "; ") + e.source();
  }
  Semispray::JetEval eval = [bound, n](std::span<const double> x, std::span<const double> y, std::span<Jet> out) {
    std::array<Jet, kMaxSeeds> seeds;
    for (std::size_t i = 0; i < n; ++i) {
      seeds[i] = Jet::variable(i, x[i], 2 * n);
      seeds[n + i] = Jet::variable(n + i, y[i], 2 * n);
    }
    const std::span<const Jet> s(seeds.data(), 2 * n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (*bound)[i].eval<Jet>(s);
  };
  return Semispray(n, std::move(eval), {}, desc);
}

enum class Eliminate { U, V };

inline const char* to_string(Eliminate e) { return e == Eliminate::U ? "u" : "v"; }

struct EliminationSettings {
  double tolerance = 1e-14;
  int max_iterations = 50;
  double singular_threshold = 1e-10;
  std::optional<std::array<double, 2>> bracket;
  std::optional<double> initial_guess;
};

/**
 * @brief Planar system reduced to one second-order equation by eliminating u or v.
 *
 * With e the eliminated and r the retained variable, x := r and y := dr/dt = F_r(e, r).
 * The eliminated value e(x, y) is found by damped Newton and its derivatives follow
 * from the implicit function theorem.
 */
class EliminationReduction {
 public:
  EliminationReduction(VectorField2 source, Eliminate eliminated, EliminationSettings settings = {})
      : source_(std::move(source)), eliminated_(eliminated), settings_(settings), warm_(settings.initial_guess) {}

  const VectorField2& source() const noexcept { return source_; }
  Eliminate eliminated() const noexcept { return eliminated_; }
  const EliminationSettings& settings() const noexcept { return settings_; }

  /// Maps a state (u, v) to the phase point (x, y) of the reduced equation.
  Vec2 image(double u, double v) const {
    const auto fg = source_(u, v);
    return eliminated_ == Eliminate::U ? Vec2{v, fg[1]} : Vec2{u, fg[0]};
  }

  /// Recovers (u, v) from a phase point (x, y).
  Vec2 preimage(double x, double y) const {
    const double e = solve(x, y);
    return eliminated_ == Eliminate::U ? Vec2{e, x} : Vec2{x, e};
  }

  /// Solves F_r(e, x) = y for the eliminated variable.
  double solve(double x, double y) const {
    const double start = warm_.value_or(
        settings_.bracket ? 0.5 * ((*settings_.bracket)[0] + (*settings_.bracket)[1]) : 0.0);
    if (auto e = newton(x, y, start)) {
      warm_ = *e;
      return *e;
    }
    if (settings_.bracket) {
      if (auto e = bisect(x, y)) {
        warm_ = *e;
        return *e;
      }
    }
    throw NewtonDivergence("elimination: no root of the retained equation near the query point");
  }

  /// G^1 and its derivatives over seeds (x, y).
  Jet G(double x, double y) const {
    const double e = solve(x, y);
    const auto fr = eval_er(Jet::variable(0, e, 2), Jet::variable(1, x, 2))[1];
    const double ge = fr.grad(0);
    const double gr = fr.grad(1);
    const double gee = fr.hess(0, 0);
    const double ger = fr.hess(0, 1);
    const double grr = fr.hess(1, 1);
    check_regular(ge, fr.value());

    const double ex = -gr / ge;
    const double ey = 1.0 / ge;
    Jet E = Jet::constant(e, 2);
    E.grad(0) = ex;
    E.grad(1) = ey;
    E.hess(0, 0) = -(gee * ex * ex + 2.0 * ger * ex + grr) / ge;
    E.hess(0, 1) = -(gee * ex * ey + ger * ey) / ge;
    E.hess(1, 1) = -gee * ey * ey / ge;
    const Jet X = Jet::variable(0, x, 2);
    const Jet Y = Jet::variable(1, y, 2);

    const auto along_e = eval_er(lift(E, 1.0), lift(X, 0.0));
    const auto along_r = eval_er(lift(E, 0.0), lift(X, 1.0));
    const Jet Fe = real_part(along_e[0]);
    const Jet dFr_de = eps_part(along_e[1]);
    const Jet dFr_dr = eps_part(along_r[1]);
    return (dFr_de * Fe + dFr_dr * Y) * -0.5;
  }

  Semispray semispray() const {
    EliminationReduction copy = *this;
    Semispray::JetEval eval = [copy](std::span<const double> x, std::span<const double> y, std::span<Jet> out) {
      out[0] = copy.G(x[0], y[0]);
    };
    std::string desc = "reduction of (" + source_.description() + ") eliminating " + to_string(eliminated_);
    return Semispray(1, std::move(eval), {}, std::move(desc));
  }

 private:
  // Returns (F_e, F_r): the eliminated and retained equations at (e, r).
  template <class T>
  std::array<T, 2> eval_er(const T& e, const T& r) const {
    if (eliminated_ == Eliminate::U) return source_(e, r);
    const auto fg = source_(r, e);
    return {fg[1], fg[0]};
  }

  void check_regular(double de, double value) const {
    if (!(std::abs(de) >= settings_.singular_threshold * (1.0 + std::abs(value))))
      throw SingularElimination(std::string("elimination of ") + to_string(eliminated_) +
                                ": retained equation does not depend on the eliminated variable");
  }

  // Residual and slope of F_r(e, x) - y; nullopt outside the domain.
  std::optional<std::pair<double, double>> residual(double x, double y, double e) const {
    if (!std::isfinite(e)) return std::nullopt;
    const double u = eliminated_ == Eliminate::U ? e : x;
    const double v = eliminated_ == Eliminate::U ? x : e;
    if (!source_.in_domain(u, v)) return std::nullopt;
    try {
      const auto fr = eval_er(Jet::variable(0, e, 1), Jet::constant(x, 1))[1];
      if (!std::isfinite(fr.value()) || !std::isfinite(fr.grad(0))) return std::nullopt;
      return std::pair{fr.value() - y, fr.grad(0)};
    } catch (const DomainError&) {
      return std::nullopt;
    }
  }

  std::optional<double> newton(double x, double y, double e) const {
    auto r = residual(x, y, e);
    if (!r) return std::nullopt;
    const double scale = 1.0 + std::abs(y);
    for (int it = 0; it < settings_.max_iterations; ++it) {
      if (std::abs(r->first) <= settings_.tolerance * scale) {
        check_regular(r->second, y);
        return e;
      }
      check_regular(r->second, y);
      const double step = -r->first / r->second;
      double lambda = 1.0;
      bool moved = false;
      for (int k = 0; k < 30; ++k, lambda *= 0.5) {
        const double trial = e + lambda * step;
        const auto rt = residual(x, y, trial);
        if (rt && std::abs(rt->first) < std::abs(r->first)) {
          e = trial;
          r = rt;
          moved = true;
          break;
        }
      }
      if (!moved) {
        if (std::abs(r->first) <= 1e3 * settings_.tolerance * scale) {
          check_regular(r->second, y);
          return e;
        }
        return std::nullopt;
      }
    }
    if (std::abs(r->first) <= 1e3 * settings_.tolerance * scale) {
      check_regular(r->second, y);
      return e;
    }
    return std::nullopt;
  }

  std::optional<double> bisect(double x, double y) const {
    double lo = (*settings_.bracket)[0];
    double hi = (*settings_.bracket)[1];
    auto rlo = residual(x, y, lo);
    auto rhi = residual(x, y, hi);
    if (!rlo || !rhi || (rlo->first > 0.0) == (rhi->first > 0.0)) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto rm = residual(x, y, mid);
      if (!rm) return std::nullopt;
      if ((rm->first > 0.0) == (rlo->first > 0.0)) {
        lo = mid;
        rlo = rm;
      } else {
        hi = mid;
      }
    }
    return newton(x, y, 0.5 * (lo + hi));
  }

  static DualJet lift(const Jet& j, double eps) {
    DualJet r = DualJet::constant(Dual(j.value(), eps), j.seeds());
    for (std::size_t i = 0; i < j.seeds(); ++i) {
      r.grad(i) = Dual(j.grad(i));
      for (std::size_t k = i; k < j.seeds(); ++k) r.hess(i, k) = Dual(j.hess(i, k));
    }
    return r;
  }

  template <class Pick>
  static Jet project(const DualJet& d, Pick pick) {
    Jet r = Jet::constant(pick(d.value()), d.seeds());
    for (std::size_t i = 0; i < d.seeds(); ++i) {
      r.grad(i) = pick(d.grad(i));
      for (std::size_t k = i; k < d.seeds(); ++k) r.hess(i, k) = pick(d.hess(i, k));
    }
    return r;
  }
  static Jet real_part(const DualJet& d) {
    return project(d, [](const Dual& z) { return z.re; });
  }
  static Jet eps_part(const DualJet& d) {
    return project(d, [](const Dual& z) { return z.eps; });
  }

  VectorField2 source_;
  Eliminate eliminated_;
  EliminationSettings settings_;
  mutable std::optional<double> warm_;
};

inline Semispray reduce_planar(const VectorField2& vf, Eliminate eliminate, EliminationSettings settings = {}) {
  return EliminationReduction(vf, eliminate, settings).semispray();
}

}  // namespace kccstab
