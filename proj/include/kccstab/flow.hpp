#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/format.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/ode.hpp"
#include "kccstab/sode.hpp"

namespace kccstab {

/// Flow of a planar first-order system.
inline Trajectory integrate(const VectorField2& vf, Vec2 x0, double t0, double t1, const OdeOptions& opt = {},
                            const StepObserver& observer = {}) {
  const OdeRhs rhs = [&vf](double, std::span<const double> x, std::span<double> dx) {
    const auto r = vf(x[0], x[1]);
    dx[0] = r[0];
    dx[1] = r[1];
  };
  const StateGuard guard = [&vf](std::span<const double> x) { return vf.in_domain(x[0], x[1]); };
  return integrate_ode(rhs, x0, t0, t1, opt, guard, observer);
}

/// Flow of x'' + 2G(x, x') = 0 on the phase state (x_1..x_n, y_1..y_n).
inline Trajectory integrate(const Semispray& s, std::span<const double> x0, std::span<const double> y0, double t0,
                            double t1, const OdeOptions& opt = {}) {
  const std::size_t n = s.dim();
  if (x0.size() != n || y0.size() != n) throw std::invalid_argument("integrate: state dimension mismatch");
  std::vector<double> z(x0.begin(), x0.end());
  z.insert(z.end(), y0.begin(), y0.end());
  const OdeRhs rhs = [&s, n](double, std::span<const double> st, std::span<double> dz) {
    const std::vector<double> G = s.G(st.first(n), st.subspan(n, n));
    for (std::size_t i = 0; i < n; ++i) {
      dz[i] = st[n + i];
      dz[n + i] = -2.0 * G[i];
    }
  };
  const StateGuard guard = [&s, n](std::span<const double> st) { return s.in_domain(st.first(n), st.subspan(n, n)); };
  return integrate_ode(rhs, z, t0, t1, opt, guard);
}

enum class DeviationMode { RawVariational, Covariant };

inline std::string_view to_string(DeviationMode m) {
  return m == DeviationMode::RawVariational ? "raw" : "covariant";
}

/**
 * @brief Deviation vector along a semispray trajectory.
 *
 * RawVariational: ξ solves ξ'' + 2Nξ' + 2(∂G/∂x)ξ = 0.
 * Covariant: ξ holds components in a frame E parallel along the trajectory
 * (E' = −N·E, E(0) = I), which turns D²ξ/dt² = P·ξ into ξ'' = E⁻¹PE·ξ.
 * `xi_lab` maps the covariant components back (E·ξ) and equals the raw solution.
 */
struct DeviationTrack {
  DeviationMode mode = DeviationMode::RawVariational;
  std::size_t n = 0;
  std::vector<double> t;
  std::vector<std::vector<double>> base;
  std::vector<std::vector<double>> xi;
  std::vector<std::vector<double>> dxi;
  std::vector<std::vector<double>> xi_lab;
  IntegratorStats stats;
  bool truncated = false;
};

inline DeviationTrack integrate_deviation(const Semispray& s, std::span<const double> x0, std::span<const double> y0,
                                          std::span<const double> W, double t0, double t1, DeviationMode mode,
                                          const OdeOptions& opt = {}) {
  const std::size_t n = s.dim();
  if (x0.size() != n || y0.size() != n || W.size() != n)
    throw std::invalid_argument("integrate_deviation: dimension mismatch");
  double wn = 0.0;
  for (double w : W) wn += w * w;
  wn = std::sqrt(wn);
  if (!(wn > 0.0) || !std::isfinite(wn)) throw InvalidParameter("deviation seed direction must be nonzero");

  // Layout: x(n), y(n), [E(n*n)], xi(n), dxi(n).
  const bool cov = mode == DeviationMode::Covariant;
  const std::size_t e_off = 2 * n;
  const std::size_t xi_off = e_off + (cov ? n * n : 0);
  const std::size_t dxi_off = xi_off + n;
  std::vector<double> z(dxi_off + n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = x0[i];
    z[n + i] = y0[i];
    z[dxi_off + i] = W[i] / wn;
  }
  if (cov)
    for (std::size_t i = 0; i < n; ++i) z[e_off + i * n + i] = 1.0;

  const OdeRhs rhs = [&](double, std::span<const double> st, std::span<double> dz) {
    const auto xs = st.first(n);
    const auto ys = st.subspan(n, n);
    const SemisprayValue sv = s.evaluate(xs, ys);
    for (std::size_t i = 0; i < n; ++i) {
      dz[i] = ys[i];
      dz[n + i] = -2.0 * sv.G(i);
      dz[xi_off + i] = st[dxi_off + i];
    }
    if (!cov) {
      for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          a -= 2.0 * sv.dGdy(i, j) * st[dxi_off + j] + 2.0 * sv.dGdx(i, j) * st[xi_off + j];
        dz[dxi_off + i] = a;
      }
      return;
    }
    const KccInvariants k = detail::kcc_from_value(sv, xs, ys);
    auto E = [&](std::size_t i, std::size_t j) { return st[e_off + i * n + j]; };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double a = 0.0;
        for (std::size_t l = 0; l < n; ++l) a -= k.N(i, l) * E(l, j);
        dz[e_off + i * n + j] = a;
      }
    // PE·xi, then solve E·r = PE·xi.
    std::array<double, 2> pe{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j) pe[i] += k.P(i, l) * E(l, j) * st[xi_off + j];
    if (n == 1) {
      dz[dxi_off] = pe[0] / E(0, 0);
    } else {
      const double det = E(0, 0) * E(1, 1) - E(0, 1) * E(1, 0);
      if (det == 0.0) throw DomainError("parallel frame became singular");
      dz[dxi_off] = (E(1, 1) * pe[0] - E(0, 1) * pe[1]) / det;
      dz[dxi_off + 1] = (-E(1, 0) * pe[0] + E(0, 0) * pe[1]) / det;
    }
  };
  const StateGuard guard = [&s, n](std::span<const double> st) { return s.in_domain(st.first(n), st.subspan(n, n)); };
  const Trajectory tr = integrate_ode(rhs, z, t0, t1, opt, guard);

  DeviationTrack out;
  out.mode = mode;
  out.n = n;
  out.t = tr.t;
  out.stats = tr.stats;
  out.truncated = tr.truncated;
  for (const auto& st : tr.states) {
    out.base.emplace_back(st.begin(), st.begin() + 2 * n);
    out.xi.emplace_back(st.begin() + xi_off, st.begin() + xi_off + n);
    out.dxi.emplace_back(st.begin() + dxi_off, st.begin() + dxi_off + n);
    std::vector<double> lab(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        lab[i] += (cov ? st[e_off + i * n + j] : (i == j ? 1.0 : 0.0)) * st[xi_off + j];
    out.xi_lab.push_back(std::move(lab));
  }
  return out;
}

/// Deviation along the span of an existing semispray trajectory (state layout x, y).
inline DeviationTrack integrate_deviation(const Trajectory& base, const Semispray& s, std::span<const double> W,
                                          DeviationMode mode, const OdeOptions& opt = {}) {
  const std::size_t n = s.dim();
  if (base.size() == 0 || base.dim() != 2 * n)
    throw std::invalid_argument("integrate_deviation: base trajectory does not match the semispray");
  const auto& z0 = base.states.front();
  return integrate_deviation(s, std::span<const double>(z0.data(), n), std::span<const double>(z0.data() + n, n), W,
                             base.t.front(), base.t.back(), mode, opt);
}

/// M = exp(∫ div V dt) along a stored cycle, Simpson per step with Hermite midpoints.
inline double multiplier_divergence(const VectorField2& vf, const Trajectory& cycle, double T) {
  if (cycle.size() < 2) throw std::invalid_argument("multiplier_divergence: cycle has no steps");
  const double span = cycle.t.back() - cycle.t.front();
  if (std::abs(span - T) > 1e-9 * (1.0 + std::abs(T)))
    throw std::invalid_argument("multiplier_divergence: trajectory does not cover one period");
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < cycle.size(); ++k) {
    const double h = cycle.t[k + 1] - cycle.t[k];
    const auto& a = cycle.states[k];
    const auto& b = cycle.states[k + 1];
    const auto& fa = cycle.derivatives[k];
    const auto& fb = cycle.derivatives[k + 1];
    const double mu = hermite(0.5, h, a[0], fa[0], b[0], fb[0]);
    const double mv = hermite(0.5, h, a[1], fa[1], b[1], fb[1]);
    integral += h / 6.0 * (vf.divergence(a[0], a[1]) + 4.0 * vf.divergence(mu, mv) + vf.divergence(b[0], b[1]));
  }
  return std::exp(integral);
}

struct Section {
  Vec2 anchor{};
  Vec2 normal{};
};

enum class CycleClass { StableCycle, UnstableCycle, Marginal };

inline std::string_view to_string(CycleClass c) {
  switch (c) {
    case CycleClass::StableCycle: return "StableCycle";
    case CycleClass::UnstableCycle: return "UnstableCycle";
    case CycleClass::Marginal: return "Marginal";
  }
  return "?";
}

inline OdeOptions tight_ode_options() {
  OdeOptions o;
  o.rtol = 1e-11;
  o.atol = 1e-13;
  return o;
}

struct LimitCycleOptions {
  double transient = 200.0;  ///< pre-integration when no section is given
  double horizon = 1000.0;   ///< NoReturn after this much time without a crossing
  double tolerance = 1e-9;   ///< return-map fixed point, relative to the section scale
  double fd_step = 1e-4;     ///< secant step for dR/ds, relative to the section scale
  double marginal_tolerance = 1e-6;
  int max_iterations = 60;
  OdeOptions ode = tight_ode_options();
};

struct LimitCycleReport {
  Section section;
  Vec2 point{};         ///< return-map fixed point q*
  double s_star = 0.0;  ///< coordinate of q* along the section
  double period = 0.0;
  double multiplier = 0.0;
  double multiplier_secant = 0.0;
  double multiplier_divergence = 0.0;
  CycleClass cls = CycleClass::Marginal;
  double closure = 0.0;  ///< |φ^T(q*) − q*|
  int iterations = 0;
  Trajectory cycle;
};

namespace detail {

struct ReturnHit {
  double s;
  double tau;
};

class ReturnMap {
 public:
  ReturnMap(const VectorField2& vf, Section sec, const LimitCycleOptions& opt) : vf_(vf), opt_(opt) {
    const double nn = std::hypot(sec.normal[0], sec.normal[1]);
    if (!(nn > 0.0)) throw InvalidParameter("section normal must be nonzero");
    anchor_ = sec.anchor;
    normal_ = {sec.normal[0] / nn, sec.normal[1] / nn};
    tangent_ = {-normal_[1], normal_[0]};
  }

  Vec2 point(double s) const { return {anchor_[0] + s * tangent_[0], anchor_[1] + s * tangent_[1]}; }
  double coordinate(Vec2 p) const { return tangent_[0] * (p[0] - anchor_[0]) + tangent_[1] * (p[1] - anchor_[1]); }

  ReturnHit operator()(double s) const {
    const Vec2 p = point(s);
    std::optional<ReturnHit> hit;
    auto sigma = [&](std::span<const double> x) {
      return normal_[0] * (x[0] - anchor_[0]) + normal_[1] * (x[1] - anchor_[1]);
    };
    const StepObserver obs = [&](const StepView& st) {
      // The first step leaves the section itself; round-off there is not a return.
      if (st.t0 == 0.0) return true;
      const double s0 = sigma(st.x0);
      const double s1 = sigma(st.x1);
      if (!(s0 < 0.0 && s1 >= 0.0)) return true;
      double lo = 0.0, hi = 1.0;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (sigma(hermite(mid, st)) < 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double th = 0.5 * (lo + hi);
      const std::vector<double> xc = hermite(th, st);
      hit = ReturnHit{tangent_[0] * (xc[0] - anchor_[0]) + tangent_[1] * (xc[1] - anchor_[1]),
                      st.t0 + th * (st.t1 - st.t0)};
      return false;
    };
    const Trajectory tr = integrate(vf_, p, 0.0, opt_.horizon, opt_.ode, obs);
    if (!hit) {
      throw NoReturn(tr.truncated ? "orbit left the domain before returning to the section"
                                  : "no return to the section within the horizon");
    }
    return *hit;
  }

  const Vec2& normal() const { return normal_; }

 private:
  const VectorField2& vf_;
  const LimitCycleOptions& opt_;
  Vec2 anchor_{};
  Vec2 normal_{};
  Vec2 tangent_{};
};

}  // namespace detail

/**
 * @brief Locates a periodic orbit through a transversal section and estimates its multiplier.
 *
 * Without a section the seed orbit is integrated for `transient` time and the section
 * is placed at the end point, normal to the flow. With a section, iteration starts at
 * the seed's projection onto it. The return map's fixed point is
 * refined by secant iteration. The multiplier is computed from the divergence
 * integral and cross-checked by a central difference of the return map.
 */
inline LimitCycleReport find_limit_cycle(const VectorField2& vf, Vec2 seed, std::optional<Section> section = {},
                                         const LimitCycleOptions& opt = {}) {
  Section sec;
  if (section) {
    sec = *section;
  } else {
    const Trajectory pre = integrate(vf, seed, 0.0, opt.transient, opt.ode);
    if (pre.truncated) throw NoReturn("seed orbit left the domain during the transient");
    sec.anchor = {pre.back()[0], pre.back()[1]};
    const auto V = vf(sec.anchor[0], sec.anchor[1]);
    const double speed = std::hypot(V[0], V[1]);
    if (!(speed > 1e-8 * (1.0 + std::hypot(sec.anchor[0], sec.anchor[1]))))
      throw NoReturn("seed orbit settled on an equilibrium");
    sec.normal = {V[0] / speed, V[1] / speed};
  }
  const detail::ReturnMap R(vf, sec, opt);
  const double scale = 1.0 + std::hypot(sec.anchor[0], sec.anchor[1]);
  const double tol = opt.tolerance * scale;

  LimitCycleReport rep;
  rep.section = {sec.anchor, R.normal()};
  // A given section starts from the seed's projection onto it.
  double s0 = section ? R.coordinate(seed) : 0.0;
  detail::ReturnHit h0 = R(s0);
  double F0 = h0.s - s0;
  double s_star = s0;
  detail::ReturnHit hit = h0;
  int it = 0;
  if (std::abs(F0) > tol) {
    double s1 = h0.s;
    detail::ReturnHit h1 = R(s1);
    double F1 = h1.s - s1;
    for (it = 1; std::abs(F1) > tol; ++it) {
      if (it >= opt.max_iterations) throw NotConverged("return-map iteration did not converge");
      if (F1 == F0) throw NotConverged("return-map secant stalled");
      const double s2 = s1 - F1 * (s1 - s0) / (F1 - F0);
      s0 = s1;
      F0 = F1;
      s1 = s2;
      h1 = R(s1);
      F1 = h1.s - s1;
    }
    s_star = s1;
    hit = h1;
  }
  rep.iterations = it;
  rep.s_star = s_star;
  rep.point = R.point(s_star);
  rep.period = hit.tau;

  const double fd = opt.fd_step * scale;
  rep.multiplier_secant = (R(s_star + fd).s - R(s_star - fd).s) / (2.0 * fd);

  rep.cycle = integrate(vf, rep.point, 0.0, rep.period, opt.ode);
  const auto& end = rep.cycle.back();
  rep.closure = std::hypot(end[0] - rep.point[0], end[1] - rep.point[1]);
  if (rep.closure > 1e-6 * scale) throw NotConverged("periodic orbit does not close");
  rep.multiplier_divergence = multiplier_divergence(vf, rep.cycle, rep.period);
  rep.multiplier = rep.multiplier_divergence;
  const double m = std::abs(rep.multiplier);
  rep.cls = std::abs(m - 1.0) <= opt.marginal_tolerance ? CycleClass::Marginal
            : m < 1.0                                    ? CycleClass::StableCycle
                                                         : CycleClass::UnstableCycle;
  return rep;
}

/// CSV with columns t, names...
inline void write_csv(std::ostream& os, const Trajectory& tr, std::span<const std::string> names) {
  os << 't';
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << format_number(tr.t[k]);
    for (double v : tr.states[k]) os << ',' << format_number(v);
    os << '\n';
  }
}

/// CSV with columns t, x.., y.., xi.., dxi.. and, in covariant mode, xi_lab..
inline void write_csv(std::ostream& os, const DeviationTrack& d) {
  const std::size_t n = d.n;
  auto idx = [n](const char* p, std::size_t i) { return n == 1 ? std::string(p) : std::string(p) + std::to_string(i + 1); };
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ',' << idx("x", i);
  for (std::size_t i = 0; i < n; ++i) os << ',' << idx("y", i);
  for (std::size_t i = 0; i < n; ++i) os << ',' << idx("xi", i);
  for (std::size_t i = 0; i < n; ++i) os << ',' << idx("dxi", i);
  const bool cov = d.mode == DeviationMode::Covariant;
  if (cov)
    for (std::size_t i = 0; i < n; ++i) os << ',' << idx("xi_lab", i);
  os << '\n';
  for (std::size_t k = 0; k < d.t.size(); ++k) {
    os << format_number(d.t[k]);
    for (double v : d.base[k]) os << ',' << format_number(v);
    for (double v : d.xi[k]) os << ',' << format_number(v);
    for (double v : d.dxi[k]) os << ',' << format_number(v);
    if (cov)
      for (double v : d.xi_lab[k]) os << ',' << format_number(v);
    os << '\n';
  }
}

}  // namespace kccstab
