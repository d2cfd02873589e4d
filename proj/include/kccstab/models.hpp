#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/expr.hpp"
#include "kccstab/flow.hpp"
#include "kccstab/format.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/linstab.hpp"
#include "kccstab/ode.hpp"
#include "kccstab/sode.hpp"

namespace kccstab {

enum class ModelName { Brusselator, LaneEmden, RelativisticSphere, BraneVacuum, DarkEnergy };

inline constexpr std::array<ModelName, 5> kAllModels{ModelName::Brusselator, ModelName::LaneEmden,
                                                     ModelName::RelativisticSphere, ModelName::BraneVacuum,
                                                     ModelName::DarkEnergy};

/// CLI spelling of the model name.
inline std::string_view to_string(ModelName m) {
  switch (m) {
    case ModelName::Brusselator: return "brusselator";
    case ModelName::LaneEmden: return "lane-emden";
    case ModelName::RelativisticSphere: return "sphere";
    case ModelName::BraneVacuum: return "brane";
    case ModelName::DarkEnergy: return "dark-energy";
  }
  return "?";
}

inline std::optional<ModelName> model_from_string(std::string_view s) {
  for (ModelName m : kAllModels)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

/// Quantities whose sign changes mark region boundaries.
enum class ThresholdQuantity { Discriminant, P11, Radicand, Trace, Determinant, LyapunovMuMax };

inline std::string_view to_string(ThresholdQuantity q) {
  switch (q) {
    case ThresholdQuantity::Discriminant: return "discriminant";
    case ThresholdQuantity::P11: return "P11";
    case ThresholdQuantity::Radicand: return "radicand";
    case ThresholdQuantity::Trace: return "trace";
    case ThresholdQuantity::Determinant: return "det";
    case ThresholdQuantity::LyapunovMuMax: return "mu_max";
  }
  return "?";
}

inline std::optional<ThresholdQuantity> threshold_quantity_from_string(std::string_view s) {
  for (ThresholdQuantity q : {ThresholdQuantity::Discriminant, ThresholdQuantity::P11, ThresholdQuantity::Radicand,
                              ThresholdQuantity::Trace, ThresholdQuantity::Determinant,
                              ThresholdQuantity::LyapunovMuMax})
    if (to_string(q) == s) return q;
  if (s == "delta" || s == "Delta") return ThresholdQuantity::Discriminant;
  if (s == "p11") return ThresholdQuantity::P11;
  return std::nullopt;
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Closed-form data for one distinguished point of a model. NaN marks a value with no closed form.
struct ReferencePoint {
  std::string label;
  Vec2 location{};
  bool exists = true;
  bool fixed_point = true;
  double trace = kNaN;
  double det = kNaN;
  double discriminant = kNaN;
  double p11 = kNaN;
  std::optional<LinearClass> linear;
  std::optional<JacobiClass> jacobi;
  std::optional<std::array<double, 2>> lyapunov_mu;
};

/// A boundary in parameter space where `quantity` at `point` changes sign.
struct Threshold {
  std::string name;
  std::string parameter;
  double value = 0.0;
  std::string point;
  ThresholdQuantity quantity = ThresholdQuantity::P11;
};

struct ReferenceValues {
  std::vector<ReferencePoint> points;
  std::vector<Threshold> thresholds;

  const ReferencePoint* find(std::string_view label) const {
    for (const auto& p : points)
      if (p.label == label) return &p;
    return nullptr;
  }
  const ReferencePoint& at(std::string_view label) const {
    if (const auto* p = find(label)) return *p;
    throw InvalidParameter("unknown reference point '" + std::string(label) + "'");
  }
};

/**
 * @brief One built-in system: first-order field, closed-form semispray and reference values.
 *
 * `kcc_field` is the planar system that is reduced to the semispray; it equals `field`
 * except for dark energy, where the reduction runs in (u, w = v²).
 */
struct Model {
  ModelName name = ModelName::Brusselator;
  Params params;
  VectorField2 field;
  VectorField2 kcc_field;
  std::function<Vec2(Vec2)> to_kcc;
  Eliminate elimination = Eliminate::U;
  Semispray semispray;
  ReferenceValues refs;
  Box box;
  std::string primary_point;
  std::array<double, 2> lyapunov_weights{1.0, 1.0};

  Vec2 kcc_state(Vec2 p) const { return to_kcc ? to_kcc(p) : p; }

  /// Phase point (x, y) of the semispray corresponding to a state of `field`.
  Vec2 phase_point(Vec2 p) const {
    const Vec2 q = kcc_state(p);
    const auto F = kcc_field(q[0], q[1]);
    return elimination == Eliminate::U ? Vec2{q[1], F[1]} : Vec2{q[0], F[0]};
  }

  /// Numeric reduction of `kcc_field`, warm-started at the eliminated coordinate of `near`.
  EliminationReduction reduction(std::optional<Vec2> near = std::nullopt) const {
    EliminationSettings st;
    if (near) {
      const Vec2 q = kcc_state(*near);
      st.initial_guess = elimination == Eliminate::U ? q[0] : q[1];
    }
    return EliminationReduction(kcc_field, elimination, st);
  }
};

namespace detail {

inline double require_param(const Params& p, std::string_view key, std::string_view model) {
  const auto it = p.find(key);
  if (it == p.end())
    throw InvalidParameter(std::string(model) + ": missing parameter '" + std::string(key) + "'");
  if (!std::isfinite(it->second))
    throw InvalidParameter(std::string(model) + ": parameter '" + std::string(key) + "' is not finite");
  return it->second;
}

inline void reject_unknown(const Params& p, std::initializer_list<std::string_view> keys, std::string_view model) {
  for (const auto& [k, v] : p) {
    bool known = false;
    for (auto key : keys) known = known || k == key;
    if (!known) throw InvalidParameter(std::string(model) + ": unknown parameter '" + k + "'");
  }
}

inline LinearClass class_from_invariants(double tr, double det) {
  return classify_linear(Mat2{{{0.0, 1.0}, {-det, tr}}}).cls;
}

inline JacobiClass jacobi_from_p11(double p) {
  if (p == 0.0) return JacobiClass::Marginal;
  return p < 0.0 ? JacobiClass::JacobiStable : JacobiClass::JacobiUnstable;
}

inline ReferencePoint point_from_invariants(std::string label, Vec2 loc, double tr, double det) {
  ReferencePoint r;
  r.label = std::move(label);
  r.location = loc;
  r.trace = tr;
  r.det = det;
  r.discriminant = tr * tr - 4.0 * det;
  r.p11 = r.discriminant / 4.0;
  r.linear = class_from_invariants(tr, det);
  r.jacobi = jacobi_from_p11(r.p11);
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------- Brusselator

enum class BrusselatorRegion { A, B, C, D };

inline std::string_view to_string(BrusselatorRegion r) {
  switch (r) {
    case BrusselatorRegion::A: return "A";
    case BrusselatorRegion::B: return "B";
    case BrusselatorRegion::C: return "C";
    case BrusselatorRegion::D: return "D";
  }
  return "?";
}

struct BrusselatorRegionResult {
  BrusselatorRegion region = BrusselatorRegion::A;
  bool on_boundary = false;
  double trace = 0.0;
  double discriminant = 0.0;
};

/// Region of the (a, b) plane from the signs of tr = b−1−a and Δ = tr² − 4a.
inline BrusselatorRegionResult brusselator_regions(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("brusselator: a and b must be positive");
  BrusselatorRegionResult r;
  r.trace = b - 1.0 - a;
  r.discriminant = r.trace * r.trace - 4.0 * a;
  const double tol_t = 1e-12 * (1.0 + a + b);
  const double tol_d = 1e-12 * (1.0 + r.trace * r.trace + 4.0 * a);
  r.on_boundary = std::abs(r.trace) <= tol_t || std::abs(r.discriminant) <= tol_d;
  if (r.trace > 0.0) {
    r.region = r.discriminant > 0.0 ? BrusselatorRegion::A : BrusselatorRegion::B;
  } else {
    r.region = r.discriminant > 0.0 ? BrusselatorRegion::D : BrusselatorRegion::C;
  }
  return r;
}

inline ReferenceValues brusselator_references(double a, double b) {
  ReferenceValues rv;
  ReferencePoint s = detail::point_from_invariants("S", {1.0, b / a}, b - 1.0 - a, a);
  const auto reg = brusselator_regions(a, b);
  if (reg.on_boundary) {
    s.linear.reset();
    s.jacobi.reset();
  } else {
    switch (reg.region) {
      case BrusselatorRegion::A: s.linear = LinearClass::UnstableNode; break;
      case BrusselatorRegion::B: s.linear = LinearClass::UnstableFocus; break;
      case BrusselatorRegion::C: s.linear = LinearClass::StableFocus; break;
      case BrusselatorRegion::D: s.linear = LinearClass::StableNode; break;
    }
    const bool complex_pair = reg.region == BrusselatorRegion::B || reg.region == BrusselatorRegion::C;
    s.jacobi = complex_pair ? JacobiClass::JacobiStable : JacobiClass::JacobiUnstable;
  }
  rv.points.push_back(s);
  const double ra = std::sqrt(a);
  rv.thresholds.push_back({"b=(sqrt(a)-1)^2", "b", (ra - 1.0) * (ra - 1.0), "S", ThresholdQuantity::P11});
  rv.thresholds.push_back({"b=a+1", "b", a + 1.0, "S", ThresholdQuantity::Trace});
  rv.thresholds.push_back({"b=(sqrt(a)+1)^2", "b", (ra + 1.0) * (ra + 1.0), "S", ThresholdQuantity::P11});
  return rv;
}

/// Closed-form G¹ after eliminating u: x = v, y = dv/dt.
template <class T>
T brusselator_G(const T& x, const T& y, double a, double b) {
  using std::sqrt;
  const T U = (b + sqrt(b * b - 4.0 * a * x * y)) / (2.0 * a * x);
  const T f = 1.0 - (b + 1.0) * U + a * U * U * x;
  const T gu = b - 2.0 * a * U * x;
  const T gv = -a * U * U;
  return -0.5 * (gu * f + gv * y);
}

inline Model make_brusselator(const Params& p) {
  detail::reject_unknown(p, {"a", "b"}, "brusselator");
  const double a = detail::require_param(p, "a", "brusselator");
  const double b = detail::require_param(p, "b", "brusselator");
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("brusselator: a and b must be positive");
  Model m;
  m.name = ModelName::Brusselator;
  m.params = {{"a", a}, {"b", b}};
  m.field = VectorField2::native(
      [a, b](const auto& u, const auto& v) {
        using T = std::decay_t<decltype(u)>;
        const T uuv = a * u * u * v;
        return std::array<T, 2>{1.0 - (b + 1.0) * u + uuv, b * u - uuv};
      },
      {}, "du/dt = 1-(b+1)u+a u^2 v; dv/dt = b u - a u^2 v");
  m.kcc_field = m.field;
  m.elimination = Eliminate::U;
  m.semispray = Semispray::native1([a, b](const auto& x, const auto& y) { return brusselator_G(x, y, a, b); },
                                   [a, b](double x, double y) { return x > 0.0 && b * b - 4.0 * a * x * y > 0.0; },
                                   "brusselator, u eliminated");
  m.refs = brusselator_references(a, b);
  m.box = {0.0, 3.0, 0.0, std::max(3.0, 2.0 * b / a)};
  m.primary_point = "S";
  return m;
}

// ---------------------------------------------------------------- Lane-Emden

inline ReferenceValues lane_emden_references(double n, double B) {
  ReferenceValues rv;
  const double n1 = n - 1.0;
  const double tr0 = -(5.0 - n) / n1;
  ReferencePoint x0 = detail::point_from_invariants("X0", {0.0, 0.0}, tr0, 2.0 * (3.0 - n) / (n1 * n1));
  x0.p11 = 0.25;
  rv.points.push_back(x0);

  ReferencePoint xn;
  xn.label = "X_n";
  xn.exists = n > 3.0;
  if (xn.exists) {
    xn = detail::point_from_invariants("X_n", {std::pow(2.0 * (n - 3.0) / (n1 * n1), 1.0 / n1) / B, 0.0}, tr0,
                                       2.0 * (n - 3.0) / n1);
    xn.p11 = (-7.0 * n * n + 22.0 * n + 1.0) / (4.0 * n1 * n1);
    xn.jacobi = detail::jacobi_from_p11(xn.p11);
  }
  rv.points.push_back(xn);

  // Real magnitude of the complex critical point; not a fixed point of the real system.
  ReferencePoint xin;
  xin.label = "X_in";
  xin.exists = n < 3.0;
  xin.fixed_point = false;
  if (xin.exists) {
    xin.location = {std::pow(2.0 * (3.0 - n) / (n1 * n1), 1.0 / n1) / B, 0.0};
    xin.p11 = (9.0 * n * n - 26.0 * n + 1.0) / (4.0 * n1 * n1);
    xin.jacobi = detail::jacobi_from_p11(xin.p11);
  }
  rv.points.push_back(xin);

  rv.thresholds.push_back({"X_in P11 root", "n", (26.0 + std::sqrt(640.0)) / 18.0, "X_in", ThresholdQuantity::P11});
  rv.thresholds.push_back({"X_n P11 root", "n", (22.0 + std::sqrt(512.0)) / 14.0, "X_n", ThresholdQuantity::P11});
  return rv;
}

/// Right-hand side of the transformed Lane-Emden equation, q' = −2G.
template <class T>
T lane_emden_G(const T& w, const T& q, double n, double B) {
  using std::pow;
  const double n1 = n - 1.0;
  return 0.5 * ((5.0 - n) / n1 * q + 2.0 * (3.0 - n) / (n1 * n1) * w + std::pow(B, n1) * pow(w, n));
}

inline Model make_lane_emden(const Params& p) {
  detail::reject_unknown(p, {"n", "B"}, "lane-emden");
  const double n = detail::require_param(p, "n", "lane-emden");
  const double B = p.count("B") ? detail::require_param(p, "B", "lane-emden") : 1.0;
  if (!(n > 1.0)) throw InvalidParameter("lane-emden: n must exceed 1");
  if (!(B > 0.0)) throw InvalidParameter("lane-emden: B must be positive");
  const bool integral = is_integral_exponent(n);
  Model m;
  m.name = ModelName::LaneEmden;
  m.params = {{"n", n}, {"B", B}};
  auto guard = [integral](double w, double) { return integral || w >= 0.0; };
  m.field = VectorField2::native(
      [n, B](const auto& w, const auto& q) {
        using T = std::decay_t<decltype(w)>;
        return std::array<T, 2>{q, -2.0 * lane_emden_G(w, q, n, B)};
      },
      guard, "dw/dt = q; dq/dt = -[(5-n)/(n-1) q + 2(3-n)/(n-1)^2 w + B^(n-1) w^n]", {"w", "q"});
  m.kcc_field = m.field;
  m.elimination = Eliminate::V;
  m.semispray = Semispray::native1([n, B](const auto& x, const auto& y) { return lane_emden_G(x, y, n, B); }, guard,
                                   "lane-emden");
  m.refs = lane_emden_references(n, B);
  double hi = 2.0;
  if (const auto* xn = m.refs.find("X_n"); xn && xn->exists) hi = std::max(hi, 2.0 * xn->location[0]);
  m.box = {0.0, hi, -1.0, 1.0};
  m.primary_point = "X_n";
  return m;
}

/// One sample of a Lane-Emden profile.
struct LaneEmdenSample {
  double xi = 0.0;
  double theta = 1.0;
  double dtheta = 0.0;
  double p11 = 0.25;  ///< 1/4 − n ξ² θ^{n−1}
  double milne_u = 3.0;
  double milne_v = 0.0;
};

struct LaneEmdenProfile {
  double n = 0.0;
  std::vector<LaneEmdenSample> samples;
  bool surface_reached = false;
  double surface_xi = kNaN;
};

inline LaneEmdenSample lane_emden_sample(double n, double xi, double theta, double dtheta) {
  LaneEmdenSample s;
  s.xi = xi;
  s.theta = theta;
  s.dtheta = dtheta;
  if (xi == 0.0) return s;
  s.p11 = 0.25 - n * xi * xi * std::pow(theta, n - 1.0);
  s.milne_u = -xi * std::pow(theta, n) / dtheta;
  s.milne_v = -xi * dtheta / theta;
  return s;
}

/**
 * @brief Integrates θ'' + 2θ'/ξ + θⁿ = 0 from the centre to xi_max or to the first zero of θ.
 *
 * The start uses the series θ ≈ 1 − ξ²/6 + nξ⁴/120. Samples are the accepted steps;
 * the surface, when reached, is located by Hermite interpolation and not sampled.
 */
inline LaneEmdenProfile lane_emden_profile(double n, double xi_max, OdeOptions opt = tight_ode_options()) {
  if (!(n > 1.0)) throw InvalidParameter("lane_emden_profile: n must exceed 1");
  if (!(xi_max > 0.0)) throw InvalidParameter("lane_emden_profile: xi_max must be positive");
  LaneEmdenProfile prof;
  prof.n = n;
  prof.samples.push_back(lane_emden_sample(n, 0.0, 1.0, 0.0));
  const double xi0 = std::min(1e-2, 0.5 * xi_max);
  const double z0[2] = {1.0 - xi0 * xi0 / 6.0 + n * std::pow(xi0, 4) / 120.0,
                        -xi0 / 3.0 + n * std::pow(xi0, 3) / 30.0};
  // Odd extension past θ = 0 keeps the stages defined while the surface step is bracketed.
  const OdeRhs rhs = [n](double xi, std::span<const double> z, std::span<double> dz) {
    dz[0] = z[1];
    dz[1] = -std::copysign(std::pow(std::abs(z[0]), n), z[0]) - 2.0 * z[1] / xi;
  };
  const StepObserver obs = [&](const StepView& st) {
    if (st.x1[0] > 0.0) return true;
    double lo = 0.0, hi = 1.0;
    const double h = st.t1 - st.t0;
    for (int k = 0; k < 200 && hi - lo > 1e-16; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (hermite(mid, h, st.x0[0], st.f0[0], st.x1[0], st.f1[0]) > 0.0) lo = mid; else hi = mid;
    }
    prof.surface_reached = true;
    prof.surface_xi = st.t0 + 0.5 * (lo + hi) * h;
    return false;
  };
  const Trajectory tr = integrate_ode(rhs, z0, xi0, xi_max, opt, {}, obs);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& z = tr.states[k];
    if (z[0] <= 0.0) break;
    prof.samples.push_back(lane_emden_sample(n, tr.t[k], z[0], z[1]));
  }
  return prof;
}

/// (r)-form of P¹₁ in terms of the density ratio ρ/ρ̄ and the energy ratio |E_g|/E_i.
inline double polytrope_p11(double n, double rho_ratio, double energy_ratio) {
  return 0.25 - 1.5 * n * rho_ratio * energy_ratio;
}

/// Jacobi stability of a polytrope: E_i/|E_g| < 6 n ρ/ρ̄.
inline bool polytrope_jacobi_condition(double n, double rho_ratio, double energy_ratio) {
  if (!(n > 0.0) || !(rho_ratio > 0.0) || !(energy_ratio > 0.0))
    throw InvalidParameter("polytrope_jacobi_condition: inputs must be positive");
  return 1.0 / energy_ratio < 6.0 * n * rho_ratio;
}

// ---------------------------------------------------------------- Relativistic sphere

inline void check_sphere_gamma(double g) {
  if (!(g > 1.0 && g <= 2.0)) throw InvalidParameter("sphere: gamma must lie in (1, 2]");
}

inline ReferenceValues sphere_references(double g) {
  ReferenceValues rv;
  rv.points.push_back(detail::point_from_invariants("O", {0.0, 0.0}, 1.0, -2.0));
  const double s = g * g + 4.0 * g - 4.0;
  const double u1 = 2.0 * (g - 1.0) / s;
  ReferencePoint s1 = detail::point_from_invariants("S1", {u1, u1}, -(3.0 * g - 2.0) / g, 2.0 * s / (g * g));
  s1.discriminant = (g * g - 44.0 * g + 36.0) / (g * g);
  s1.p11 = (g * g - 44.0 * g + 36.0) / (4.0 * g * g);
  rv.points.push_back(s1);
  return rv;
}

/// Closed-form G¹ with x = u, y = du/dt = v − u.
template <class T>
T sphere_G(const T& x, const T& y, double g) {
  const double c = (g * g + 4.0 * g - 4.0) / (g - 1.0);
  return 0.5 * (y - (x + y) / (1.0 - 2.0 * x) * (2.0 - c * x - g * y));
}

inline Model make_sphere(const Params& p) {
  detail::reject_unknown(p, {"gamma"}, "sphere");
  const double g = detail::require_param(p, "gamma", "sphere");
  check_sphere_gamma(g);
  Model m;
  m.name = ModelName::RelativisticSphere;
  m.params = {{"gamma", g}};
  auto guard = [](double u, double) { return u != 0.5; };
  m.field = VectorField2::native(
      [g](const auto& u, const auto& v) {
        using T = std::decay_t<decltype(u)>;
        return std::array<T, 2>{v - u, v * (2.0 - g * v - (5.0 * g - 4.0) / (g - 1.0) * u) / (1.0 - 2.0 * u)};
      },
      guard, "du/dt = v-u; dv/dt = v(2 - gamma v - (5gamma-4)u/(gamma-1))/(1-2u)");
  m.kcc_field = m.field;
  m.elimination = Eliminate::V;
  m.semispray = Semispray::native1([g](const auto& x, const auto& y) { return sphere_G(x, y, g); },
                                   [](double x, double) { return x != 0.5; }, "relativistic sphere");
  m.refs = sphere_references(g);
  m.box = {0.01, 0.49, 0.01, 1.0};
  m.primary_point = "S1";
  return m;
}

/// Upper bound on M/R implied by Jacobi stability for ρr² → 0.
inline double sphere_mass_radius_bound(double g) {
  check_sphere_gamma(g);
  const double k = 7.0 * g - 6.0;
  const double rad = 4.0 * (11.0 * g - 9.0) * (11.0 * g - 9.0) / (k * k) - 9.0;
  if (rad < 0.0) throw InvalidParameter("sphere_mass_radius_bound: negative radicand");
  return 2.0 * (g - 1.0) * (11.0 * g - 9.0) / (k * k) + (g - 1.0) / k * std::sqrt(rad);
}

/// Jacobi stability of the sphere's steady state as an inequality on m/r, ρr² and γ.
inline bool sphere_jacobi_condition(double m_over_r, double rho_r2, double g) {
  check_sphere_gamma(g);
  if (!(m_over_r > 0.0 && m_over_r <= 0.5)) throw InvalidParameter("sphere_jacobi_condition: m/r must lie in (0, 1/2]");
  if (!(rho_r2 >= 0.0)) throw InvalidParameter("sphere_jacobi_condition: rho r^2 must be non-negative");
  const double k = 7.0 * g - 6.0;
  const double rad = 8.0 * std::numbers::pi * g * (2.0 * g - 1.0) / (g - 1.0) * rho_r2 +
                     4.0 * (11.0 * g - 9.0) * (11.0 * g - 9.0) / (k * k) - 9.0;
  if (rad < 0.0) return false;
  return m_over_r < 2.0 * (g - 1.0) * (11.0 * g - 9.0) / (k * k) + (g - 1.0) / k * std::sqrt(rad);
}

// ---------------------------------------------------------------- Brane vacuum

inline double brane_table2_boundary() {
  // Real root of 8γ³ + 66γ − 47 (the other two are complex).
  double x = 0.7;
  for (int i = 0; i < 50; ++i) x -= (8.0 * x * x * x + 66.0 * x - 47.0) / (24.0 * x * x + 66.0);
  return x;
}

struct BraneReferences {
  double gamma = 0.0;
  Vec2 x_gamma{};
  double radicand = 0.0;  ///< 16γ⁴+8γ³+132γ²−28γ−47
  std::array<std::complex<double>, 2> r{};
  double p11 = 0.0;
  std::optional<std::pair<LinearClass, JacobiClass>> table2;
};

/// Row of the brane stability table; nullopt on the boundaries −1/2, γ*, 1.
inline std::optional<std::pair<LinearClass, JacobiClass>> brane_table2(double g) {
  const double gs = brane_table2_boundary();
  if (g < -0.5 || g > 1.0) return std::pair{LinearClass::Saddle, JacobiClass::JacobiUnstable};
  if (g > -0.5 && g < gs) return std::pair{LinearClass::StableFocus, JacobiClass::JacobiStable};
  if (g > gs && g < 1.0) return std::pair{LinearClass::StableNode, JacobiClass::JacobiUnstable};
  return std::nullopt;
}

inline BraneReferences brane_references(double g) {
  if (g == -0.5 || g == -2.0) throw InvalidParameter("brane_references: gamma must differ from -1/2 and -2");
  BraneReferences b;
  b.gamma = g;
  const double X = 3.0 * (1.0 - g) / (g * g + g + 7.0);
  b.x_gamma = {X, X};
  b.radicand = 16.0 * std::pow(g, 4) + 8.0 * g * g * g + 132.0 * g * g - 28.0 * g - 47.0;
  const double den = 2.0 * (2.0 * g * g + 5.0 * g + 2.0);
  const std::complex<double> root = std::sqrt(std::complex<double>(b.radicand, 0.0));
  b.r = {(-3.0 - 6.0 * g + root) / den, (-3.0 - 6.0 * g - root) / den};
  b.p11 = (8.0 * g * g * g + 66.0 * g - 47.0) / (4.0 * (2.0 + g) * (2.0 + g) * (1.0 + 2.0 * g));
  b.table2 = brane_table2(g);
  return b;
}

inline ReferenceValues brane_reference_values(double g) {
  ReferenceValues rv;
  const double q = 1.0 + 2.0 * g;
  ReferencePoint x0 = detail::point_from_invariants("X0", {0.0, 0.0}, (1.0 - 4.0 * g) / q, -2.0 * (1.0 - g) / q);
  x0.p11 = 9.0 / (4.0 * q * q);
  rv.points.push_back(x0);

  ReferencePoint xg;
  xg.label = "X_gamma";
  const double X = 3.0 * (1.0 - g) / (g * g + g + 7.0);
  xg.location = {X, X};
  xg.exists = g != -2.0;  // at γ = −2 the point sits on the singular line u = 1
  if (xg.exists) {
    const BraneReferences b = brane_references(g);
    const double a = (2.0 * g + 1.0) * (g + 2.0);
    xg.trace = -3.0 / (g + 2.0);
    xg.det = (9.0 * q * q - b.radicand) / (4.0 * a * a);
    xg.discriminant = b.radicand / (a * a);
    xg.p11 = b.p11;
    if (b.table2) {
      xg.linear = b.table2->first;
      xg.jacobi = b.table2->second;
    }
  }
  rv.points.push_back(xg);
  rv.thresholds.push_back({"gamma=-1/2", "gamma", -0.5, "X_gamma", ThresholdQuantity::Determinant});
  rv.thresholds.push_back({"table2 boundary", "gamma", brane_table2_boundary(), "X_gamma", ThresholdQuantity::P11});
  rv.thresholds.push_back({"gamma=1", "gamma", 1.0, "X_gamma", ThresholdQuantity::Determinant});
  return rv;
}

/// Closed-form G¹ with x = u, y = du/dt = v − u.
template <class T>
T brane_G(const T& x, const T& y, double g) {
  const double q = 1.0 + 2.0 * g;
  const T v = x + y;
  const T acc = 2.0 * (1.0 - g) / q * v - (g + 2.0) / q * v * (x + q * v / 3.0) / (1.0 - x) - y;
  return -0.5 * acc;
}

inline Model make_brane(const Params& p) {
  detail::reject_unknown(p, {"gamma"}, "brane");
  const double g = detail::require_param(p, "gamma", "brane");
  if (g == -0.5) throw InvalidParameter("brane: gamma = -1/2 makes the system singular");
  Model m;
  m.name = ModelName::BraneVacuum;
  m.params = {{"gamma", g}};
  const double q = 1.0 + 2.0 * g;
  auto guard = [](double u, double) { return u != 1.0; };
  m.field = VectorField2::native(
      [g, q](const auto& u, const auto& v) {
        using T = std::decay_t<decltype(u)>;
        return std::array<T, 2>{v - u, 2.0 * (1.0 - g) / q * v - (g + 2.0) / q * v * (u + q * v / 3.0) / (1.0 - u)};
      },
      guard, "du/dt = v-u; dv/dt = 2(1-gamma)/(1+2gamma) v - (gamma+2)/(1+2gamma) v (u+(1+2gamma)v/3)/(1-u)");
  m.kcc_field = m.field;
  m.elimination = Eliminate::V;
  m.semispray = Semispray::native1([g](const auto& x, const auto& y) { return brane_G(x, y, g); },
                                   [](double x, double) { return x != 1.0; }, "brane vacuum");
  m.refs = brane_reference_values(g);
  m.box = {-1.5, 1.5, -1.5, 1.5};
  m.primary_point = "X_gamma";
  return m;
}

enum class BraneSpecialCase { GammaMinus2, TwoUPlusP, UPlusTwoP };

/// Exact solutions of the brane system in t = ln r.
struct BraneExactSolution {
  BraneSpecialCase which = BraneSpecialCase::GammaMinus2;
  double c0 = 0.0;
  double c1 = 0.0;

  /// (u, v) at time t.
  Vec2 operator()(double t) const {
    switch (which) {
      case BraneSpecialCase::GammaMinus2:
        return {(c0 + c1) * std::exp(-t) - c1 * std::exp(-2.0 * t), c1 * std::exp(-2.0 * t)};
      case BraneSpecialCase::TwoUPlusP:
        return {-c0 * std::exp(-2.0 * t) + c1 * std::exp(-t), c0 * std::exp(-2.0 * t)};
      case BraneSpecialCase::UPlusTwoP:
        return {2.0 / 3.0, 2.0 / 3.0};
    }
    return {kNaN, kNaN};
  }
  /// (q, μ) at radius r.
  Vec2 at_radius(double r) const { return (*this)(std::log(r)); }
};

/**
 * @brief Closed-form brane solutions.
 *
 * GammaMinus2 takes (u₀, v₀) = (q₀, μ₀); TwoUPlusP takes (Q, U₀) with v = Q e^{−2t},
 * u = U₀ e^{−t} − Q e^{−2t}; UPlusTwoP is the constant u = v = 2/3 and ignores its arguments.
 */
inline BraneExactSolution brane_special_solution(BraneSpecialCase c, double c0 = 0.0, double c1 = 0.0) {
  return {c, c0, c1};
}

// ---------------------------------------------------------------- Dark energy

inline ReferenceValues dark_energy_references(double l) {
  ReferenceValues rv;
  const double l2 = l * l;
  const double s = std::sqrt(1.5);
  {
    ReferencePoint a = detail::point_from_invariants("A", {0.0, 0.0}, 0.0, -2.25);
    a.p11 = 81.0 / 16.0;
    a.jacobi = JacobiClass::JacobiUnstable;
    a.linear = LinearClass::Saddle;
    rv.points.push_back(a);
  }
  for (int sign : {1, -1}) {
    const double e2 = 3.0 - sign * l * s;
    ReferencePoint b = detail::point_from_invariants(sign > 0 ? "B+" : "B-", {double(sign), 0.0}, 3.0 + e2, 3.0 * e2);
    b.p11 = 1.5 * (l - sign * s) * (l - sign * s);
    b.jacobi = detail::jacobi_from_p11(b.p11);
    const double edge = sign * l;  // λ for B+, −λ for B−
    if (edge < std::sqrt(6.0)) b.linear = LinearClass::UnstableNode;
    else if (edge > std::sqrt(6.0)) b.linear = LinearClass::Saddle;
    else b.linear.reset();
    rv.points.push_back(b);
  }
  {
    ReferencePoint c;
    c.label = "C";
    c.exists = l2 > 3.0;
    if (c.exists) {
      c.location = {s / l, s / l};
      c.p11 = 4.5 * (-7.0 / 8.0 + 3.0 / l2);
      c.jacobi = detail::jacobi_from_p11(c.p11);
      if (l2 < 24.0 / 7.0) c.linear = LinearClass::StableNode;
      else if (l2 > 24.0 / 7.0) c.linear = LinearClass::StableFocus;
      const double r = 3.0 / l2 * std::sqrt(l2 * l2 - 18.0 * l2 + 90.0);
      c.lyapunov_mu = std::array<double, 2>{-3.0 - 9.0 / l2 + r, -3.0 - 9.0 / l2 - r};
    }
    rv.points.push_back(c);
  }
  {
    ReferencePoint d;
    d.label = "D";
    d.exists = l2 < 6.0;
    if (d.exists) {
      d.location = {l / std::sqrt(6.0), std::sqrt(1.0 - l2 / 6.0)};
      d.p11 = std::pow(l / 2.0, 4);
      d.jacobi = detail::jacobi_from_p11(d.p11);
      if (l2 < 3.0) d.linear = LinearClass::StableNode;
      else if (l2 > 3.0) d.linear = LinearClass::Saddle;
      const double r = std::sqrt(36.0 + 6.0 * l2 - l2 * l2);
      d.lyapunov_mu = std::array<double, 2>{-18.0 + 4.0 * l2 + r, -18.0 + 4.0 * l2 - r};
    }
    rv.points.push_back(d);
  }
  rv.thresholds.push_back({"D node/saddle", "lambda2", 3.0, "D", ThresholdQuantity::Determinant});
  rv.thresholds.push_back({"C Lyapunov", "lambda2", 27.0 / 8.0, "C", ThresholdQuantity::LyapunovMuMax});
  rv.thresholds.push_back({"C node/spiral", "lambda2", 24.0 / 7.0, "C", ThresholdQuantity::P11});
  rv.thresholds.push_back({"D Lyapunov", "lambda2", 48.0 / 17.0, "D", ThresholdQuantity::LyapunovMuMax});
  rv.thresholds.push_back({"B+ node/saddle", "lambda2", 6.0, "B+", ThresholdQuantity::Determinant});
  return rv;
}

/// G¹(x, y) with x = u, y = du/dN.
template <class T>
T dark_energy_G(const T& x, const T& y, double l) {
  const double r6 = std::sqrt(6.0);
  const T x2 = x * x;
  const T x3 = x2 * x;
  const T x4 = x2 * x2;
  const T bracket = 6.0 * (3.0 * x2 - 3.0 * x4 + 3.0 * x * y + y * y) +
                    l * r6 * (-3.0 * x - 3.0 * x3 + 6.0 * x4 * x - y - 7.0 * x2 * y) +
                    l * l * (6.0 * x2 - 6.0 * x4 + 4.0 * x * y);
  return 0.75 / (r6 * l - 3.0 * x) * bracket;
}

inline Model make_dark_energy(const Params& p) {
  detail::reject_unknown(p, {"lambda", "lambda2"}, "dark-energy");
  double l;
  if (p.count("lambda2")) {
    if (p.count("lambda")) throw InvalidParameter("dark-energy: give lambda or lambda2, not both");
    const double l2 = detail::require_param(p, "lambda2", "dark-energy");
    if (l2 < 0.0) throw InvalidParameter("dark-energy: lambda2 must be non-negative");
    l = std::sqrt(l2);
  } else {
    l = detail::require_param(p, "lambda", "dark-energy");
  }
  Model m;
  m.name = ModelName::DarkEnergy;
  m.params = {{"lambda", l}};
  const double k = l * std::sqrt(1.5);
  m.field = VectorField2::native(
      [k](const auto& u, const auto& v) {
        using T = std::decay_t<decltype(u)>;
        const T h = 1.5 * (1.0 + u * u - v * v);
        return std::array<T, 2>{-3.0 * u + k * v * v + u * h, -k * u * v + v * h};
      },
      {}, "du/dN = -3u + lambda sqrt(3/2) v^2 + 3/2 u(1+u^2-v^2); dv/dN = -lambda sqrt(3/2) u v + 3/2 v(1+u^2-v^2)");
  m.kcc_field = VectorField2::native(
      [k](const auto& u, const auto& w) {
        using T = std::decay_t<decltype(u)>;
        return std::array<T, 2>{k * w + 1.5 * u * u * u - 1.5 * u * w - 1.5 * u,
                                -2.0 * k * u * w + 3.0 * u * u * w - 3.0 * w * w + 3.0 * w};
      },
      {}, "du/dN and dw/dN with w = v^2", {"u", "w"});
  m.to_kcc = [](Vec2 s) { return Vec2{s[0], s[1] * s[1]}; };
  m.elimination = Eliminate::V;
  const double r6l = std::sqrt(6.0) * l;
  m.semispray = Semispray::native1([l](const auto& x, const auto& y) { return dark_energy_G(x, y, l); },
                                   [r6l](double x, double) { return r6l - 3.0 * x != 0.0; }, "dark energy");
  m.refs = dark_energy_references(l);
  m.box = {-1.2, 1.2, 0.0, 1.2};
  m.primary_point = "C";
  m.lyapunov_weights = {1.0, 2.0};
  return m;
}

// ---------------------------------------------------------------- catalog

/// Accepted parameter keys; the first group is required.
inline std::pair<std::vector<std::string>, std::vector<std::string>> model_parameter_keys(ModelName name) {
  switch (name) {
    case ModelName::Brusselator: return {{"a", "b"}, {}};
    case ModelName::LaneEmden: return {{"n"}, {"B"}};
    case ModelName::RelativisticSphere: return {{"gamma"}, {}};
    case ModelName::BraneVacuum: return {{"gamma"}, {}};
    case ModelName::DarkEnergy: return {{}, {"lambda", "lambda2"}};
  }
  return {};
}

/// Throws InvalidParameter on unknown or missing keys without checking values.
inline void check_model_keys(ModelName name, const Params& p) {
  const auto [required, optional] = model_parameter_keys(name);
  const std::string model(to_string(name));
  for (const auto& k : required)
    if (!p.count(k)) throw InvalidParameter(model + ": missing parameter '" + k + "'");
  for (const auto& [k, v] : p)
    if (std::find(required.begin(), required.end(), k) == required.end() &&
        std::find(optional.begin(), optional.end(), k) == optional.end())
      throw InvalidParameter(model + ": unknown parameter '" + k + "'");
  if (name == ModelName::DarkEnergy && !p.count("lambda") && !p.count("lambda2"))
    throw InvalidParameter(model + ": missing parameter 'lambda'");
}

inline std::vector<std::string> model_point_labels(ModelName name) {
  switch (name) {
    case ModelName::Brusselator: return {"S"};
    case ModelName::LaneEmden: return {"X0", "X_n", "X_in"};
    case ModelName::RelativisticSphere: return {"O", "S1"};
    case ModelName::BraneVacuum: return {"X0", "X_gamma"};
    case ModelName::DarkEnergy: return {"A", "B+", "B-", "C", "D"};
  }
  return {};
}

inline Model make_model(ModelName name, const Params& params) {
  switch (name) {
    case ModelName::Brusselator: return make_brusselator(params);
    case ModelName::LaneEmden: return make_lane_emden(params);
    case ModelName::RelativisticSphere: return make_sphere(params);
    case ModelName::BraneVacuum: return make_brane(params);
    case ModelName::DarkEnergy: return make_dark_energy(params);
  }
  throw InvalidParameter("unknown model");
}

inline Model make_model(std::string_view name, const Params& params) {
  const auto m = model_from_string(name);
  if (!m) throw InvalidParameter("unknown model '" + std::string(name) + "'");
  return make_model(*m, params);
}

}  // namespace kccstab
