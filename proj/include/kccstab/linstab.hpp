#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/sode.hpp"

namespace kccstab {

enum class LinearClass {
  StableNode,
  UnstableNode,
  StableFocus,
  UnstableFocus,
  Saddle,
  Center,
  StarNode,
  DegenerateNode,
  NonHyperbolic
};

/// Sign of the eigenvalue real parts; carried separately because star and
/// degenerate nodes do not encode it in their class name.
enum class Stability { Stable, Unstable, Neutral, Mixed };

inline constexpr std::array<LinearClass, 9> kAllLinearClasses{
    LinearClass::StableNode,  LinearClass::UnstableNode, LinearClass::StableFocus,
    LinearClass::UnstableFocus, LinearClass::Saddle,     LinearClass::Center,
    LinearClass::StarNode,    LinearClass::DegenerateNode, LinearClass::NonHyperbolic};

inline std::string_view to_string(LinearClass c) {
  switch (c) {
    case LinearClass::StableNode: return "StableNode";
    case LinearClass::UnstableNode: return "UnstableNode";
    case LinearClass::StableFocus: return "StableFocus";
    case LinearClass::UnstableFocus: return "UnstableFocus";
    case LinearClass::Saddle: return "Saddle";
    case LinearClass::Center: return "Center";
    case LinearClass::StarNode: return "StarNode";
    case LinearClass::DegenerateNode: return "DegenerateNode";
    case LinearClass::NonHyperbolic: return "NonHyperbolic";
  }
  return "?";
}

inline std::optional<LinearClass> linear_class_from_string(std::string_view s) {
  for (LinearClass c : kAllLinearClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Neutral: return "neutral";
    case Stability::Mixed: return "mixed";
  }
  return "?";
}

struct LinearReport {
  Vec2 point{};
  Mat2 jacobian{};
  double trace = 0.0;
  double det = 0.0;
  double discriminant = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
  LinearClass cls = LinearClass::NonHyperbolic;
  Stability stability = Stability::Neutral;
  bool hyperbolic = false;
  double eps_c = 0.0;
};

inline double frobenius(const Mat2& J) {
  return std::sqrt(J[0][0] * J[0][0] + J[0][1] * J[0][1] + J[1][0] * J[1][0] + J[1][1] * J[1][1]);
}

/// Roots of λ² − tr·λ + det = 0; real roots ordered descending, complex roots as α ± iβ.
inline std::array<std::complex<double>, 2> eigen2(const Mat2& J) {
  const double tr = J[0][0] + J[1][1];
  const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  const double d = J[0][0] - J[1][1];
  const double disc = d * d + 4.0 * J[0][1] * J[1][0];
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    const double big = 0.5 * (tr + std::copysign(s, tr));
    const double small = big != 0.0 ? det / big : 0.0;
    return {std::complex<double>(std::max(big, small)), std::complex<double>(std::min(big, small))};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
}

/**
 * @brief Classifies a planar fixed point from its Jacobian.
 *
 * Real parts within eps_c (default 1e-8·‖J‖_F) count as zero; det and the
 * discriminant, which scale like ‖J‖², are compared against eps_c·‖J‖_F.
 */
inline LinearReport classify_linear(const Mat2& J, std::optional<double> eps_c = std::nullopt) {
  LinearReport r;
  r.jacobian = J;
  r.trace = J[0][0] + J[1][1];
  r.det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  r.discriminant = r.trace * r.trace - 4.0 * r.det;
  r.eigenvalues = eigen2(J);
  const double norm = frobenius(J);
  const double eps = eps_c.value_or(1e-8 * norm);
  const double eps2 = eps * std::max(norm, 1e-300);
  r.eps_c = eps;

  const double re1 = r.eigenvalues[0].real();
  const double re2 = r.eigenvalues[1].real();
  r.hyperbolic = std::abs(re1) > eps && std::abs(re2) > eps;
  if (re1 < -eps && re2 < -eps) {
    r.stability = Stability::Stable;
  } else if (re1 > eps && re2 > eps) {
    r.stability = Stability::Unstable;
  } else if (r.hyperbolic) {
    r.stability = Stability::Mixed;
  } else {
    r.stability = Stability::Neutral;
  }

  const bool complex_pair = r.eigenvalues[0].imag() != 0.0;
  if (complex_pair && r.discriminant < -eps2) {
    if (std::abs(r.trace) * 0.5 <= eps) {
      r.cls = LinearClass::Center;
    } else {
      r.cls = r.trace < 0.0 ? LinearClass::StableFocus : LinearClass::UnstableFocus;
    }
    return r;
  }
  if (!r.hyperbolic) {
    r.cls = LinearClass::NonHyperbolic;
    return r;
  }
  if (r.det < -eps2) {
    r.cls = LinearClass::Saddle;
    return r;
  }
  if (std::abs(r.discriminant) <= eps2) {
    const bool scalar = std::abs(J[0][1]) <= eps && std::abs(J[1][0]) <= eps && std::abs(J[0][0] - J[1][1]) <= eps;
    r.cls = scalar ? LinearClass::StarNode : LinearClass::DegenerateNode;
    return r;
  }
  r.cls = r.trace < 0.0 ? LinearClass::StableNode : LinearClass::UnstableNode;
  return r;
}

inline LinearReport linearize(const VectorField2& vf, Vec2 p, std::optional<double> eps_c = std::nullopt) {
  LinearReport r = classify_linear(vf.jacobian(p[0], p[1]), eps_c);
  r.point = p;
  return r;
}

/**
 * @brief Eigenvalues (descending) of the Hessian of dV/dt at a fixed point for
 * V = w₁(u−u*)² + w₂(v−v*)².
 *
 * At a fixed point the Hessian reduces to W·J + Jᵀ·W with W = diag(2w₁, 2w₂).
 */
inline std::array<double, 2> lyapunov_hessian_eigenvalues(const VectorField2& vf, Vec2 p,
                                                          std::array<double, 2> weights = {1.0, 1.0}) {
  const Mat2 J = vf.jacobian(p[0], p[1]);
  const double w0 = 2.0 * weights[0];
  const double w1 = 2.0 * weights[1];
  const double h00 = 2.0 * w0 * J[0][0];
  const double h11 = 2.0 * w1 * J[1][1];
  const double h01 = w0 * J[0][1] + w1 * J[1][0];
  const double mid = 0.5 * (h00 + h11);
  const double rad = std::hypot(0.5 * (h00 - h11), h01);
  return {mid + rad, mid - rad};
}

struct Box {
  double u_lo = 0.0;
  double u_hi = 1.0;
  double v_lo = 0.0;
  double v_hi = 1.0;

  double diameter() const { return std::hypot(u_hi - u_lo, v_hi - v_lo); }
  bool contains(Vec2 p, double slack = 0.0) const {
    return p[0] >= u_lo - slack && p[0] <= u_hi + slack && p[1] >= v_lo - slack && p[1] <= v_hi + slack;
  }
};

struct FixedPoint {
  Vec2 x{};
  double residual = 0.0;
  int iterations = 0;
};

struct FixedPointSet {
  std::vector<FixedPoint> points;
  bool degenerate = false;
};

struct NewtonOptions {
  int max_iterations = 50;
  double residual_tolerance = 1e-12;
};

/// Newton iteration with backtracking on ‖(f,g)‖; nullopt when it fails to converge.
inline std::optional<FixedPoint> newton_fixed_point(const VectorField2& vf, Vec2 seed, NewtonOptions opt = {}) {
  auto norm_at = [&](Vec2 p) -> std::optional<double> {
    if (!vf.in_domain(p[0], p[1])) return std::nullopt;
    try {
      const auto F = vf(p[0], p[1]);
      const double n = std::hypot(F[0], F[1]);
      if (!std::isfinite(n)) return std::nullopt;
      return n;
    } catch (const DomainError&) {
      return std::nullopt;
    }
  };
  Vec2 x = seed;
  auto res = norm_at(x);
  if (!res) return std::nullopt;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    if (*res <= opt.residual_tolerance) return FixedPoint{x, *res, it};
    if (it == opt.max_iterations) break;
    Mat2 J;
    std::array<double, 2> F;
    try {
      J = vf.jacobian(x[0], x[1]);
      F = vf(x[0], x[1]);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
    const Vec2 step{-(J[1][1] * F[0] - J[0][1] * F[1]) / det, -(-J[1][0] * F[0] + J[0][0] * F[1]) / det};
    double lambda = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, lambda *= 0.5) {
      const Vec2 trial{x[0] + lambda * step[0], x[1] + lambda * step[1]};
      const auto rt = norm_at(trial);
      if (rt && *rt < *res) {
        x = trial;
        res = rt;
        moved = true;
        break;
      }
    }
    if (!moved) return std::nullopt;
  }
  return std::nullopt;
}

/**
 * @brief Newton-converged roots of the field inside a box, seeded from a grid.
 *
 * Roots closer than 1e-6·diam(box) are merged. `degenerate` is set when some
 * root has a singular Jacobian (roots may then form a continuum).
 */
inline FixedPointSet find_fixed_points(const VectorField2& vf, const Box& box, int grid, NewtonOptions opt = {}) {
  if (grid < 2) throw InvalidParameter("find_fixed_points: grid must be at least 2");
  if (!(box.u_hi > box.u_lo) || !(box.v_hi > box.v_lo) || !std::isfinite(box.diameter()))
    throw InvalidParameter("find_fixed_points: box must be finite and non-empty");
  const double diam = box.diameter();
  const double radius = 1e-6 * diam;
  FixedPointSet out;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const Vec2 seed{box.u_lo + (box.u_hi - box.u_lo) * i / (grid - 1),
                      box.v_lo + (box.v_hi - box.v_lo) * j / (grid - 1)};
      const auto fp = newton_fixed_point(vf, seed, opt);
      if (!fp || !box.contains(fp->x, 1e-12 * diam)) continue;
      auto dup = std::find_if(out.points.begin(), out.points.end(), [&](const FixedPoint& q) {
        return std::hypot(q.x[0] - fp->x[0], q.x[1] - fp->x[1]) <= radius;
      });
      if (dup == out.points.end()) {
        out.points.push_back(*fp);
      } else if (fp->residual < dup->residual) {
        *dup = *fp;
      }
    }
  }
  for (const FixedPoint& p : out.points) {
    const Mat2 J = vf.jacobian(p.x[0], p.x[1]);
    const double n = frobenius(J);
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (std::abs(det) <= 1e-12 * (1.0 + n * n)) out.degenerate = true;
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const FixedPoint& a, const FixedPoint& b) { return a.x < b.x; });
  return out;
}

}  // namespace kccstab
