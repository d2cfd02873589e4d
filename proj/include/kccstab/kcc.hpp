#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/linstab.hpp"
#include "kccstab/sode.hpp"
#include "kccstab/tensor.hpp"

namespace kccstab {

enum class JacobiClass { JacobiStable, JacobiUnstable, Marginal };

inline std::string_view to_string(JacobiClass c) {
  switch (c) {
    case JacobiClass::JacobiStable: return "JacobiStable";
    case JacobiClass::JacobiUnstable: return "JacobiUnstable";
    case JacobiClass::Marginal: return "Marginal";
  }
  return "?";
}

inline std::optional<JacobiClass> jacobi_class_from_string(std::string_view s) {
  for (JacobiClass c : {JacobiClass::JacobiStable, JacobiClass::JacobiUnstable, JacobiClass::Marginal})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

/// KCC quantities at one phase point (x, y).
struct KccInvariants {
  std::size_t n = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> G;
  Tensor N;        ///< N^i_j = ∂G^i/∂y^j
  Tensor berwald;  ///< G^i_jl = ∂N^i_j/∂y^l
  std::vector<double> eps;
  Tensor P;
  std::optional<Tensor> third;
  std::optional<Tensor> fourth;
  std::optional<Tensor> fifth;
  bool higher_by_finite_difference = false;
};

struct JacobiReport {
  Tensor P;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> real_parts;
  JacobiClass cls = JacobiClass::Marginal;
  double eps_j = 0.0;
};

namespace detail {

inline KccInvariants kcc_from_value(const SemisprayValue& sv, std::span<const double> x, std::span<const double> y) {
  const std::size_t n = sv.n;
  KccInvariants k;
  k.n = n;
  k.x.assign(x.begin(), x.end());
  k.y.assign(y.begin(), y.end());
  k.G.resize(n);
  k.N = Tensor({n, n});
  k.berwald = Tensor({n, n, n});
  k.P = Tensor({n, n});
  k.eps.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    k.G[i] = sv.G(i);
    for (std::size_t j = 0; j < n; ++j) {
      k.N(i, j) = sv.dGdy(i, j);
      for (std::size_t l = 0; l < n; ++l) k.berwald(i, j, l) = sv.d2G(i, n + j, n + l);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double e = 2.0 * k.G[i];
    for (std::size_t j = 0; j < n; ++j) e -= k.N(i, j) * y[j];
    k.eps[i] = e;
    for (std::size_t j = 0; j < n; ++j) {
      double p = -2.0 * sv.dGdx(i, j);
      for (std::size_t l = 0; l < n; ++l) {
        p -= 2.0 * k.G[l] * k.berwald(i, j, l);
        p += y[l] * sv.d2G(i, n + j, l);
        p += k.N(i, l) * k.N(l, j);
      }
      k.P(i, j) = p;
    }
  }
  return k;
}

}  // namespace detail

/// ε, N, Berwald tensor and P from one jet evaluation.
inline KccInvariants kcc_invariants(const Semispray& s, std::span<const double> x, std::span<const double> y) {
  return detail::kcc_from_value(s.evaluate(x, y), x, y);
}

inline KccInvariants kcc_invariants(const Semispray& s, double x, double y) {
  const double xs[1] = {x};
  const double ys[1] = {y};
  return kcc_invariants(s, xs, ys);
}

/// ε^i = 2G^i − N^i_j y^j.
inline std::vector<double> first_invariant(const Semispray& s, std::span<const double> x, std::span<const double> y) {
  return kcc_invariants(s, x, y).eps;
}

/// P^i_j = −2∂G^i/∂x^j − 2G^l G^i_jl + y^l ∂N^i_j/∂x^l + N^i_l N^l_j.
inline Tensor deviation_curvature(const Semispray& s, std::span<const double> x, std::span<const double> y) {
  return kcc_invariants(s, x, y).P;
}

inline double deviation_curvature(const Semispray& s, double x, double y) {
  return kcc_invariants(s, x, y).P(0, 0);
}

/// Jacobi stable iff every eigenvalue of P has real part below −ε_j, ε_j = 1e-8·(1+‖P‖).
inline JacobiReport classify_jacobi(const Tensor& P, std::optional<double> eps_j = std::nullopt) {
  if (P.rank() != 2 || P.shape()[0] != P.shape()[1] || P.shape()[0] == 0 || P.shape()[0] > 2)
    throw std::invalid_argument("classify_jacobi: P must be 1x1 or 2x2");
  JacobiReport r;
  r.P = P;
  r.eps_j = eps_j.value_or(1e-8 * (1.0 + P.frobenius()));
  if (P.shape()[0] == 1) {
    r.eigenvalues = {std::complex<double>(P(0, 0))};
  } else {
    const auto ev = eigen2(Mat2{{{P(0, 0), P(0, 1)}, {P(1, 0), P(1, 1)}}});
    r.eigenvalues.assign(ev.begin(), ev.end());
  }
  bool all_negative = true;
  bool any_small = false;
  for (const auto& ev : r.eigenvalues) {
    r.real_parts.push_back(ev.real());
    if (std::abs(ev.real()) <= r.eps_j) any_small = true;
    if (!(ev.real() < -r.eps_j)) all_negative = false;
  }
  r.cls = any_small ? JacobiClass::Marginal : all_negative ? JacobiClass::JacobiStable : JacobiClass::JacobiUnstable;
  return r;
}

inline JacobiReport classify_jacobi(double p11, std::optional<double> eps_j = std::nullopt) {
  Tensor P({1, 1});
  P(0, 0) = p11;
  return classify_jacobi(P, eps_j);
}

struct HigherInvariants {
  Tensor third;   ///< P^i_jk
  Tensor fourth;  ///< P^i_jkl
  Tensor fifth;   ///< D^i_jkl
  double step = 0.0;
};

/**
 * @brief Invariants 3-5 by central differences in y of jet-exact P and Berwald tensors.
 *
 * Default step h = 1e-4·(1+‖y‖). The fourth invariant differences the third, so it
 * evaluates P on a (2h)-stencil.
 */
inline HigherInvariants higher_invariants(const Semispray& s, std::span<const double> x, std::span<const double> y,
                                          std::optional<double> fd_step = std::nullopt) {
  const std::size_t n = s.dim();
  double ynorm = 0.0;
  for (double v : y) ynorm += v * v;
  const double h = fd_step.value_or(1e-4 * (1.0 + std::sqrt(ynorm)));
  std::vector<double> yy(y.begin(), y.end());

  auto shifted = [&](std::size_t k, double delta) {
    std::vector<double> ys = yy;
    ys[k] += delta;
    return kcc_invariants(s, x, ys);
  };
  // ∂P^i_j/∂y^k at a y-offset, then the antisymmetrised third invariant.
  auto third_at = [&](const std::vector<double>& ybase) {
    Tensor dP({n, n, n});
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> yp = ybase, ym = ybase;
      yp[k] += h;
      ym[k] -= h;
      const Tensor Pp = kcc_invariants(s, x, yp).P;
      const Tensor Pm = kcc_invariants(s, x, ym).P;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dP(i, j, k) = (Pp(i, j) - Pm(i, j)) / (2.0 * h);
    }
    Tensor t({n, n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) t(i, j, k) = (dP(i, j, k) - dP(i, k, j)) / 3.0;
    return t;
  };

  HigherInvariants out;
  out.step = h;
  out.third = third_at(yy);
  out.fourth = Tensor({n, n, n, n});
  out.fifth = Tensor({n, n, n, n});
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<double> yp = yy, ym = yy;
    yp[l] += h;
    ym[l] -= h;
    const Tensor tp = third_at(yp);
    const Tensor tm = third_at(ym);
    const KccInvariants kp = shifted(l, h);
    const KccInvariants km = shifted(l, -h);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          out.fourth(i, j, k, l) = (tp(i, j, k) - tm(i, j, k)) / (2.0 * h);
          out.fifth(i, j, k, l) = (kp.berwald(i, j, k) - km.berwald(i, j, k)) / (2.0 * h);
        }
  }
  return out;
}

/// KCC invariants including the finite-difference invariants 3-5.
inline KccInvariants kcc_invariants_full(const Semispray& s, std::span<const double> x, std::span<const double> y,
                                         std::optional<double> fd_step = std::nullopt) {
  KccInvariants k = kcc_invariants(s, x, y);
  HigherInvariants h = higher_invariants(s, x, y, fd_step);
  k.third = std::move(h.third);
  k.fourth = std::move(h.fourth);
  k.fifth = std::move(h.fifth);
  k.higher_by_finite_difference = true;
  return k;
}

struct TheoremCheck {
  double lhs = 0.0;  ///< 4·P¹₁ at the image of the fixed point
  double rhs = 0.0;  ///< tr² − 4·det of the Jacobian
  double residual = 0.0;
  double p11 = 0.0;
  Eliminate eliminated = Eliminate::U;
  Vec2 image{};
};

/// Picks u when ∂g/∂u is the larger partial, else v.
inline Eliminate preferred_elimination(const VectorField2& vf, Vec2 p) {
  const Mat2 J = vf.jacobian(p[0], p[1]);
  return std::abs(J[1][0]) >= std::abs(J[0][1]) ? Eliminate::U : Eliminate::V;
}

/**
 * @brief Compares 4·P¹₁ of the reduced equation with the Jacobian discriminant at a fixed point.
 */
inline TheoremCheck theorem_check(const VectorField2& vf, Vec2 p, std::optional<Eliminate> which = std::nullopt) {
  const Eliminate e = which.value_or(preferred_elimination(vf, p));
  EliminationSettings settings;
  settings.initial_guess = e == Eliminate::U ? p[0] : p[1];
  const EliminationReduction red(vf, e, settings);
  const Semispray s = red.semispray();
  TheoremCheck t;
  t.eliminated = e;
  t.image = red.image(p[0], p[1]);
  t.p11 = deviation_curvature(s, t.image[0], t.image[1]);
  t.lhs = 4.0 * t.p11;
  const LinearReport lr = linearize(vf, p);
  t.rhs = lr.discriminant;
  t.residual = std::abs(t.lhs - t.rhs);
  return t;
}

}  // namespace kccstab
