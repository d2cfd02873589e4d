#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kccstab/format.hpp"
#include "kccstab/linstab.hpp"
#include "kccstab/sode.hpp"

namespace kccstab {

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Planar polynomial field without constant terms, so the origin is always a fixed point.
struct PolynomialSystem {
  std::vector<std::array<int, 2>> monomials;  ///< exponents (i, j) of u^i v^j
  std::vector<double> f;
  std::vector<double> g;

  template <class T>
  std::array<T, 2> operator()(const T& u, const T& v) const {
    T fu = u * 0.0;
    T gv = u * 0.0;
    for (std::size_t k = 0; k < monomials.size(); ++k) {
      T m = u * 0.0 + 1.0;
      for (int i = 0; i < monomials[k][0]; ++i) m = m * u;
      for (int j = 0; j < monomials[k][1]; ++j) m = m * v;
      fu = fu + f[k] * m;
      gv = gv + g[k] * m;
    }
    return {fu, gv};
  }

  VectorField2 field() const {
    auto self = std::make_shared<const PolynomialSystem>(*this);
    return VectorField2::native([self](const auto& u, const auto& v) { return (*self)(u, v); }, {},
                                "du/dt = " + expression(f) + "; dv/dt = " + expression(g));
  }

  std::string du() const { return expression(f); }
  std::string dv() const { return expression(g); }

 private:
  std::string expression(const std::vector<double>& c) const {
    std::string out;
    for (std::size_t k = 0; k < monomials.size(); ++k) {
      if (c[k] == 0.0) continue;
      if (!out.empty()) out += "+";
      out += "(" + format_number(c[k]) + ")";
      for (int i = 0; i < monomials[k][0]; ++i) out += "*u";
      for (int j = 0; j < monomials[k][1]; ++j) out += "*v";
    }
    return out.empty() ? "0" : out;
  }
};

struct RandomSystemOptions {
  int max_degree = 3;
  double coefficient_bound = 2.0;
  double min_abs_gu = 0.1;        ///< theorem hypothesis margin for eliminating u
  double min_abs_real_part = 0.05;  ///< hyperbolicity margin
  double min_abs_discriminant = 1e-4;
};

/**
 * @brief Draws a polynomial system with coefficients uniform in [−c, c] and degree in 1..max_degree,
 * rejecting draws whose origin is not safely hyperbolic or has |∂g/∂u| too small.
 */
inline PolynomialSystem random_polynomial_system(std::mt19937_64& rng, const RandomSystemOptions& opt = {}) {
  for (;;) {
    PolynomialSystem s;
    const int degree = 1 + static_cast<int>(uniform01(rng) * opt.max_degree);
    for (int d = 1; d <= degree; ++d)
      for (int i = d; i >= 0; --i) s.monomials.push_back({i, d - i});
    for (std::size_t k = 0; k < s.monomials.size(); ++k) {
      s.f.push_back(uniform(rng, -opt.coefficient_bound, opt.coefficient_bound));
      s.g.push_back(uniform(rng, -opt.coefficient_bound, opt.coefficient_bound));
    }
    // Linear part: monomials[0] = u, monomials[1] = v.
    const Mat2 J{{{s.f[0], s.f[1]}, {s.g[0], s.g[1]}}};
    if (std::abs(J[1][0]) <= opt.min_abs_gu) continue;
    const auto ev = eigen2(J);
    if (std::abs(ev[0].real()) < opt.min_abs_real_part || std::abs(ev[1].real()) < opt.min_abs_real_part) continue;
    const double tr = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (std::abs(tr * tr - 4.0 * det) < opt.min_abs_discriminant) continue;
    return s;
  }
}

}  // namespace kccstab
