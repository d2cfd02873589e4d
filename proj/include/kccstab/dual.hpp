#pragma once

#include <cmath>

namespace kccstab {

/// First-order dual number re + eps·ε with ε² = 0.
///
/// Used as the scalar of a Taylor2 jet when one extra directional derivative
/// is needed on top of the jet's own seeds (implicit elimination).
struct Dual {
  double re = 0.0;
  double eps = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double r, double e = 0.0) : re(r), eps(e) {}

  constexpr Dual& operator+=(const Dual& o) {
    re += o.re;
    eps += o.eps;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    re -= o.re;
    eps -= o.eps;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    eps = eps * o.re + re * o.eps;
    re *= o.re;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const double q = re / o.re;
    eps = (eps - q * o.eps) / o.re;
    re = q;
    return *this;
  }
};

constexpr Dual operator-(const Dual& a) { return {-a.re, -a.eps}; }
constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
constexpr Dual operator+(Dual a, double b) { return a += Dual(b); }
constexpr Dual operator-(Dual a, double b) { return a -= Dual(b); }
constexpr Dual operator*(const Dual& a, double b) { return {a.re * b, a.eps * b}; }
constexpr Dual operator/(const Dual& a, double b) { return {a.re / b, a.eps / b}; }
constexpr Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
constexpr Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
constexpr Dual operator*(double a, const Dual& b) { return b * a; }
constexpr Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.re);
  return {e, e * a.eps};
}
inline Dual log(const Dual& a) { return {std::log(a.re), a.eps / a.re}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.re);
  return {s, a.eps / (2.0 * s)};
}
inline Dual sin(const Dual& a) { return {std::sin(a.re), std::cos(a.re) * a.eps}; }
inline Dual cos(const Dual& a) { return {std::cos(a.re), -std::sin(a.re) * a.eps}; }
inline Dual pow(const Dual& a, double p) {
  if (p == 0.0) return {1.0, 0.0};
  if (p == 1.0) return a;
  return {std::pow(a.re, p), p * std::pow(a.re, p - 1.0) * a.eps};
}

constexpr double primal(double x) noexcept { return x; }
constexpr double primal(const Dual& x) noexcept { return x.re; }

}  // namespace kccstab
