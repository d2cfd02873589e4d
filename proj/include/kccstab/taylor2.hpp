#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include "kccstab/dual.hpp"
#include "kccstab/error.hpp"

namespace kccstab {

/// Maximum seed dimension of a jet. Planar phase space (x, y) with n <= 2 needs 4.
inline constexpr std::size_t kMaxSeeds = 4;

constexpr bool is_exact_zero(double x) noexcept { return x == 0.0; }
constexpr bool is_exact_zero(const Dual& x) noexcept { return x.re == 0.0 && x.eps == 0.0; }

/**
 * @brief Second-order forward-mode jet: value, gradient and Hessian over m seeds.
 *
 * The Hessian is stored as an upper triangle so symmetry is exact. Operands of a
 * binary operation must share the seed dimension.
 *
 * @tparam T scalar type, double or Dual
 */
template <class T = double>
class Taylor2 {
 public:
  using scalar_type = T;
  static constexpr std::size_t kHessianSize = kMaxSeeds * (kMaxSeeds + 1) / 2;

  constexpr Taylor2() = default;

  static Taylor2 constant(T value, std::size_t m) {
    check_dim(m);
    Taylor2 r;
    r.v_ = value;
    r.m_ = m;
    return r;
  }

  static Taylor2 variable(std::size_t index, T value, std::size_t m) {
    check_dim(m);
    if (index >= m) throw std::out_of_range("Taylor2: seed index out of range");
    Taylor2 r = constant(value, m);
    r.g_[index] = T(1.0);
    return r;
  }

  std::size_t seeds() const noexcept { return m_; }

  const T& value() const noexcept { return v_; }
  T& value() noexcept { return v_; }
  const T& grad(std::size_t i) const { return g_[i]; }
  T& grad(std::size_t i) { return g_[i]; }
  const T& hess(std::size_t i, std::size_t j) const { return h_[tri(i, j)]; }
  T& hess(std::size_t i, std::size_t j) { return h_[tri(i, j)]; }

  /// True when gradient and Hessian vanish identically.
  bool is_constant() const noexcept {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_exact_zero(g_[i])) return false;
      for (std::size_t j = i; j < m_; ++j)
        if (!is_exact_zero(h_[tri(i, j)])) return false;
    }
    return true;
  }

  Taylor2& operator+=(const Taylor2& o) {
    check_same(o);
    v_ += o.v_;
    for (std::size_t i = 0; i < m_; ++i) g_[i] += o.g_[i];
    for_each_tri([&](std::size_t k) { h_[k] += o.h_[k]; });
    return *this;
  }

  Taylor2& operator-=(const Taylor2& o) {
    check_same(o);
    v_ -= o.v_;
    for (std::size_t i = 0; i < m_; ++i) g_[i] -= o.g_[i];
    for_each_tri([&](std::size_t k) { h_[k] -= o.h_[k]; });
    return *this;
  }

  Taylor2& operator*=(const Taylor2& o) {
    check_same(o);
    Taylor2 r = constant(v_ * o.v_, m_);
    for (std::size_t i = 0; i < m_; ++i) r.g_[i] = g_[i] * o.v_ + v_ * o.g_[i];
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = i; j < m_; ++j) {
        const std::size_t k = tri(i, j);
        r.h_[k] = h_[k] * o.v_ + v_ * o.h_[k] + g_[i] * o.g_[j] + g_[j] * o.g_[i];
      }
    return *this = r;
  }

  Taylor2& operator/=(const Taylor2& o) { return *this *= reciprocal(o); }

  Taylor2& operator+=(const std::type_identity_t<T>& c) {
    v_ += c;
    return *this;
  }
  Taylor2& operator-=(const std::type_identity_t<T>& c) {
    v_ -= c;
    return *this;
  }
  Taylor2& operator*=(const std::type_identity_t<T>& c) {
    v_ *= c;
    for (std::size_t i = 0; i < m_; ++i) g_[i] *= c;
    for_each_tri([&](std::size_t k) { h_[k] *= c; });
    return *this;
  }
  Taylor2& operator/=(const std::type_identity_t<T>& c) {
    if (primal(c) == 0.0) throw DomainError("division by zero");
    return *this *= T(1.0) / c;
  }

  /// Applies a scalar function given its value and first two derivatives at value().
  Taylor2 chain(const T& f0, const T& f1, const T& f2) const {
    Taylor2 r = constant(f0, m_);
    for (std::size_t i = 0; i < m_; ++i) r.g_[i] = f1 * g_[i];
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = i; j < m_; ++j) {
        const std::size_t k = tri(i, j);
        r.h_[k] = f1 * h_[k] + f2 * g_[i] * g_[j];
      }
    return r;
  }

  friend Taylor2 reciprocal(const Taylor2& x) {
    if (primal(x.v_) == 0.0) throw DomainError("division by zero");
    const T inv = T(1.0) / x.v_;
    const T inv2 = inv * inv;
    return x.chain(inv, -inv2, 2.0 * inv2 * inv);
  }

 private:
  static constexpr std::size_t tri(std::size_t i, std::size_t j) noexcept {
    if (i > j) std::swap(i, j);
    return i * (2 * kMaxSeeds - i + 1) / 2 + (j - i);
  }

  static void check_dim(std::size_t m) {
    if (m > kMaxSeeds) throw std::invalid_argument("Taylor2: seed dimension exceeds capacity");
  }

  void check_same(const Taylor2& o) const {
    if (m_ != o.m_) throw std::invalid_argument("Taylor2: seed dimension mismatch");
  }

  template <class F>
  void for_each_tri(F&& f) const {
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = i; j < m_; ++j) f(tri(i, j));
  }

  T v_{};
  std::array<T, kMaxSeeds> g_{};
  std::array<T, kHessianSize> h_{};
  std::size_t m_ = 0;
};

using Jet = Taylor2<double>;
using DualJet = Taylor2<Dual>;

template <class T>
Taylor2<T> seed_variable(std::size_t index, T value, std::size_t m) {
  return Taylor2<T>::variable(index, value, m);
}

inline Jet seed_variable(std::size_t index, double value, std::size_t m) {
  return Jet::variable(index, value, m);
}

template <class T>
double primal(const Taylor2<T>& x) noexcept {
  return primal(x.value());
}

template <class T>
Taylor2<T> operator-(Taylor2<T> a) {
  a *= T(-1.0);
  return a;
}
template <class T>
Taylor2<T> operator+(Taylor2<T> a, const Taylor2<T>& b) { return a += b; }
template <class T>
Taylor2<T> operator-(Taylor2<T> a, const Taylor2<T>& b) { return a -= b; }
template <class T>
Taylor2<T> operator*(Taylor2<T> a, const Taylor2<T>& b) { return a *= b; }
template <class T>
Taylor2<T> operator/(Taylor2<T> a, const Taylor2<T>& b) { return a /= b; }

template <class T>
Taylor2<T> operator+(Taylor2<T> a, const std::type_identity_t<T>& c) { return a += c; }
template <class T>
Taylor2<T> operator-(Taylor2<T> a, const std::type_identity_t<T>& c) { return a -= c; }
template <class T>
Taylor2<T> operator*(Taylor2<T> a, const std::type_identity_t<T>& c) { return a *= c; }
template <class T>
Taylor2<T> operator/(Taylor2<T> a, const std::type_identity_t<T>& c) { return a /= c; }
template <class T>
Taylor2<T> operator+(const std::type_identity_t<T>& c, Taylor2<T> a) { return a += c; }
template <class T>
Taylor2<T> operator-(const std::type_identity_t<T>& c, const Taylor2<T>& a) { return -a + c; }
template <class T>
Taylor2<T> operator*(const std::type_identity_t<T>& c, Taylor2<T> a) { return a *= c; }
template <class T>
Taylor2<T> operator/(const std::type_identity_t<T>& c, const Taylor2<T>& a) { return reciprocal(a) * c; }

template <class T>
Taylor2<T> exp(const Taylor2<T>& x) {
  using std::exp;
  const T e = exp(x.value());
  return x.chain(e, e, e);
}

template <class T>
Taylor2<T> log(const Taylor2<T>& x) {
  using std::log;
  if (!(primal(x) > 0.0)) throw DomainError("ln of non-positive value");
  const T inv = T(1.0) / x.value();
  return x.chain(log(x.value()), inv, -(inv * inv));
}

template <class T>
Taylor2<T> ln(const Taylor2<T>& x) {
  return log(x);
}

template <class T>
Taylor2<T> sqrt(const Taylor2<T>& x) {
  using std::sqrt;
  if (!(primal(x) > 0.0)) {
    if (primal(x) == 0.0 && x.is_constant()) return x;
    throw DomainError("sqrt of non-positive value");
  }
  const T s = sqrt(x.value());
  const T d1 = 0.5 / s;
  return x.chain(s, d1, -0.5 * d1 / x.value());
}

template <class T>
Taylor2<T> sin(const Taylor2<T>& x) {
  using std::cos;
  using std::sin;
  const T s = sin(x.value());
  return x.chain(s, cos(x.value()), -s);
}

template <class T>
Taylor2<T> cos(const Taylor2<T>& x) {
  using std::cos;
  using std::sin;
  const T c = cos(x.value());
  return x.chain(c, -sin(x.value()), -c);
}

template <class T>
Taylor2<T> abs(const Taylor2<T>& x) {
  return primal(x) < 0.0 ? -x : x;
}

inline bool is_integral_exponent(double p) noexcept {
  return std::isfinite(p) && std::nearbyint(p) == p && std::abs(p) < 1e9;
}

/// x^p for a constant exponent. Integer p allows negative x; non-integer p needs x > 0,
/// except x = 0 with p > 2 where value and both derivatives vanish.
template <class T>
Taylor2<T> pow(const Taylor2<T>& x, double p) {
  using std::pow;
  const double xv = primal(x);
  if (p == 0.0) return Taylor2<T>::constant(T(1.0), x.seeds());
  if (p == 1.0) return x;
  if (x.is_constant()) {
    if (xv < 0.0 && !is_integral_exponent(p)) throw DomainError("non-integer power of negative value");
    if (xv == 0.0 && p < 0.0) throw DomainError("zero raised to a negative power");
    return Taylor2<T>::constant(pow(x.value(), p), x.seeds());
  }
  if (is_integral_exponent(p)) {
    if (xv == 0.0 && p < 0.0) throw DomainError("zero raised to a negative power");
  } else if (xv < 0.0 || (xv == 0.0 && p < 2.0)) {
    throw DomainError("non-integer power outside the positive axis");
  }
  return x.chain(pow(x.value(), p), p * pow(x.value(), p - 1.0), p * (p - 1.0) * pow(x.value(), p - 2.0));
}

/// General power exp(y ln x); requires x > 0.
template <class T>
Taylor2<T> pow(const Taylor2<T>& x, const Taylor2<T>& y) {
  if (y.is_constant()) return pow(x, primal(y));
  return exp(y * log(x));
}

/**
 * @brief Composes an outer jet with inner jets by the second-order chain rule.
 *
 * `outer` is expanded over k seeds, `inner` holds k jets over a common seed set.
 */
template <class T>
Taylor2<T> compose(const Taylor2<T>& outer, std::span<const Taylor2<T>> inner) {
  const std::size_t k = outer.seeds();
  if (inner.size() != k) throw std::invalid_argument("compose: arity mismatch");
  const std::size_t m = k == 0 ? 0 : inner[0].seeds();
  Taylor2<T> r = Taylor2<T>::constant(outer.value(), m);
  for (std::size_t i = 0; i < m; ++i) {
    T gi{};
    for (std::size_t a = 0; a < k; ++a) gi += outer.grad(a) * inner[a].grad(i);
    r.grad(i) = gi;
    for (std::size_t j = i; j < m; ++j) {
      T hij{};
      for (std::size_t a = 0; a < k; ++a) {
        hij += outer.grad(a) * inner[a].hess(i, j);
        for (std::size_t b = 0; b < k; ++b) hij += outer.hess(a, b) * inner[a].grad(i) * inner[b].grad(j);
      }
      r.hess(i, j) = hij;
    }
  }
  return r;
}

}  // namespace kccstab
