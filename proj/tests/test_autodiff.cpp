#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kccstab/random_systems.hpp"
#include "kccstab/taylor2.hpp"

using namespace kccstab;

TEST(Seed, Variables) {
  const Jet a = seed_variable(0, 2.0, 2);
  EXPECT_EQ(a.value(), 2.0);
  EXPECT_EQ(a.grad(0), 1.0);
  EXPECT_EQ(a.grad(1), 0.0);
  EXPECT_EQ(a.hess(0, 1), 0.0);
  const Jet b = seed_variable(1, -1.0, 2);
  EXPECT_EQ(b.value(), -1.0);
  EXPECT_EQ(b.grad(0), 0.0);
  EXPECT_EQ(b.grad(1), 1.0);
  const Jet c = seed_variable(0, 0.0, 1);
  EXPECT_EQ(c.value(), 0.0);
  EXPECT_EQ(c.grad(0), 1.0);
  EXPECT_EQ(c.hess(0, 0), 0.0);
  EXPECT_THROW(seed_variable(2, 0.0, 2), std::out_of_range);
  EXPECT_THROW(seed_variable(0, 0.0, kMaxSeeds + 1), std::invalid_argument);
}

TEST(Arithmetic, Product) {
  const Jet r = seed_variable(0, 2.0, 2) * seed_variable(1, 3.0, 2);
  EXPECT_EQ(r.value(), 6.0);
  EXPECT_EQ(r.grad(0), 3.0);
  EXPECT_EQ(r.grad(1), 2.0);
  EXPECT_EQ(r.hess(0, 0), 0.0);
  EXPECT_EQ(r.hess(0, 1), 1.0);
  EXPECT_EQ(r.hess(1, 0), 1.0);
  EXPECT_EQ(r.hess(1, 1), 0.0);
}

TEST(Arithmetic, Quotient) {
  const Jet r = seed_variable(0, 1.0, 1) / Jet::constant(2.0, 1);
  EXPECT_EQ(r.value(), 0.5);
  EXPECT_EQ(r.grad(0), 0.5);
  EXPECT_EQ(r.hess(0, 0), 0.0);
  EXPECT_THROW(seed_variable(0, 1.0, 1) / Jet::constant(0.0, 1), DomainError);
}

TEST(Arithmetic, Square) {
  const Jet r = pow(seed_variable(0, 3.0, 1), 2.0);
  EXPECT_EQ(r.value(), 9.0);
  EXPECT_EQ(r.grad(0), 6.0);
  EXPECT_EQ(r.hess(0, 0), 2.0);
}

TEST(Arithmetic, PowDomain) {
  EXPECT_THROW(pow(seed_variable(0, -1.0, 1), 0.5), DomainError);
  EXPECT_THROW(pow(seed_variable(0, 0.0, 1), -1.0), DomainError);
  EXPECT_THROW(pow(seed_variable(0, 0.0, 1), 1.5), DomainError);
  const Jet z = pow(seed_variable(0, 0.0, 1), 2.5);
  EXPECT_EQ(z.value(), 0.0);
  EXPECT_EQ(z.grad(0), 0.0);
  EXPECT_EQ(z.hess(0, 0), 0.0);
  const Jet c = pow(seed_variable(0, -2.0, 1), 3.0);
  EXPECT_EQ(c.value(), -8.0);
  EXPECT_EQ(c.grad(0), 12.0);
  EXPECT_EQ(c.hess(0, 0), -12.0);
  EXPECT_THROW(log(seed_variable(0, 0.0, 1)), DomainError);
  EXPECT_THROW(sqrt(seed_variable(0, 0.0, 1)), DomainError);
}

TEST(Arithmetic, MismatchedSeedsRejected) {
  EXPECT_THROW(seed_variable(0, 1.0, 1) + seed_variable(0, 1.0, 2), std::invalid_argument);
}

TEST(DualJets, NestedDirectionalDerivative) {
  // The eps part of a Taylor2<Dual> is the derivative along the Dual direction.
  using DJ = Taylor2<Dual>;
  const DJ x = DJ::variable(0, Dual(1.5, 1.0), 1);
  const DJ r = x * x * x;
  EXPECT_DOUBLE_EQ(r.value().re, 3.375);
  EXPECT_DOUBLE_EQ(r.value().eps, 3 * 2.25);
  EXPECT_DOUBLE_EQ(r.grad(0).re, 3 * 2.25);
  EXPECT_DOUBLE_EQ(r.grad(0).eps, 6 * 1.5);
  EXPECT_DOUBLE_EQ(r.hess(0, 0).re, 6 * 1.5);
  EXPECT_DOUBLE_EQ(r.hess(0, 0).eps, 6.0);
}

namespace {

/// A random composition f(x, y) of the elementary functions, applied generically.
template <class T>
T composite(const T& x, const T& y, int variant) {
  switch (variant % 5) {
    case 0: return exp(sin(x) * y) + x * x * y;
    case 1: return sqrt(x * x + y * y + 1.0) / (cos(y) + 2.0);
    case 2: return log(x * x + 1.0) * pow(y * y + 0.5, 1.5);
    case 3: return sin(x * y) - cos(x - y) * exp(-x * x);
    default: return (x - y) / (x * x + y * y + 0.25) + pow(x + 3.0, -2.0);
  }
}

}  // namespace

TEST(AutodiffProperty, MatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = uniform(rng, -1.5, 1.5);
    const double y = uniform(rng, -1.5, 1.5);
    const Jet j = composite(Jet::variable(0, x, 2), Jet::variable(1, y, 2), trial);
    auto f = [&](double a, double b) { return composite(a, b, trial); };
    const double h = 1e-5;
    const double s = 1.0 + std::abs(j.value());
    EXPECT_NEAR(j.value(), f(x, y), 1e-14 * s);
    EXPECT_NEAR(j.grad(0), (f(x + h, y) - f(x - h, y)) / (2 * h), 1e-6 * s);
    EXPECT_NEAR(j.grad(1), (f(x, y + h) - f(x, y - h)) / (2 * h), 1e-6 * s);
    // Hessian from central differences of the exact gradient.
    auto g = [&](double a, double b) {
      const Jet t = composite(Jet::variable(0, a, 2), Jet::variable(1, b, 2), trial);
      return std::array<double, 2>{t.grad(0), t.grad(1)};
    };
    const auto gx = g(x + h, y), gxm = g(x - h, y), gy = g(x, y + h), gym = g(x, y - h);
    const double hs = s + std::abs(j.hess(0, 0)) + std::abs(j.hess(1, 1));
    EXPECT_NEAR(j.hess(0, 0), (gx[0] - gxm[0]) / (2 * h), 1e-6 * hs);
    EXPECT_NEAR(j.hess(0, 1), (gy[0] - gym[0]) / (2 * h), 1e-6 * hs);
    EXPECT_NEAR(j.hess(1, 1), (gy[1] - gym[1]) / (2 * h), 1e-6 * hs);
  }
}

TEST(AutodiffProperty, ChainRuleComposition) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const double x = uniform(rng, -1.0, 1.0);
    const double y = uniform(rng, -1.0, 1.0);
    const Jet X = Jet::variable(0, x, 2), Y = Jet::variable(1, y, 2);
    // Inner map g(x, y) = (p, q), outer f(p, q); one program vs composed jets.
    auto inner_p = [](const auto& a, const auto& b) { return sin(a) * b + 0.5; };
    auto inner_q = [](const auto& a, const auto& b) { return exp(a - b) * 0.3; };
    const Jet direct = composite(inner_p(X, Y), inner_q(X, Y), trial);
    const Jet p = inner_p(X, Y), q = inner_q(X, Y);
    const Jet outer = composite(Jet::variable(0, p.value(), 2), Jet::variable(1, q.value(), 2), trial);
    const std::array<Jet, 2> in{p, q};
    const Jet composed = compose<double>(outer, in);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); };
    EXPECT_TRUE(close(composed.value(), direct.value()));
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_TRUE(close(composed.grad(i), direct.grad(i))) << composed.grad(i) << " vs " << direct.grad(i);
      for (std::size_t k = 0; k < 2; ++k)
        EXPECT_TRUE(close(composed.hess(i, k), direct.hess(i, k))) << composed.hess(i, k) << " vs " << direct.hess(i, k);
    }
  }
}
