#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kccstab/linstab.hpp"
#include "kccstab/models.hpp"
#include "kccstab/random_systems.hpp"

using namespace kccstab;

TEST(Eigen2, RotationAndDiagonal) {
  const auto r = eigen2({{{0.0, 1.0}, {-1.0, 0.0}}});
  EXPECT_DOUBLE_EQ(r[0].real(), 0.0);
  EXPECT_DOUBLE_EQ(std::abs(r[0].imag()), 1.0);
  EXPECT_DOUBLE_EQ(r[1].imag(), -r[0].imag());
  const auto d = eigen2({{{2.0, 0.0}, {0.0, 3.0}}});
  EXPECT_EQ(d[0].imag(), 0.0);
  EXPECT_DOUBLE_EQ(std::min(d[0].real(), d[1].real()), 2.0);
  EXPECT_DOUBLE_EQ(std::max(d[0].real(), d[1].real()), 3.0);
}

TEST(Eigen2, CharacteristicPolynomialProperty) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Mat2 J{{{uniform(rng, -5, 5), uniform(rng, -5, 5)}, {uniform(rng, -5, 5), uniform(rng, -5, 5)}}};
    const double tr = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    for (const auto& l : eigen2(J)) {
      const std::complex<double> p = l * l - tr * l + det;
      EXPECT_LE(std::abs(p), 1e-10 * (1.0 + std::abs(det) + tr * tr));
    }
  }
}

TEST(ClassifyLinear, Examples) {
  EXPECT_EQ(classify_linear({{{-1.0, 0.0}, {0.0, -2.0}}}).cls, LinearClass::StableNode);
  EXPECT_EQ(classify_linear({{{1.0, 0.0}, {0.0, 2.0}}}).cls, LinearClass::UnstableNode);
  EXPECT_EQ(classify_linear({{{1.0, 0.0}, {0.0, -2.0}}}).cls, LinearClass::Saddle);
  EXPECT_EQ(classify_linear({{{-0.1, 1.0}, {-1.0, -0.1}}}).cls, LinearClass::StableFocus);
  EXPECT_EQ(classify_linear({{{0.1, 1.0}, {-1.0, 0.1}}}).cls, LinearClass::UnstableFocus);
  EXPECT_EQ(classify_linear({{{0.0, 1.0}, {-1.0, 0.0}}}).cls, LinearClass::Center);
  EXPECT_EQ(classify_linear({{{-2.0, 0.0}, {0.0, -2.0}}}).cls, LinearClass::StarNode);
  EXPECT_EQ(classify_linear({{{-2.0, 1.0}, {0.0, -2.0}}}).cls, LinearClass::DegenerateNode);
  EXPECT_EQ(classify_linear({{{0.0, 0.0}, {0.0, -1.0}}}).cls, LinearClass::NonHyperbolic);
  const LinearReport s = classify_linear({{{1.0, 0.0}, {0.0, -2.0}}});
  EXPECT_EQ(s.stability, Stability::Mixed);
  EXPECT_TRUE(s.hyperbolic);
}

TEST(ClassifyLinear, SphereSteadyState) {
  const Model m = make_sphere({{"gamma", 1.5}});
  const LinearReport r = linearize(m.field, m.refs.at("S1").location);
  EXPECT_NEAR(r.trace, -5.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.det, 17.0 / 4.5, 1e-12);
  EXPECT_NEAR(r.discriminant, (2.25 - 66.0 + 36.0) / 2.25, 1e-11);
  EXPECT_EQ(r.cls, LinearClass::StableFocus);
}

TEST(ClassifyLinear, BrusselatorHopfPoint) {
  const Model m = make_brusselator({{"a", 1.0}, {"b", 2.0}});
  const LinearReport r = linearize(m.field, {1.0, 2.0});
  EXPECT_NEAR(r.trace, 0.0, 1e-15);
  EXPECT_NEAR(r.det, 1.0, 1e-15);
  EXPECT_EQ(r.cls, LinearClass::Center);
  EXPECT_FALSE(r.hyperbolic);
}

TEST(LinstabProperty, SimilarityInvariance) {
  std::mt19937_64 rng(19);
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    const Mat2 J{{{uniform(rng, -3, 3), uniform(rng, -3, 3)}, {uniform(rng, -3, 3), uniform(rng, -3, 3)}}};
    const Mat2 S{{{uniform(rng, -2, 2), uniform(rng, -2, 2)}, {uniform(rng, -2, 2), uniform(rng, -2, 2)}}};
    const double d = S[0][0] * S[1][1] - S[0][1] * S[1][0];
    if (std::abs(d) < 0.2) continue;
    const Mat2 Si{{{S[1][1] / d, -S[0][1] / d}, {-S[1][0] / d, S[0][0] / d}}};
    Mat2 SJ{}, B{};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) SJ[r][c] = S[r][0] * J[0][c] + S[r][1] * J[1][c];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) B[r][c] = SJ[r][0] * Si[0][c] + SJ[r][1] * Si[1][c];
    const LinearReport a = classify_linear(J, 1e-6);
    // Stay away from class boundaries, where rounding could legitimately flip the answer.
    const double margin = std::min({std::abs(a.det), std::abs(a.discriminant), std::abs(a.trace)});
    if (margin < 1e-3) continue;
    EXPECT_EQ(a.cls, classify_linear(B, 1e-6).cls);
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(LinstabProperty, SaddleIffNegativeDeterminant) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const Mat2 J{{{uniform(rng, -3, 3), uniform(rng, -3, 3)}, {uniform(rng, -3, 3), uniform(rng, -3, 3)}}};
    const LinearReport r = classify_linear(J);
    if (std::abs(r.det) < 1e-6) continue;
    EXPECT_EQ(r.cls == LinearClass::Saddle, r.det < 0.0);
  }
}

TEST(FixedPoints, BrusselatorUniquePoint) {
  const Model m = make_brusselator({{"a", 4.0}, {"b", 0.5}});
  const FixedPointSet s = find_fixed_points(m.field, {0.0, 3.0, 0.0, 3.0}, 21);
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_NEAR(s.points[0].x[0], 1.0, 1e-12);
  EXPECT_NEAR(s.points[0].x[1], 0.125, 1e-12);
  EXPECT_FALSE(s.degenerate);
}

TEST(FixedPoints, SphereSteadyState) {
  const Model m = make_sphere({{"gamma", 1.5}});
  const FixedPointSet s = find_fixed_points(m.field, {0.01, 0.49, 0.01, 1.0}, 21);
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_NEAR(s.points[0].x[0], 1.0 / 4.25, 1e-10);
  EXPECT_NEAR(s.points[0].x[1], 1.0 / 4.25, 1e-10);
}

TEST(FixedPoints, ZeroFieldIsDegenerate) {
  const VectorField2 vf = VectorField2::native([](const auto& u, const auto&) { return std::array{u * 0.0, u * 0.0}; });
  EXPECT_TRUE(find_fixed_points(vf, {-1.0, 1.0, -1.0, 1.0}, 5).degenerate);
}

TEST(FixedPoints, SeveralRoots) {
  // u' = u(1-u), v' = v^2 - 1/4: four fixed points.
  const VectorField2 vf = VectorField2::native([](const auto& u, const auto& v) { return std::array{u * (1.0 - u), v * v - 0.25}; });
  const FixedPointSet s = find_fixed_points(vf, {-0.5, 1.5, -1.0, 1.0}, 21);
  EXPECT_EQ(s.points.size(), 4u);
  for (const auto& p : s.points) EXPECT_LE(p.residual, 1e-12);
}

TEST(Newton, RespectsDomain) {
  const VectorField2 vf = VectorField2::native([](const auto& u, const auto& v) { return std::array{u - 0.5, v - 0.5}; },
                                               [](double u, double) { return u != 0.0; });
  const auto fp = newton_fixed_point(vf, {0.2, 0.2});
  ASSERT_TRUE(fp.has_value());
  EXPECT_NEAR(fp->x[0], 0.5, 1e-14);
  EXPECT_FALSE(newton_fixed_point(vf, {0.0, 0.2}).has_value());
}

TEST(Lyapunov, HessianEigenvaluesOfQuadraticForm) {
  // V = u^2 + v^2 with J = diag(-1, -3): the form W J + J^T W has eigenvalues -4 and -12.
  const VectorField2 vf = VectorField2::native([](const auto& u, const auto& v) { return std::array{-u, -3.0 * v}; });
  const auto mu = lyapunov_hessian_eigenvalues(vf, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(mu[0], -4.0);
  EXPECT_DOUBLE_EQ(mu[1], -12.0);
}
