#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kccstab/flow.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/models.hpp"
#include "kccstab/random_systems.hpp"

using namespace kccstab;

namespace {

double pipeline_p11(const Model& m, Vec2 p) {
  const Vec2 ph = m.phase_point(p);
  return deviation_curvature(m.semispray, ph[0], ph[1]);
}

}  // namespace

TEST(Catalog, NamesAndErrors) {
  for (ModelName n : kAllModels) EXPECT_EQ(model_from_string(to_string(n)), n);
  EXPECT_FALSE(model_from_string("lorenz").has_value());
  EXPECT_THROW(make_model("lorenz", {}), InvalidParameter);
  EXPECT_THROW(make_brusselator({{"a", 1.0}}), InvalidParameter);
  EXPECT_THROW(make_brusselator({{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}), InvalidParameter);
  EXPECT_THROW(make_lane_emden({{"n", 1.0}}), InvalidParameter);
  EXPECT_THROW(make_lane_emden({{"n", 3.0}, {"B", -1.0}}), InvalidParameter);
  EXPECT_THROW(make_sphere({{"gamma", 1.0}}), InvalidParameter);
  EXPECT_THROW(make_sphere({{"gamma", 2.5}}), InvalidParameter);
  EXPECT_EQ(make_model("brane", {{"gamma", 0.0}}).name, ModelName::BraneVacuum);
}

TEST(Brusselator, RegionDPoint) {
  const Model m = make_brusselator({{"a", 4.0}, {"b", 0.5}});
  const ReferencePoint& s = m.refs.at("S");
  EXPECT_EQ(s.location, (Vec2{1.0, 0.125}));
  EXPECT_DOUBLE_EQ(s.discriminant, 4.25);
  EXPECT_EQ(s.linear, LinearClass::StableNode);
  EXPECT_EQ(s.jacobi, JacobiClass::JacobiUnstable);
  EXPECT_NEAR(pipeline_p11(m, s.location), 4.25 / 4.0, 1e-12);
}

TEST(Brusselator, Regions) {
  EXPECT_EQ(brusselator_regions(4.0, 0.5).region, BrusselatorRegion::D);
  EXPECT_EQ(brusselator_regions(1.0, 2.5).region, BrusselatorRegion::B);
  EXPECT_EQ(brusselator_regions(1.0, 5.0).region, BrusselatorRegion::A);
  EXPECT_EQ(brusselator_regions(4.0, 4.0).region, BrusselatorRegion::C);
  EXPECT_TRUE(brusselator_regions(1.0, 2.0).on_boundary);
  EXPECT_TRUE(brusselator_regions(1.0, 4.0).on_boundary);
  EXPECT_FALSE(brusselator_regions(1.0, 2.5).on_boundary);
  EXPECT_THROW(brusselator_regions(0.0, 1.0), InvalidParameter);
  const ReferencePoint& b = make_brusselator({{"a", 1.0}, {"b", 2.5}}).refs.at("S");
  EXPECT_EQ(b.linear, LinearClass::UnstableFocus);
  EXPECT_EQ(b.jacobi, JacobiClass::JacobiStable);
  EXPECT_EQ(make_brusselator({{"a", 1.0}, {"b", 5.0}}).refs.at("S").linear, LinearClass::UnstableNode);
}

TEST(LaneEmden, IndexFive) {
  const Model m = make_lane_emden({{"n", 5.0}, {"B", 1.0}});
  const ReferencePoint& xn = m.refs.at("X_n");
  EXPECT_NEAR(xn.location[0], std::pow(0.25, 0.25), 1e-15);
  EXPECT_DOUBLE_EQ(xn.p11, -1.0);
  EXPECT_EQ(xn.jacobi, JacobiClass::JacobiStable);
  EXPECT_NEAR(pipeline_p11(m, xn.location), -1.0, 1e-12);
  EXPECT_NEAR(pipeline_p11(m, m.refs.at("X0").location), 0.25, 1e-15);
}

TEST(LaneEmden, ProfileIndexFive) {
  // The analytic solution satisfies the equation: residual of (1+x^2/3)^(-1/2) by hand differentiation.
  auto theta = [](double x) { return 1.0 / std::sqrt(1.0 + x * x / 3.0); };
  for (double x : {0.5, 1.0, 2.0, 3.0}) {
    const double s = 1.0 + x * x / 3.0;
    const double d1 = -x / 3.0 * std::pow(s, -1.5);
    const double d2 = -std::pow(s, -1.5) / 3.0 + x * x / 3.0 * std::pow(s, -2.5);
    EXPECT_LE(std::abs(d2 + 2.0 * d1 / x + std::pow(theta(x), 5)), 1e-12);
  }
  const LaneEmdenProfile prof = lane_emden_profile(5.0, 3.0);
  EXPECT_FALSE(prof.surface_reached);
  EXPECT_DOUBLE_EQ(prof.samples.back().xi, 3.0);
  for (const auto& s : prof.samples) EXPECT_NEAR(s.theta, theta(s.xi), 1e-8);
}

TEST(LaneEmden, ProfileIdentityAndSurface) {
  const LaneEmdenProfile prof = lane_emden_profile(3.0, 10.0);
  EXPECT_EQ(prof.samples.front().p11, 0.25);
  for (const auto& s : prof.samples) EXPECT_LE(std::abs(s.p11 - (0.25 - 3.0 * s.milne_u * s.milne_v)), 1e-9);
  // First zero of the n = 3 polytrope.
  ASSERT_TRUE(prof.surface_reached);
  EXPECT_NEAR(prof.surface_xi, 6.89684862, 1e-6);
  EXPECT_THROW(lane_emden_profile(1.0, 1.0), InvalidParameter);
}

TEST(LaneEmden, InnerPointBoundary) {
  const double nb = (26.0 + std::sqrt(640.0)) / 18.0;
  EXPECT_LT(make_lane_emden({{"n", nb - 1e-3}}).refs.at("X_in").p11, 0.0);
  EXPECT_GT(make_lane_emden({{"n", nb + 1e-3}}).refs.at("X_in").p11, 0.0);
  EXPECT_FALSE(make_lane_emden({{"n", 4.0}}).refs.at("X_in").exists);
}

TEST(Polytrope, JacobiCondition) {
  EXPECT_TRUE(polytrope_jacobi_condition(1.0, 1.0, 1.0));
  EXPECT_FALSE(polytrope_jacobi_condition(1.0, 0.1, 1.0));
  EXPECT_THROW(polytrope_jacobi_condition(1.0, 0.0, 1.0), InvalidParameter);
  std::mt19937_64 rng(43);
  for (int i = 0; i < 200; ++i) {
    const double n = uniform(rng, 1.1, 5), r = uniform(rng, 0.01, 2), e = uniform(rng, 0.01, 2);
    EXPECT_EQ(polytrope_jacobi_condition(n, r, e), polytrope_p11(n, r, e) < 0.0);
  }
}

TEST(Sphere, MassRadiusBound) {
  EXPECT_NEAR(sphere_mass_radius_bound(2.0), 0.5625, 1e-15);
  // 2(0.5)(7.5)/4.5^2 + (0.5/4.5) sqrt(4 * 7.5^2 / 4.5^2 - 9), with the radicand equal to 19/9.
  EXPECT_NEAR(sphere_mass_radius_bound(1.5), 7.5 / 20.25 + std::sqrt(19.0 / 9.0) / 9.0, 1e-15);
  EXPECT_LT(sphere_mass_radius_bound(1.0 + 1e-9), 1e-8);
  EXPECT_THROW(sphere_mass_radius_bound(0.9), InvalidParameter);
}

TEST(Sphere, JacobiCondition) {
  EXPECT_TRUE(sphere_jacobi_condition(0.5, 0.0, 2.0));
  EXPECT_THROW(sphere_jacobi_condition(0.6, 0.0, 2.0), InvalidParameter);
  EXPECT_TRUE(sphere_jacobi_condition(0.3, 0.01, 1.5));
}

TEST(Sphere, DiscriminantNegativeOnRange) {
  for (int i = 1; i <= 40; ++i) {
    const double g = 1.0 + i / 40.0;
    const Model m = make_sphere({{"gamma", g}});
    const ReferencePoint& s = m.refs.at("S1");
    EXPECT_LT(s.discriminant, 0.0) << g;
    EXPECT_LT(pipeline_p11(m, s.location), 0.0) << g;
  }
}

TEST(Brane, References) {
  const BraneReferences z = brane_references(0.0);
  EXPECT_NEAR(z.x_gamma[0], 3.0 / 7.0, 1e-15);
  EXPECT_NEAR(z.r[0].real(), -0.75, 1e-15);
  EXPECT_NEAR(std::abs(z.r[0].imag()), std::sqrt(47.0) / 4.0, 1e-15);
  EXPECT_DOUBLE_EQ(z.p11, -47.0 / 16.0);
  EXPECT_EQ(z.table2, (std::pair{LinearClass::StableFocus, JacobiClass::JacobiStable}));

  const BraneReferences e = brane_references(0.8);
  EXPECT_NEAR(e.radicand, 25.7296, 1e-12);
  EXPECT_LT(e.r[0].real(), 0.0);
  EXPECT_LT(e.r[1].real(), 0.0);
  EXPECT_NEAR(e.p11, 9.896 / 81.536, 1e-15);
  EXPECT_EQ(e.table2, (std::pair{LinearClass::StableNode, JacobiClass::JacobiUnstable}));

  const BraneReferences t = brane_references(2.0);
  EXPECT_DOUBLE_EQ(t.p11, 149.0 / 320.0);
  EXPECT_EQ(t.table2, (std::pair{LinearClass::Saddle, JacobiClass::JacobiUnstable}));
  EXPECT_THROW(brane_references(-0.5), InvalidParameter);
  EXPECT_THROW(brane_references(-2.0), InvalidParameter);
}

TEST(Brane, Table2AgainstPipeline) {
  for (double g : {-1.0, 0.0, 0.8, 2.0}) {
    const Model m = make_brane({{"gamma", g}});
    const Vec2 x = m.refs.at("X_gamma").location;
    const auto row = *brane_table2(g);
    EXPECT_EQ(linearize(m.field, x).cls, row.first) << g;
    EXPECT_EQ(classify_jacobi(pipeline_p11(m, x)).cls, row.second) << g;
  }
}

TEST(Brane, BoundaryRoot) {
  const double r = brane_table2_boundary();
  EXPECT_NEAR(r, 0.674865, 1e-6);
  EXPECT_LT(brane_references(r - 1e-3).p11, 0.0);
  EXPECT_GT(brane_references(r + 1e-3).p11, 0.0);
}

TEST(Brane, SpecialSolutions) {
  const BraneExactSolution s = brane_special_solution(BraneSpecialCase::GammaMinus2, 1.0, 1.0);
  const Vec2 at2 = s.at_radius(2.0);
  EXPECT_DOUBLE_EQ(at2[1], 0.25);
  EXPECT_DOUBLE_EQ(at2[0], 0.75);
  const BraneExactSolution c = brane_special_solution(BraneSpecialCase::UPlusTwoP);
  EXPECT_EQ(c(3.0)[0], 2.0 / 3.0);
  const BraneExactSolution q = brane_special_solution(BraneSpecialCase::TwoUPlusP, 0.3, 0.0);
  EXPECT_NEAR(q(1.5)[1] / q(0.5)[1], std::exp(-2.0), 1e-15);
}

TEST(DarkEnergy, LambdaTwo) {
  const Model m = make_dark_energy({{"lambda", 2.0}});
  const ReferencePoint& c = m.refs.at("C");
  EXPECT_NEAR(c.location[0], std::sqrt(1.5) / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.p11, -9.0 / 16.0);
  EXPECT_EQ(c.linear, LinearClass::StableFocus);
  EXPECT_EQ(c.jacobi, JacobiClass::JacobiStable);
  EXPECT_NEAR((*c.lyapunov_mu)[0], -5.25 + 0.75 * std::sqrt(34.0), 1e-14);
  EXPECT_NEAR((*c.lyapunov_mu)[1], -5.25 - 0.75 * std::sqrt(34.0), 1e-14);
  EXPECT_LT((*c.lyapunov_mu)[0], 0.0);
  EXPECT_DOUBLE_EQ(m.refs.at("A").p11, 81.0 / 16.0);
  EXPECT_NEAR(make_dark_energy({{"lambda", std::sqrt(6.0)}}).refs.at("B+").p11, 2.25, 1e-14);
  EXPECT_FALSE(make_dark_energy({{"lambda", 1.0}}).refs.at("C").exists);
  EXPECT_FALSE(make_dark_energy({{"lambda", 3.0}}).refs.at("D").exists);
}

TEST(DarkEnergy, LyapunovEigenvaluesMatchPipeline) {
  for (double l : {1.0, 1.5, 2.0, 2.3}) {
    const Model m = make_dark_energy({{"lambda", l}});
    for (const char* label : {"C", "D"}) {
      const ReferencePoint& r = m.refs.at(label);
      if (!r.exists) continue;
      const auto mu = lyapunov_hessian_eigenvalues(m.field, r.location, m.lyapunov_weights);
      EXPECT_NEAR(mu[0], (*r.lyapunov_mu)[0], 1e-8) << label << " " << l;
      EXPECT_NEAR(mu[1], (*r.lyapunov_mu)[1], 1e-8) << label << " " << l;
    }
  }
}

TEST(DarkEnergy, UnitDiskInvariance) {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 10; ++i) {
    const Model m = make_dark_energy({{"lambda", uniform(rng, 0.5, 3.0)}});
    const double r = std::sqrt(uniform01(rng)) * 0.99, th = uniform(rng, 0.0, std::numbers::pi);
    const Trajectory tr = integrate(m.field, {r * std::cos(th), r * std::sin(th)}, 0.0, 30.0);
    for (const auto& s : tr.states) EXPECT_LE(std::hypot(s[0], s[1]), 1.0 + 1e-6);
  }
}

class PipelineProperty : public ::testing::TestWithParam<ModelName> {};

TEST_P(PipelineProperty, ClosedFormsMatchPipeline) {
  std::mt19937_64 rng(53 + static_cast<int>(GetParam()));
  int matched = 0;
  for (int draw = 0; draw < 20; ++draw) {
    Params p;
    switch (GetParam()) {
      case ModelName::Brusselator: p = {{"a", uniform(rng, 0.5, 4)}, {"b", uniform(rng, 0.3, 6)}}; break;
      case ModelName::LaneEmden: p = {{"n", uniform(rng, 3.2, 6)}, {"B", uniform(rng, 0.5, 2)}}; break;
      case ModelName::RelativisticSphere: p = {{"gamma", uniform(rng, 1.05, 2)}}; break;
      case ModelName::BraneVacuum: {
        double g;
        do g = uniform(rng, -1.8, 1.8);
        while (std::abs(g + 0.5) < 0.1 || std::abs(g - 1.0) < 0.1);
        p = {{"gamma", g}};
        break;
      }
      case ModelName::DarkEnergy: p = {{"lambda", uniform(rng, 0.5, 3)}}; break;
    }
    const Model m = make_model(GetParam(), p);
    const FixedPointSet fps = find_fixed_points(m.field, m.box, 21);
    for (const ReferencePoint& r : m.refs.points) {
      if (!r.exists || !r.fixed_point || !m.box.contains(r.location) || std::isnan(r.p11)) continue;
      const double scale = 1.0 + std::hypot(r.location[0], r.location[1]);
      bool found = false;
      for (const auto& fp : fps.points)
        found = found || std::hypot(fp.x[0] - r.location[0], fp.x[1] - r.location[1]) <= 1e-8 * scale;
      EXPECT_TRUE(found) << to_string(GetParam()) << " " << r.label;
      EXPECT_NEAR(pipeline_p11(m, r.location), r.p11, 1e-8 * (1.0 + std::abs(r.p11))) << r.label;
      ++matched;
    }
  }
  EXPECT_GE(matched, 20);
}

INSTANTIATE_TEST_SUITE_P(Models, PipelineProperty, ::testing::ValuesIn(kAllModels),
                         [](const auto& info) {
                           std::string s(to_string(info.param));
                           std::erase(s, '-');
                           return s;
                         });
