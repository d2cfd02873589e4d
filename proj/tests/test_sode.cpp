#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kccstab/flow.hpp"
#include "kccstab/models.hpp"
#include "kccstab/random_systems.hpp"
#include "kccstab/sode.hpp"

using namespace kccstab;

namespace {

Semispray semispray1(const std::string& g, const Params& p = {}) {
  const std::array<ExprAst, 1> e{parse(g)};
  return semispray_from_expr(e, p);
}

}  // namespace

TEST(SemisprayFromExpr, LaneEmdenOrigin) {
  const Semispray s = semispray1("(1/2)*((5-n)/(n-1)*y1 + 2*(3-n)/(n-1)^2*x1 + B^(n-1)*x1^n)", {{"n", 5.0}, {"B", 1.0}});
  EXPECT_EQ(s.dim(), 1u);
  EXPECT_EQ(semispray_value(s, 0.0, 0.0).G(0), 0.0);
  // Agrees with the model's closed form away from the origin.
  const Model m = make_lane_emden({{"n", 5.0}, {"B", 1.0}});
  for (auto [x, y] : {std::pair{0.3, 0.1}, {0.7, -0.4}, {1.2, 0.5}}) {
    const SemisprayValue a = semispray_value(s, x, y);
    const SemisprayValue b = semispray_value(m.semispray, x, y);
    EXPECT_NEAR(a.G(0), b.G(0), 1e-14);
    EXPECT_NEAR(a.dGdx(0, 0), b.dGdx(0, 0), 1e-13);
    EXPECT_NEAR(a.dGdy(0, 0), b.dGdy(0, 0), 1e-13);
  }
}

TEST(SemisprayFromExpr, Simple) {
  EXPECT_EQ(semispray_value(semispray1("0"), 0.3, 0.4).G(0), 0.0);
  const SemisprayValue v = semispray_value(semispray1("x1"), 1.0, 0.0);
  EXPECT_EQ(v.G(0), 1.0);
  EXPECT_EQ(v.dGdx(0, 0), 1.0);
  EXPECT_EQ(v.dGdy(0, 0), 0.0);
}

TEST(SemisprayFromExpr, TwoDimensional) {
  const std::array<ExprAst, 2> e{parse("x1*y2"), parse("y1^2 - x2")};
  const Semispray s = semispray_from_expr(e, {});
  const double x[2] = {2.0, 3.0}, y[2] = {5.0, 7.0};
  const SemisprayValue v = s.evaluate(x, y);
  EXPECT_EQ(v.G(0), 14.0);
  EXPECT_EQ(v.G(1), 22.0);
  EXPECT_EQ(v.dGdx(0, 0), 7.0);
  EXPECT_EQ(v.dGdy(0, 1), 2.0);
  EXPECT_EQ(v.dGdy(1, 0), 10.0);
  EXPECT_EQ(v.dGdx(1, 1), -1.0);
  EXPECT_EQ(v.d2G(1, 2, 2), 2.0);
}

TEST(SemisprayFromExpr, Errors) {
  EXPECT_THROW(semispray1("z"), UnboundIdentifier);
  const std::array<ExprAst, 3> three{parse("0"), parse("0"), parse("0")};
  EXPECT_THROW(semispray_from_expr(three, {}), InputError);
}

TEST(Reduction, LinearSystemEliminatingU) {
  const VectorField2 vf = VectorField2::from_expressions(parse("v-u"), parse("-u"), {});
  const EliminationReduction red(vf, Eliminate::U);
  // x = v, y = dv/dt = -u, so u = -y and x'' = -(v - u) = -(x + y): G = (x + y)/2.
  for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 2.0}, {-0.5, 0.25}}) {
    EXPECT_NEAR(red.solve(x, y), -y, 1e-14);
    const Jet g = red.G(x, y);
    EXPECT_NEAR(g.value(), 0.5 * (x + y), 1e-14);
    EXPECT_NEAR(g.grad(0), 0.5, 1e-14);
    EXPECT_NEAR(g.grad(1), 0.5, 1e-14);
    EXPECT_NEAR(g.hess(0, 1), 0.0, 1e-14);
  }
  const Vec2 img = red.image(0.3, 0.7);
  EXPECT_DOUBLE_EQ(img[0], 0.7);
  EXPECT_DOUBLE_EQ(img[1], -0.3);
  const Vec2 pre = red.preimage(img[0], img[1]);
  EXPECT_NEAR(pre[0], 0.3, 1e-14);
  EXPECT_NEAR(pre[1], 0.7, 1e-14);
}

TEST(Reduction, SingularWhenRetainedRateIgnoresEliminated) {
  const VectorField2 vf = VectorField2::from_expressions(parse("u*v"), parse("v^2 - 1"), {});
  const EliminationReduction red(vf, Eliminate::U);
  EXPECT_THROW(red.G(0.5, 0.1), SingularElimination);
}

namespace {

/// Random states inside the model box at which the closed form and the field are defined.
std::vector<Vec2> sample_states(const Model& m, std::mt19937_64& rng, int count) {
  std::vector<Vec2> out;
  while (static_cast<int>(out.size()) < count) {
    const Vec2 p{uniform(rng, m.box.u_lo, m.box.u_hi), uniform(rng, m.box.v_lo, m.box.v_hi)};
    if (!m.field.in_domain(p[0], p[1])) continue;
    try {
      const Vec2 ph = m.phase_point(p);
      const double x[1] = {ph[0]}, y[1] = {ph[1]};
      if (!m.semispray.in_domain(x, y)) continue;
      const EliminationReduction red = m.reduction(p);
      // Keep points where the elimination is well conditioned.
      const Mat2 J = m.kcc_field.jacobian(m.kcc_state(p)[0], m.kcc_state(p)[1]);
      const double de = m.elimination == Eliminate::U ? J[1][0] : J[0][1];
      if (std::abs(de) < 0.05) continue;
      // A closed form covers one branch of the elimination; keep states on it, where G
      // equals -x''/2 computed directly from the field.
      const Jet g = red.G(ph[0], ph[1]);
      const double cf = semispray_value(m.semispray, ph[0], ph[1]).G(0);
      if (std::abs(g.value() - cf) > 1e-8 * (1.0 + std::abs(cf))) continue;
    } catch (const Error&) {
      continue;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

class ReductionProperty : public ::testing::TestWithParam<std::pair<ModelName, Params>> {};

TEST_P(ReductionProperty, MatchesClosedFormSemispray) {
  const Model m = make_model(GetParam().first, GetParam().second);
  std::mt19937_64 rng(3);
  for (const Vec2& p : sample_states(m, rng, 50)) {
    const Vec2 ph = m.phase_point(p);
    const EliminationReduction red = m.reduction(p);
    const SemisprayValue num = semispray_value(red.semispray(), ph[0], ph[1]);
    const SemisprayValue cf = semispray_value(m.semispray, ph[0], ph[1]);
    auto rel = [](double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); };
    EXPECT_LE(rel(num.G(0), cf.G(0)), 1e-6) << "G at " << p[0] << "," << p[1];
    EXPECT_LE(rel(num.dGdx(0, 0), cf.dGdx(0, 0)), 1e-6);
    EXPECT_LE(rel(num.dGdy(0, 0), cf.dGdy(0, 0)), 1e-6);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = a; b < 2; ++b) EXPECT_LE(rel(num.d2G(0, a, b), cf.d2G(0, a, b)), 1e-6);
  }
}

TEST_P(ReductionProperty, SemisprayTrajectoriesSolveTheFirstOrderSystem) {
  const Model m = make_model(GetParam().first, GetParam().second);
  std::mt19937_64 rng(5);
  OdeOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  int checked = 0;
  for (const Vec2& p : sample_states(m, rng, 10)) {
    const double T = 0.2;
    const Trajectory base = integrate(m.field, p, 0.0, T, opt);
    const Vec2 ph = m.phase_point(p);
    const double x[1] = {ph[0]}, y[1] = {ph[1]};
    const Trajectory red = integrate(m.semispray, x, y, 0.0, T, opt);
    if (base.truncated || red.truncated) continue;
    const Vec2 end = m.phase_point({base.back()[0], base.back()[1]});
    EXPECT_NEAR(red.back()[0], end[0], 1e-6 * (1.0 + std::abs(end[0])));
    EXPECT_NEAR(red.back()[1], end[1], 1e-6 * (1.0 + std::abs(end[1])));
    // Map back through the eliminated coordinate.
    const Vec2 q = m.reduction(Vec2{base.back()[0], base.back()[1]}).preimage(red.back()[0], red.back()[1]);
    const Vec2 want = m.kcc_state({base.back()[0], base.back()[1]});
    EXPECT_NEAR(q[0], want[0], 1e-6 * (1.0 + std::abs(want[0])));
    EXPECT_NEAR(q[1], want[1], 1e-6 * (1.0 + std::abs(want[1])));
    ++checked;
  }
  EXPECT_GE(checked, 5);
}

INSTANTIATE_TEST_SUITE_P(Models, ReductionProperty,
                         ::testing::Values(std::pair{ModelName::Brusselator, Params{{"a", 1.0}, {"b", 2.5}}},
                                           std::pair{ModelName::LaneEmden, Params{{"n", 3.0}, {"B", 1.0}}},
                                           std::pair{ModelName::RelativisticSphere, Params{{"gamma", 1.5}}},
                                           std::pair{ModelName::BraneVacuum, Params{{"gamma", 0.0}}},
                                           std::pair{ModelName::BraneVacuum, Params{{"gamma", 2.0}}},
                                           std::pair{ModelName::DarkEnergy, Params{{"lambda", 2.0}}}));
