#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kccstab/sweep.hpp"

using namespace kccstab;

namespace {

std::vector<double> transitions(const std::vector<RegionRow>& rows) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.eval.has("transition")) out.push_back(r.params[0]);
  return out;
}

std::string csv(const SweepSpec& spec, const std::vector<RegionRow>& rows) {
  std::ostringstream os;
  write_sweep_csv(os, spec, rows);
  return os.str();
}

}  // namespace

TEST(Sweep, BraneBoundaries) {
  SweepSpec spec;
  spec.model = ModelName::BraneVacuum;
  spec.axes = {{"gamma", -3.0, 3.0, 0.01}};
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 601u);
  // The poles are flagged rows, not errors.
  for (const auto& r : rows) {
    if (std::abs(r.params[0] + 0.5) < 1e-9 || std::abs(r.params[0] + 2.0) < 1e-9) {
      EXPECT_TRUE(r.eval.has("singular"));
    }
  }
  // Class changes next to -0.5, the Table 2 root and 1.
  for (double b : {-0.5, 0.674865, 1.0}) {
    bool seen = false;
    for (double t : transitions(rows)) seen = seen || std::abs(t - b) <= 0.01 + 1e-9;
    EXPECT_TRUE(seen) << b;
  }
}

TEST(Sweep, DarkEnergySpiralTransition) {
  SweepSpec spec;
  spec.model = ModelName::DarkEnergy;
  spec.axes = {{"lambda2", 3.0, 3.6, 0.01}};
  spec.point = "C";
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 61u);
  const double b = 24.0 / 7.0;
  for (const auto& r : rows) {
    if (!r.eval.usable() || std::abs(r.params[0] - b) < 1e-3) continue;
    const bool spiral = r.params[0] > b;
    EXPECT_EQ(r.eval.linear, spiral ? LinearClass::StableFocus : LinearClass::StableNode) << r.params[0];
    EXPECT_EQ(r.eval.jacobi, spiral ? JacobiClass::JacobiStable : JacobiClass::JacobiUnstable) << r.params[0];
  }
  const auto t = transitions(rows);
  ASSERT_FALSE(t.empty());
  EXPECT_NEAR(t.front(), b, 0.01);
}

TEST(Sweep, BrusselatorRaster) {
  SweepSpec spec;
  spec.model = ModelName::Brusselator;
  spec.axes = {{"a", 0.1, 5.0, 0.1}, {"b", 0.1, 5.0, 0.1}};
  const auto rows = run_sweep(spec);
  ASSERT_EQ(rows.size(), 50u * 50u);
  int regions[4] = {0, 0, 0, 0};
  for (const auto& r : rows) {
    const double a = r.params[0], b = r.params[1];
    const auto reg = brusselator_regions(a, b);
    if (reg.on_boundary || r.eval.has("near_boundary")) continue;
    ++regions[static_cast<int>(reg.region)];
    const bool complex = reg.discriminant < 0.0;
    EXPECT_EQ(r.eval.jacobi, complex ? JacobiClass::JacobiStable : JacobiClass::JacobiUnstable) << a << "," << b;
    // Boundaries b = (sqrt(a) -+ 1)^2 separate the Jacobi classes.
    const double lo = std::pow(std::sqrt(a) - 1.0, 2), hi = std::pow(std::sqrt(a) + 1.0, 2);
    EXPECT_EQ(complex, b > lo && b < hi);
  }
  for (int n : regions) EXPECT_GT(n, 50);
}

TEST(SweepProperty, ThreadCountDoesNotChangeOutput) {
  SweepSpec spec;
  spec.model = ModelName::BraneVacuum;
  spec.axes = {{"gamma", -1.0, 2.0, 0.05}};
  spec.threads = 1;
  const std::string one = csv(spec, run_sweep(spec));
  spec.threads = 4;
  EXPECT_EQ(one, csv(spec, run_sweep(spec)));
}

TEST(SweepProperty, RowsFollowRegionCorrespondence) {
  SweepSpec spec;
  spec.model = ModelName::Brusselator;
  spec.axes = {{"a", 0.2, 4.0, 0.2}, {"b", 0.2, 6.0, 0.2}};
  for (const auto& r : run_sweep(spec)) {
    const auto& e = r.eval;
    if (!e.usable() || e.has("near_boundary") || !e.linear || !e.jacobi) continue;
    if (e.det < 0.0) {
      EXPECT_EQ(*e.linear, LinearClass::Saddle);
      EXPECT_EQ(*e.jacobi, JacobiClass::JacobiUnstable);
    } else if (e.discriminant < 0.0) {
      EXPECT_EQ(*e.jacobi, JacobiClass::JacobiStable);
      EXPECT_TRUE(*e.linear == LinearClass::StableFocus || *e.linear == LinearClass::UnstableFocus ||
                  *e.linear == LinearClass::Center);
    } else {
      EXPECT_EQ(*e.jacobi, JacobiClass::JacobiUnstable);
    }
  }
}

TEST(Sweep, CsvFormat) {
  SweepSpec spec;
  spec.model = ModelName::Brusselator;
  spec.axes = {{"b", 0.5, 0.6, 0.1}};
  spec.fixed = {{"a", 4.0}};
  const std::string out = csv(spec, run_sweep(spec));
  std::istringstream is(out);
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header, "b,fp_u,fp_v,trace,det,discriminant,P11,linear_class,jacobi_class,flags");
  EXPECT_EQ(first.substr(0, first.find(',')), "0.5");
  EXPECT_NE(first.find("StableNode,JacobiUnstable"), std::string::npos);
}

TEST(Sweep, InvalidSpecs) {
  SweepSpec spec;
  spec.model = ModelName::Brusselator;
  spec.axes = {{"a", 1.0, 0.0, 0.1}};
  spec.fixed = {{"b", 1.0}};
  EXPECT_THROW(run_sweep(spec), InvalidParameter);
  spec.axes = {{"a", 0.0, 1.0, 0.0}};
  EXPECT_THROW(run_sweep(spec), InvalidParameter);
  spec.axes = {{"c", 0.0, 1.0, 0.1}};
  EXPECT_THROW(run_sweep(spec), InvalidParameter);
  spec.axes = {{"a", 0.5, 1.0, 0.1}};
  spec.point = "Q";
  EXPECT_THROW(run_sweep(spec), InvalidParameter);
}

TEST(Threshold, Examples) {
  ThresholdSpec br;
  br.model = ModelName::BraneVacuum;
  br.parameter = "gamma";
  br.lo = 0.5;
  br.hi = 0.8;
  EXPECT_NEAR(find_threshold(br).root, 0.674865, 1e-6);

  ThresholdSpec le;
  le.model = ModelName::LaneEmden;
  le.parameter = "n";
  le.point = "X_in";
  le.lo = 2.0;
  le.hi = 2.99;
  EXPECT_NEAR(find_threshold(le).root, (26.0 + std::sqrt(640.0)) / 18.0, 1e-8);

  ThresholdSpec sp;
  sp.model = ModelName::RelativisticSphere;
  sp.parameter = "gamma";
  sp.quantity = ThresholdQuantity::Discriminant;
  sp.lo = 1.0001;
  sp.hi = 2.0;
  EXPECT_THROW(find_threshold(sp), NoSignChange);
}

TEST(Threshold, DarkEnergyConstants) {
  const std::pair<const char*, double> cases[] = {{"D", 3.0}, {"C", 27.0 / 8.0}, {"C", 24.0 / 7.0},
                                                  {"D", 48.0 / 17.0}, {"B+", 6.0}};
  const Model m = make_dark_energy({{"lambda", 2.0}});
  for (const auto& [point, v] : cases) {
    const Threshold* th = nullptr;
    for (const auto& t : m.refs.thresholds)
      if (t.point == point && std::abs(t.value - v) < 1e-12) th = &t;
    ASSERT_NE(th, nullptr) << point << " " << v;
    ThresholdSpec s;
    s.model = ModelName::DarkEnergy;
    s.parameter = "lambda2";
    s.point = point;
    s.quantity = th->quantity;
    s.lo = v - 0.05;
    s.hi = v + 0.07;
    EXPECT_NEAR(find_threshold(s).root, v, 1e-8) << th->name;
  }
}
