#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "kccstab/flow.hpp"
#include "kccstab/format.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/models.hpp"
#include "kccstab/random_systems.hpp"
#include "kccstab/report.hpp"
#include "kccstab/sweep.hpp"

namespace kccstab {

inline constexpr const char* kVerifySchema = "kccstab.verify.v1";

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double max_error = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240229;
  int samples = 100;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace detail {

inline double rel_error(double got, double want) { return std::abs(got - want) / (1.0 + std::abs(want)); }

/// Tracks the worst relative error and the first offending case.
struct ErrorTally {
  explicit ErrorTally(double tol) : tolerance(tol) {}

  double tolerance;
  double worst = 0.0;
  std::string first_failure;
  int cases = 0;

  void add(double got, double want, const std::string& what) {
    ++cases;
    const double e = std::isnan(want) ? 0.0 : (std::isfinite(got) ? rel_error(got, want) : INFINITY);
    if (e > worst) worst = e;
    if (e > tolerance && first_failure.empty())
      first_failure = what + ": got " + format_number(got) + ", expected " + format_number(want);
  }
  void fail(const std::string& what) {
    ++cases;
    if (first_failure.empty()) first_failure = what;
    worst = INFINITY;
  }
  CheckResult result(std::string name) const {
    CheckResult r{std::move(name), first_failure.empty(), {}, worst};
    r.detail = first_failure.empty() ? std::to_string(cases) + " comparisons" : first_failure;
    return r;
  }
};

/// Parameter sets at which each model's references are compared with the pipeline.
inline std::vector<std::pair<ModelName, Params>> verification_cases() {
  std::vector<std::pair<ModelName, Params>> out;
  for (auto [a, b] : {std::pair{1.0, 5.0}, {1.0, 2.5}, {4.0, 4.0}, {4.0, 0.5}, {2.0, 1.0}})
    out.push_back({ModelName::Brusselator, {{"a", a}, {"b", b}}});
  for (double n : {2.0, 2.5, 3.5, 4.0, 5.0}) out.push_back({ModelName::LaneEmden, {{"n", n}, {"B", 1.0}}});
  for (double g : {1.1, 1.5, 4.0 / 3.0, 2.0}) out.push_back({ModelName::RelativisticSphere, {{"gamma", g}}});
  for (double g : {-3.0, -1.0, -0.25, 0.0, 0.5, 0.8, 1.5, 2.0}) out.push_back({ModelName::BraneVacuum, {{"gamma", g}}});
  for (double l : {1.0, 1.8, 2.0, 2.3}) out.push_back({ModelName::DarkEnergy, {{"lambda", l}}});
  return out;
}

inline std::string case_name(const Model& m) {
  std::string s(to_string(m.name));
  for (const auto& [k, v] : m.params) s += " " + k + "=" + format_number(v);
  return s;
}

}  // namespace detail

/// 4·P¹₁ = Δ and the Jacobi/complex-eigenvalue equivalence on seeded random polynomial systems.
inline std::vector<CheckResult> verify_theorem_suite(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  int mismatches = 0;
  std::string first;
  for (int i = 0; i < opt.samples; ++i) {
    const PolynomialSystem sys = random_polynomial_system(rng);
    const VectorField2 vf = sys.field();
    const TheoremCheck t = theorem_check(vf, {0.0, 0.0}, Eliminate::U);
    const double e = t.residual / (1.0 + std::abs(t.rhs));
    if (e > worst) worst = e;
    if (!(e <= 1e-6) && first.empty()) first = "sample " + std::to_string(i) + ": " + vf.description();
    const LinearReport lr = linearize(vf, {0.0, 0.0});
    const bool complex_pair = lr.eigenvalues[0].imag() != 0.0;
    const bool jacobi_stable = classify_jacobi(t.p11).cls == JacobiClass::JacobiStable;
    if (complex_pair != jacobi_stable) ++mismatches;
  }
  std::vector<CheckResult> out;
  out.push_back({"theorem: 4*P11 = tr^2 - 4 det on " + std::to_string(opt.samples) + " random systems",
                 first.empty(), first.empty() ? "max relative residual " + format_number(worst) : first, worst});
  out.push_back({"corollary: Jacobi stable iff complex eigenvalues", mismatches == 0,
                 std::to_string(mismatches) + " mismatches", static_cast<double>(mismatches)});
  return out;
}

/// Every reference point of every model against the generic pipeline.
inline std::vector<CheckResult> verify_reference_values() {
  std::vector<CheckResult> out;
  for (ModelName name : kAllModels) {
    detail::ErrorTally values{1e-8};
    detail::ErrorTally classes{0.0};
    for (const auto& [mn, params] : detail::verification_cases()) {
      if (mn != name) continue;
      const Model m = make_model(mn, params);
      const std::string cn = detail::case_name(m);
      for (const ReferencePoint& r : m.refs.points) {
        const PointEvaluation e = evaluate_point(m, r.label);
        const std::string where = cn + " " + r.label;
        if (!r.exists) {
          if (e.usable()) classes.fail(where + ": expected no point");
          continue;
        }
        if (!e.usable() || e.has("not_fixed_point")) {
          values.fail(where + ": pipeline flags " + (e.flags.empty() ? std::string("none") : e.flags.front()));
          continue;
        }
        values.add(e.trace, r.trace, where + " trace");
        values.add(e.det, r.det, where + " det");
        values.add(e.discriminant, r.discriminant, where + " discriminant");
        values.add(e.p11, r.p11, where + " P11");
        if (r.lyapunov_mu && e.lyapunov_mu) {
          values.add((*e.lyapunov_mu)[0], (*r.lyapunov_mu)[0], where + " mu+");
          values.add((*e.lyapunov_mu)[1], (*r.lyapunov_mu)[1], where + " mu-");
        }
        if (r.linear && e.linear && *r.linear != *e.linear)
          classes.fail(where + ": linear class " + std::string(to_string(*e.linear)) + ", expected " +
                       std::string(to_string(*r.linear)));
        if (r.jacobi && e.jacobi && *r.jacobi != *e.jacobi)
          classes.fail(where + ": Jacobi class " + std::string(to_string(*e.jacobi)) + ", expected " +
                       std::string(to_string(*r.jacobi)));
        if (r.linear || r.jacobi) ++classes.cases;
      }
    }
    const std::string mn(to_string(name));
    out.push_back(values.result(mn + ": closed-form values"));
    out.push_back(classes.result(mn + ": classifications"));
  }
  return out;
}

/// Closed-form parameter thresholds located by bisection on the pipeline.
inline std::vector<CheckResult> verify_thresholds() {
  std::vector<CheckResult> out;
  const std::vector<std::pair<ModelName, Params>> bases = {
      {ModelName::Brusselator, {{"a", 4.0}, {"b", 1.0}}},
      {ModelName::LaneEmden, {{"n", 3.0}, {"B", 1.0}}},
      {ModelName::BraneVacuum, {{"gamma", 0.0}}},
      {ModelName::DarkEnergy, {{"lambda", 2.0}}},
  };
  for (const auto& [name, params] : bases) {
    detail::ErrorTally tally{1e-6};
    const Model m = make_model(name, params);
    for (const Threshold& th : m.refs.thresholds) {
      Params fixed = params;
      fixed.erase(th.parameter);
      if (th.parameter == "lambda2") fixed.erase("lambda");
      Params at = fixed;
      at[th.parameter] = th.value;
      bool pole = false;
      try {
        pole = !evaluate_point(make_model(name, at), th.point).usable();
      } catch (const InvalidParameter&) {
        pole = true;
      }
      if (pole) {
        // A pole rather than a zero: only the singular flag can be checked.
        const SweepSpec spec{name, {{th.parameter, th.value - 0.01, th.value + 0.01, 0.01}}, fixed, th.point, 1};
        const auto rows = run_sweep(spec);
        if (rows.size() != 3 || !rows[1].eval.has("singular")) {
          tally.fail(th.name + ": pole not flagged singular");
        } else {
          ++tally.cases;
        }
        continue;
      }
      const double d = 1e-2 * (1.0 + std::abs(th.value));
      ThresholdSpec spec{name, fixed, th.parameter, th.point, th.quantity, th.value - d, th.value + 1.37 * d, 1e-12};
      try {
        tally.add(find_threshold(spec).root, th.value, th.name);
      } catch (const Error& e) {
        tally.fail(th.name + ": " + e.what());
      }
    }
    out.push_back(tally.result(std::string(to_string(name)) + ": thresholds"));
  }
  return out;
}

/// Brusselator region table, limit cycle and the paired deviation behaviour in region D.
inline std::vector<CheckResult> verify_brusselator_dynamics() {
  std::vector<CheckResult> out;
  {
    const Model m = make_brusselator({{"a", 1.0}, {"b", 2.5}});
    CheckResult c{"brusselator: stable limit cycle at a=1, b=2.5", false, {}, 0.0};
    try {
      const LimitCycleReport r = find_limit_cycle(m.field, {1.5, 2.0});
      c.max_error = std::abs(r.multiplier - r.multiplier_secant);
      c.passed = r.cls == CycleClass::StableCycle && std::abs(r.multiplier) < 1.0 && c.max_error <= 1e-3;
      c.detail = "M = " + format_number(r.multiplier) + ", secant " + format_number(r.multiplier_secant) +
                 ", period " + format_number(r.period);
    } catch (const Error& e) {
      c.detail = e.what();
    }
    out.push_back(c);
  }
  {
    const Model m = make_brusselator({{"a", 4.0}, {"b", 0.5}});
    const Vec2 ph = m.phase_point(m.refs.at("S").location);
    const double x[1] = {ph[0]};
    const double y[1] = {ph[1]};
    const double w[1] = {1.0};
    CheckResult c{"brusselator: raw deviation decays, covariant grows at a=4, b=0.5", false, {}, 0.0};
    try {
      const DeviationTrack raw = integrate_deviation(m.semispray, x, y, w, 0.0, 5.0, DeviationMode::RawVariational);
      const DeviationTrack cov = integrate_deviation(m.semispray, x, y, w, 0.0, 5.0, DeviationMode::Covariant);
      double raw_peak = 0.0;
      for (const auto& v : raw.xi) raw_peak = std::max(raw_peak, std::abs(v[0]));
      const double raw_end = std::abs(raw.xi.back()[0]);
      bool cov_monotone = true;
      for (std::size_t i = 1; i < cov.xi.size(); ++i)
        if (std::abs(cov.xi[i][0]) < std::abs(cov.xi[i - 1][0])) cov_monotone = false;
      const double cov_end = std::abs(cov.xi.back()[0]);
      c.passed = raw_end < 0.5 * raw_peak && cov_monotone && cov_end > 5.0;
      c.detail = "|xi_raw(5)| = " + format_number(raw_end) + " (peak " + format_number(raw_peak) +
                 "), |xi_cov(5)| = " + format_number(cov_end);
    } catch (const Error& e) {
      c.detail = e.what();
    }
    out.push_back(c);
  }
  return out;
}

/// Lane-Emden profile against the n=5 closed form and the pointwise P¹₁ identity.
inline std::vector<CheckResult> verify_lane_emden_profile() {
  std::vector<CheckResult> out;
  const LaneEmdenProfile p5 = lane_emden_profile(5.0, 3.0);
  detail::ErrorTally exact{1e-8};
  for (const auto& s : p5.samples) exact.add(s.theta, 1.0 / std::sqrt(1.0 + s.xi * s.xi / 3.0), "theta(" + format_number(s.xi) + ")");
  out.push_back(exact.result("lane-emden: n=5 profile matches the closed form"));

  detail::ErrorTally identity{1e-9};
  for (double n : {1.5, 3.0, 4.5}) {
    const LaneEmdenProfile p = lane_emden_profile(n, 10.0);
    for (const auto& s : p.samples)
      if (s.xi > 0.0) identity.add(s.p11, 0.25 - n * s.milne_u * s.milne_v, "n=" + format_number(n) + " xi=" + format_number(s.xi));
  }
  out.push_back(identity.result("lane-emden: P11 = 1/4 - n*u*v along profiles"));
  return out;
}

inline VerifyReport run_verify(const VerifyOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport rep;
  rep.seed = opt.seed;
  auto append = [&rep](std::vector<CheckResult> v) {
    for (auto& c : v) rep.checks.push_back(std::move(c));
  };
  append(verify_theorem_suite(opt));
  append(verify_reference_values());
  append(verify_thresholds());
  append(verify_brusselator_dynamics());
  append(verify_lane_emden_profile());
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline Json verify_json(const VerifyReport& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks)
    checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"max_error", num(c.max_error)}});
  return Json{{"schema", kVerifySchema}, {"seed", rep.seed}, {"passed", rep.passed()}, {"checks", checks}};
}

inline void write_verify_text(std::ostream& os, const VerifyReport& rep) {
  std::size_t failed = 0;
  for (const auto& c : rep.checks) {
    os << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    if (!c.passed) ++failed;
  }
  os << rep.checks.size() - failed << "/" << rep.checks.size() << " checks passed\n";
}

}  // namespace kccstab
