#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kccstab/error.hpp"

namespace kccstab {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 0.0;  ///< 0 selects a step automatically
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 5'000'000;
  std::optional<double> fixed_step;  ///< disables error control
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  double max_error = 0.0;  ///< largest normalized error estimate among accepted steps
};

/// Accepted states with their time derivatives (kept for Hermite interpolation).
struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> derivatives;
  IntegratorStats stats;
  bool truncated = false;
  std::string truncation_reason;

  std::size_t size() const noexcept { return t.size(); }
  std::size_t dim() const noexcept { return states.empty() ? 0 : states.front().size(); }
  const std::vector<double>& back() const { return states.back(); }
};

/// One accepted step, passed to the observer.
struct StepView {
  double t0;
  double t1;
  std::span<const double> x0;
  std::span<const double> f0;
  std::span<const double> x1;
  std::span<const double> f1;
};

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;
using StateGuard = std::function<bool(std::span<const double> x)>;
/// Returns false to stop after the step.
using StepObserver = std::function<bool(const StepView&)>;

/// Cubic Hermite interpolant on one step, θ ∈ [0, 1].
inline double hermite(double theta, double h, double x0, double f0, double x1, double f1) {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  return (2 * t3 - 3 * t2 + 1) * x0 + (t3 - 2 * t2 + theta) * h * f0 + (-2 * t3 + 3 * t2) * x1 +
         (t3 - t2) * h * f1;
}

inline std::vector<double> hermite(double theta, const StepView& s) {
  std::vector<double> out(s.x0.size());
  const double h = s.t1 - s.t0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = hermite(theta, h, s.x0[i], s.f0[i], s.x1[i], s.f1[i]);
  return out;
}

namespace detail {

// Dormand–Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/**
 * @brief Adaptive Dormand–Prince 5(4) integration from t0 to t1 (either direction).
 *
 * A stage that leaves the guard, throws DomainError or produces non-finite values
 * rejects the step; if the step then shrinks below the round-off floor the
 * trajectory is truncated with a flag. Error-control underflow throws StepSizeUnderflow.
 */
inline Trajectory integrate_ode(const OdeRhs& rhs, std::span<const double> x0, double t0, double t1,
                                const OdeOptions& opt = {}, const StateGuard& guard = {},
                                const StepObserver& observer = {}) {
  using B = detail::Dopri5;
  const std::size_t d = x0.size();
  Trajectory traj;
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), xs(d), xn(d);

  auto ok_state = [&](std::span<const double> s) {
    for (double v : s)
      if (!std::isfinite(v)) return false;
    return !guard || guard(s);
  };
  auto eval = [&](double t, std::span<const double> s, std::span<double> out) {
    if (!ok_state(s)) return false;
    ++traj.stats.evaluations;
    try {
      rhs(t, s, out);
    } catch (const DomainError&) {
      return false;
    }
    for (double v : out)
      if (!std::isfinite(v)) return false;
    return true;
  };

  if (!eval(t0, x, k1)) throw DomainError("initial state outside the domain");
  traj.t.push_back(t0);
  traj.states.push_back(x);
  traj.derivatives.push_back(k1);
  if (t1 == t0) return traj;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  auto err_scale = [&](double a, double b) {
    return opt.atol + opt.rtol * std::max(std::abs(a), std::abs(b));
  };
  auto norm = [&](std::span<const double> v, std::span<const double> ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double q = v[i] / err_scale(ref[i], ref[i]);
      s += q * q;
    }
    return std::sqrt(s / static_cast<double>(std::max<std::size_t>(d, 1)));
  };

  double h;
  if (opt.fixed_step) {
    h = std::abs(*opt.fixed_step);
  } else if (opt.initial_step > 0.0) {
    h = opt.initial_step;
  } else {
    const double d0 = norm(x, x);
    const double d1 = norm(k1, x);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(t1 - t0));
    for (std::size_t i = 0; i < d; ++i) xs[i] = x[i] + dir * h0 * k1[i];
    double h1 = std::max(1e-6, h0 * 1e-3);
    if (eval(t0 + dir * h0, xs, k2)) {
      for (std::size_t i = 0; i < d; ++i) k3[i] = k2[i] - k1[i];
      const double d2 = norm(k3, x) / h0;
      const double dm = std::max(d1, d2);
      h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    }
    h = std::min(100.0 * h0, h1);
  }
  h = std::min(h, opt.max_step);

  double t = t0;
  bool last_rejected = false;
  bool last_domain = false;
  for (;;) {
    const double remaining = std::abs(t1 - t);
    if (remaining == 0.0) break;
    if (traj.stats.steps >= opt.max_steps) throw StepSizeUnderflow("integrator exceeded the maximum number of steps");
    bool final_step = false;
    if (h >= remaining * (1.0 - 1e-9) || (!opt.fixed_step && h > 0.99 * remaining)) {
      h = remaining;
      final_step = true;
    }
    const double hmin = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
    const double hs = dir * h;

    bool domain_ok = true;
    auto stage = [&](double c, auto&& combine, std::span<double> out) {
      if (!domain_ok) return;
      for (std::size_t i = 0; i < d; ++i) xs[i] = x[i] + hs * combine(i);
      domain_ok = eval(t + c * hs, xs, out);
    };
    stage(B::c2, [&](std::size_t i) { return B::a21 * k1[i]; }, k2);
    stage(B::c3, [&](std::size_t i) { return B::a31 * k1[i] + B::a32 * k2[i]; }, k3);
    stage(B::c4, [&](std::size_t i) { return B::a41 * k1[i] + B::a42 * k2[i] + B::a43 * k3[i]; }, k4);
    stage(B::c5, [&](std::size_t i) { return B::a51 * k1[i] + B::a52 * k2[i] + B::a53 * k3[i] + B::a54 * k4[i]; },
          k5);
    stage(1.0,
          [&](std::size_t i) {
            return B::a61 * k1[i] + B::a62 * k2[i] + B::a63 * k3[i] + B::a64 * k4[i] + B::a65 * k5[i];
          },
          k6);
    if (domain_ok) {
      for (std::size_t i = 0; i < d; ++i)
        xn[i] = x[i] + hs * (B::a71 * k1[i] + B::a73 * k3[i] + B::a74 * k4[i] + B::a75 * k5[i] + B::a76 * k6[i]);
      domain_ok = eval(final_step ? t1 : t + hs, xn, k7);
    }

    if (!domain_ok) {
      ++traj.stats.rejected;
      last_rejected = true;
      last_domain = true;
      if (opt.fixed_step) {
        traj.truncated = true;
        traj.truncation_reason = "domain";
        break;
      }
      h *= 0.5;
      if (h < hmin) {
        traj.truncated = true;
        traj.truncation_reason = "domain";
        break;
      }
      continue;
    }

    double err = 0.0;
    {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double e = hs * (B::e1 * k1[i] + B::e3 * k3[i] + B::e4 * k4[i] + B::e5 * k5[i] + B::e6 * k6[i] +
                               B::e7 * k7[i]);
        const double q = e / err_scale(x[i], xn[i]);
        s += q * q;
      }
      err = std::sqrt(s / static_cast<double>(std::max<std::size_t>(d, 1)));
    }

    if (opt.fixed_step || err <= 1.0) {
      const double tn = final_step ? t1 : t + hs;
      ++traj.stats.steps;
      traj.stats.max_error = std::max(traj.stats.max_error, err);
      const StepView view{t, tn, x, k1, xn, k7};
      bool keep_going = true;
      if (observer) keep_going = observer(view);
      t = tn;
      x.swap(xn);
      k1.swap(k7);
      traj.t.push_back(t);
      traj.states.push_back(x);
      traj.derivatives.push_back(k1);
      if (!keep_going || final_step) break;
      if (!opt.fixed_step) {
        double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (last_rejected) fac = std::min(fac, 1.0);
        if (last_domain) fac = std::min(fac, 2.0);
        h = std::min(h * fac, opt.max_step);
      }
      last_rejected = false;
      last_domain = false;
    } else {
      ++traj.stats.rejected;
      last_rejected = true;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
      if (h < hmin) throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));
    }
  }
  return traj;
}

}  // namespace kccstab
