#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/format.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/linstab.hpp"
#include "kccstab/models.hpp"

namespace kccstab {

/// Grid lo, lo+step, ..., with round((hi−lo)/step)+1 points.
struct SweepAxis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.1;

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidParameter("sweep: step must be positive for " + name);
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw InvalidParameter("sweep: need lo < hi for " + name);
  }
  std::size_t count() const { return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1; }
  double value(std::size_t i) const {
    const double v = lo + static_cast<double>(i) * step;
    return std::abs(v - hi) <= 1e-9 * step ? hi : v;
  }
};

struct SweepSpec {
  ModelName model = ModelName::Brusselator;
  std::vector<SweepAxis> axes;  ///< one or two axes; the last varies fastest
  Params fixed;
  std::string point;  ///< reference point label; empty selects the model's primary point
  unsigned threads = 0;  ///< 0: KCCSTAB_THREADS, else hardware concurrency
};

/// Pipeline evaluation at one reference point.
struct PointEvaluation {
  Vec2 point{kNaN, kNaN};
  double trace = kNaN;
  double det = kNaN;
  double discriminant = kNaN;
  double p11 = kNaN;
  std::optional<std::array<double, 2>> lyapunov_mu;
  std::optional<LinearClass> linear;
  std::optional<JacobiClass> jacobi;
  std::vector<std::string> flags;

  bool has(std::string_view f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
  bool usable() const { return !has("singular") && !has("nonexistent") && !has("error"); }
};

struct RegionRow {
  std::vector<double> params;
  PointEvaluation eval;
};

namespace detail {

inline void add_flag(std::vector<std::string>& flags, std::string f) {
  if (std::find(flags.begin(), flags.end(), f) == flags.end()) flags.push_back(std::move(f));
}

inline bool near_zero(double q) { return std::abs(q) <= 1e-6 * (1.0 + std::abs(q)); }

}  // namespace detail

/**
 * @brief Linear and Jacobi data at a model's reference point through the generic pipeline.
 *
 * The closed-form location is polished by Newton; the Jacobian comes from jets and P¹₁
 * from the model's semispray at the corresponding phase point. Failures become flags.
 */
inline PointEvaluation evaluate_point(const Model& m, std::string_view label) {
  PointEvaluation e;
  const ReferencePoint& ref = m.refs.at(label);
  if (!ref.exists) {
    const bool on_pole = !m.field.in_domain(ref.location[0], ref.location[1]);
    detail::add_flag(e.flags, on_pole ? "singular" : "nonexistent");
    return e;
  }
  Vec2 p = ref.location;
  try {
    if (ref.fixed_point) {
      if (auto fp = newton_fixed_point(m.field, p); fp && std::hypot(fp->x[0] - p[0], fp->x[1] - p[1]) <= 1e-6)
        p = fp->x;
      const auto F = m.field(p[0], p[1]);
      if (std::hypot(F[0], F[1]) > 1e-8) detail::add_flag(e.flags, "not_fixed_point");
    }
    e.point = p;
    const LinearReport lr = linearize(m.field, p);
    e.trace = lr.trace;
    e.det = lr.det;
    e.discriminant = lr.discriminant;
    e.linear = lr.cls;
    if (ref.lyapunov_mu) e.lyapunov_mu = lyapunov_hessian_eigenvalues(m.field, p, m.lyapunov_weights);
    const Vec2 ph = m.phase_point(p);
    e.p11 = deviation_curvature(m.semispray, ph[0], ph[1]);
    e.jacobi = classify_jacobi(e.p11).cls;
  } catch (const DomainError&) {
    detail::add_flag(e.flags, "singular");
    return e;
  } catch (const NumericError&) {
    detail::add_flag(e.flags, "error");
    return e;
  }
  if (detail::near_zero(e.discriminant) || detail::near_zero(e.p11)) detail::add_flag(e.flags, "near_boundary");
  return e;
}

inline double quantity_value(const PointEvaluation& e, ThresholdQuantity q) {
  switch (q) {
    case ThresholdQuantity::Discriminant:
    case ThresholdQuantity::Radicand: return e.discriminant;
    case ThresholdQuantity::P11: return e.p11;
    case ThresholdQuantity::Trace: return e.trace;
    case ThresholdQuantity::Determinant: return e.det;
    case ThresholdQuantity::LyapunovMuMax: return e.lyapunov_mu ? (*e.lyapunov_mu)[0] : kNaN;
  }
  return kNaN;
}

inline unsigned sweep_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("KCCSTAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Parameter values of one grid point, by row index.
inline std::vector<double> sweep_params(const SweepSpec& spec, std::size_t index) {
  std::vector<double> out(spec.axes.size());
  for (std::size_t k = spec.axes.size(); k-- > 0;) {
    const std::size_t c = spec.axes[k].count();
    out[k] = spec.axes[k].value(index % c);
    index /= c;
  }
  return out;
}

inline RegionRow sweep_row(const SweepSpec& spec, std::size_t index) {
  RegionRow row;
  row.params = sweep_params(spec, index);
  Params p = spec.fixed;
  for (std::size_t k = 0; k < spec.axes.size(); ++k) p[spec.axes[k].name] = row.params[k];
  try {
    const Model m = make_model(spec.model, p);
    row.eval = evaluate_point(m, spec.point.empty() ? m.primary_point : spec.point);
  } catch (const InvalidParameter&) {
    detail::add_flag(row.eval.flags, "singular");
  }
  return row;
}

/**
 * @brief Evaluates every grid point; rows are ordered by grid index regardless of threading.
 *
 * Rows whose linear or Jacobi class differs from the previous usable row along the
 * fastest axis get the flag "transition"; singular rows are skipped over.
 */
inline std::vector<RegionRow> run_sweep(const SweepSpec& spec) {
  if (spec.axes.empty() || spec.axes.size() > 2) throw InvalidParameter("sweep: one or two swept parameters required");
  std::size_t total = 1;
  for (const auto& a : spec.axes) {
    a.validate();
    if (spec.fixed.count(a.name)) throw InvalidParameter("sweep: '" + a.name + "' is both swept and fixed");
    total *= a.count();
  }
  {
    Params probe = spec.fixed;
    for (const auto& a : spec.axes) probe[a.name] = a.value(0);
    check_model_keys(spec.model, probe);
    if (!spec.point.empty()) {
      const auto labels = model_point_labels(spec.model);
      if (std::find(labels.begin(), labels.end(), spec.point) == labels.end())
        throw InvalidParameter("sweep: unknown point '" + spec.point + "' for " + std::string(to_string(spec.model)));
    }
  }

  std::vector<RegionRow> rows(total);
  const unsigned nt = std::min<std::size_t>(sweep_threads(spec.threads), total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) rows[i] = sweep_row(spec, i);
  };
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
  }

  const std::size_t inner = spec.axes.back().count();
  const PointEvaluation* prev = nullptr;
  for (std::size_t i = 0; i < total; ++i) {
    if (i % inner == 0) prev = nullptr;
    auto& b = rows[i].eval;
    if (!b.usable()) continue;
    if (prev && (prev->linear != b.linear || prev->jacobi != b.jacobi)) detail::add_flag(b.flags, "transition");
    prev = &b;
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<RegionRow>& rows) {
  for (const auto& a : spec.axes) os << a.name << ',';
  os << "fp_u,fp_v,trace,det,discriminant,P11,linear_class,jacobi_class,flags\n";
  for (const auto& r : rows) {
    for (double v : r.params) os << format_number(v) << ',';
    const auto& e = r.eval;
    os << format_number(e.point[0]) << ',' << format_number(e.point[1]) << ',' << format_number(e.trace) << ','
       << format_number(e.det) << ',' << format_number(e.discriminant) << ',' << format_number(e.p11) << ',';
    if (e.linear) os << to_string(*e.linear);
    os << ',';
    if (e.jacobi) os << to_string(*e.jacobi);
    os << ',';
    for (std::size_t k = 0; k < e.flags.size(); ++k) os << (k ? "|" : "") << e.flags[k];
    os << '\n';
  }
}

struct ThresholdSpec {
  ModelName model = ModelName::Brusselator;
  Params fixed;
  std::string parameter;
  std::string point;  ///< empty selects the primary point
  ThresholdQuantity quantity = ThresholdQuantity::P11;
  double lo = 0.0;
  double hi = 1.0;
  double tolerance = 1e-10;
};

struct ThresholdResult {
  double root = kNaN;
  double bracket_lo = kNaN;
  double bracket_hi = kNaN;
  int iterations = 0;
};

/// Value of the threshold quantity at one parameter value.
inline double threshold_quantity(const ThresholdSpec& spec, double value) {
  Params p = spec.fixed;
  p[spec.parameter] = value;
  const Model m = make_model(spec.model, p);
  const PointEvaluation e = evaluate_point(m, spec.point.empty() ? m.primary_point : spec.point);
  const double q = quantity_value(e, spec.quantity);
  if (!e.usable() || !std::isfinite(q))
    throw DomainError("threshold quantity undefined at " + spec.parameter + " = " + format_number(value));
  return q;
}

/// Bisection on a sign change of the quantity over [lo, hi].
inline ThresholdResult find_threshold(const ThresholdSpec& spec) {
  if (!(spec.lo < spec.hi)) throw InvalidParameter("find_threshold: need lo < hi");
  double a = spec.lo, b = spec.hi;
  double fa = threshold_quantity(spec, a);
  const double fb = threshold_quantity(spec, b);
  ThresholdResult r;
  if (fa == 0.0) {
    r.root = r.bracket_lo = r.bracket_hi = a;
    return r;
  }
  if (fb == 0.0) {
    r.root = r.bracket_lo = r.bracket_hi = b;
    return r;
  }
  if ((fa < 0.0) == (fb < 0.0))
    throw NoSignChange(std::string(to_string(spec.quantity)) + " keeps its sign on [" + format_number(spec.lo) +
                       ", " + format_number(spec.hi) + "]");
  while (b - a > spec.tolerance && r.iterations < 200) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = threshold_quantity(spec, mid);
    ++r.iterations;
    if (fm == 0.0) {
      a = b = mid;
      break;
    }
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  r.root = 0.5 * (a + b);
  r.bracket_lo = a;
  r.bracket_hi = b;
  return r;
}

}  // namespace kccstab
