#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kccstab/flow.hpp"
#include "kccstab/kcc.hpp"
#include "kccstab/linstab.hpp"
#include "kccstab/models.hpp"
#include "kccstab/sweep.hpp"

namespace kccstab {

using Json = nlohmann::json;

inline constexpr const char* kAnalysisSchema = "kccstab.analysis.v1";
inline constexpr const char* kLimitCycleSchema = "kccstab.limit-cycle.v1";

/// Finite numbers as-is; NaN and infinities as null.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json vec_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline Json vec_json(Vec2 v) { return Json::array({num(v[0]), num(v[1])}); }

inline Json mat_json(const Mat2& m) { return Json::array({vec_json(m[0]), vec_json(m[1])}); }

/// Nested arrays following the tensor shape.
inline Json tensor_json(const Tensor& t) {
  const auto& shape = t.shape();
  const auto& data = t.data();
  std::size_t pos = 0;
  auto rec = [&](auto&& self, std::size_t level) -> Json {
    Json a = Json::array();
    for (std::size_t i = 0; i < shape[level]; ++i) a.push_back(level + 1 == shape.size() ? num(data[pos++]) : self(self, level + 1));
    return a;
  };
  return shape.empty() ? Json::array() : rec(rec, 0);
}

inline Json complex_json(std::complex<double> z) { return Json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

inline Json linear_json(const LinearReport& r) {
  return Json{{"jacobian", mat_json(r.jacobian)},
              {"trace", num(r.trace)},
              {"det", num(r.det)},
              {"discriminant", num(r.discriminant)},
              {"eigenvalues", Json::array({complex_json(r.eigenvalues[0]), complex_json(r.eigenvalues[1])})},
              {"class", std::string(to_string(r.cls))},
              {"stability", std::string(to_string(r.stability))},
              {"hyperbolic", r.hyperbolic},
              {"eps_c", num(r.eps_c)}};
}

inline Json jacobi_json(const JacobiReport& r) {
  Json ev = Json::array();
  for (const auto& z : r.eigenvalues) ev.push_back(complex_json(z));
  return Json{{"P", tensor_json(r.P)}, {"eigenvalues", ev}, {"class", std::string(to_string(r.cls))}, {"eps_j", num(r.eps_j)}};
}

inline Json kcc_json(const KccInvariants& k) {
  Json j{{"x", vec_json(k.x)},        {"y", vec_json(k.y)},         {"G", vec_json(k.G)},
         {"N", tensor_json(k.N)},     {"berwald", tensor_json(k.berwald)}, {"eps", vec_json(k.eps)},
         {"P", tensor_json(k.P)}};
  if (k.third) j["third"] = tensor_json(*k.third);
  if (k.fourth) j["fourth"] = tensor_json(*k.fourth);
  if (k.fifth) j["fifth"] = tensor_json(*k.fifth);
  j["higher_method"] = k.higher_by_finite_difference ? "finite-difference" : "none";
  return j;
}

inline Json theorem_json(const TheoremCheck& t) {
  return Json{{"lhs", num(t.lhs)},
              {"rhs", num(t.rhs)},
              {"residual", num(t.residual)},
              {"P11", num(t.p11)},
              {"eliminated", to_string(t.eliminated)},
              {"image", vec_json(t.image)}};
}

inline Json params_json(const Params& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = num(v);
  return j;
}

struct AnalysisOptions {
  std::optional<Box> box;
  int grid = 21;
  std::vector<Vec2> at;  ///< states at which full KCC invariants are reported
  bool higher = true;    ///< include invariants 3-5 at the --at points
};

namespace detail {

inline Json error_json(const std::exception& e) { return Json(std::string(e.what())); }

/// Fixed-point entry shared by models and custom systems; `semispray_at` maps a state to (semispray, phase point).
template <class KccAt, class Theorem>
Json fixed_point_json(const VectorField2& field, const FixedPoint& fp, std::optional<std::string> label,
                      KccAt&& kcc_at, Theorem&& theorem) {
  Json j;
  j["label"] = label ? Json(*label) : Json(nullptr);
  j["point"] = vec_json(fp.x);
  j["residual"] = num(fp.residual);
  j["newton_iterations"] = fp.iterations;
  Json errors = Json::array();
  try {
    j["linear"] = linear_json(linearize(field, fp.x));
  } catch (const Error& e) {
    errors.push_back(error_json(e));
  }
  try {
    const KccInvariants k = kcc_at(fp.x);
    j["kcc"] = kcc_json(k);
    j["jacobi"] = jacobi_json(classify_jacobi(k.P));
  } catch (const Error& e) {
    errors.push_back(error_json(e));
  }
  try {
    j["theorem"] = theorem_json(theorem(fp.x));
  } catch (const Error& e) {
    errors.push_back(error_json(e));
  }
  j["errors"] = errors;
  return j;
}

}  // namespace detail

inline Json reference_json(const Model& m, const ReferencePoint& r) {
  Json cf{{"trace", num(r.trace)}, {"det", num(r.det)}, {"discriminant", num(r.discriminant)}, {"P11", num(r.p11)}};
  cf["linear_class"] = r.linear ? Json(std::string(to_string(*r.linear))) : Json(nullptr);
  cf["jacobi_class"] = r.jacobi ? Json(std::string(to_string(*r.jacobi))) : Json(nullptr);
  cf["lyapunov_mu"] = r.lyapunov_mu ? vec_json(*r.lyapunov_mu) : Json(nullptr);
  const PointEvaluation e = evaluate_point(m, r.label);
  Json pl{{"point", vec_json(e.point)},
          {"trace", num(e.trace)},
          {"det", num(e.det)},
          {"discriminant", num(e.discriminant)},
          {"P11", num(e.p11)},
          {"flags", e.flags}};
  pl["linear_class"] = e.linear ? Json(std::string(to_string(*e.linear))) : Json(nullptr);
  pl["jacobi_class"] = e.jacobi ? Json(std::string(to_string(*e.jacobi))) : Json(nullptr);
  pl["lyapunov_mu"] = e.lyapunov_mu ? vec_json(*e.lyapunov_mu) : Json(nullptr);
  return Json{{"label", r.label},
              {"exists", r.exists},
              {"fixed_point", r.fixed_point},
              {"location", vec_json(r.location)},
              {"closed_form", cf},
              {"pipeline", pl}};
}

/// Full analysis of a built-in model.
inline Json analyze_model(const Model& m, const AnalysisOptions& opt = {}) {
  Json rep;
  rep["schema"] = kAnalysisSchema;
  rep["system"] = Json{{"kind", "model"},
                       {"model", std::string(to_string(m.name))},
                       {"params", params_json(m.params)},
                       {"variables", Json::array({m.field.names()[0], m.field.names()[1]})},
                       {"description", m.field.description()},
                       {"eliminated", to_string(m.elimination)}};
  const Box box = opt.box.value_or(m.box);
  rep["box"] = Json::array({box.u_lo, box.u_hi, box.v_lo, box.v_hi});
  const FixedPointSet fps = find_fixed_points(m.field, box, opt.grid);
  rep["degenerate"] = fps.degenerate;

  auto kcc_at = [&m](Vec2 p) {
    const Vec2 ph = m.phase_point(p);
    return kcc_invariants(m.semispray, ph[0], ph[1]);
  };
  auto theorem = [&m](Vec2 p) { return theorem_check(m.kcc_field, m.kcc_state(p), m.elimination); };
  Json pts = Json::array();
  for (const FixedPoint& fp : fps.points) {
    std::optional<std::string> label;
    for (const auto& r : m.refs.points)
      if (r.exists && r.fixed_point && std::hypot(r.location[0] - fp.x[0], r.location[1] - fp.x[1]) <= 1e-6)
        label = r.label;
    pts.push_back(detail::fixed_point_json(m.field, fp, label, kcc_at, theorem));
  }
  rep["fixed_points"] = pts;

  Json refs = Json::array();
  for (const auto& r : m.refs.points) refs.push_back(reference_json(m, r));
  rep["references"] = refs;

  Json at = Json::array();
  for (const Vec2& p : opt.at) {
    Json e{{"state", vec_json(p)}};
    try {
      const Vec2 ph = m.phase_point(p);
      const double xs[1] = {ph[0]};
      const double ys[1] = {ph[1]};
      const KccInvariants k = opt.higher ? kcc_invariants_full(m.semispray, xs, ys) : kcc_invariants(m.semispray, xs, ys);
      e["kcc"] = kcc_json(k);
      e["jacobi"] = jacobi_json(classify_jacobi(k.P));
    } catch (const Error& err) {
      e["error"] = err.what();
    }
    at.push_back(e);
  }
  rep["kcc_at"] = at;
  return rep;
}

/// Analysis of a user-defined planar system; the semispray comes from numeric elimination.
inline Json analyze_custom(const VectorField2& vf, const std::string& du, const std::string& dv, const Params& params,
                           const AnalysisOptions& opt = {}) {
  Json rep;
  rep["schema"] = kAnalysisSchema;
  rep["system"] = Json{{"kind", "custom"},
                       {"du", du},
                       {"dv", dv},
                       {"params", params_json(params)},
                       {"variables", Json::array({vf.names()[0], vf.names()[1]})},
                       {"description", vf.description()}};
  const Box box = opt.box.value_or(Box{-2.0, 2.0, -2.0, 2.0});
  rep["box"] = Json::array({box.u_lo, box.u_hi, box.v_lo, box.v_hi});
  const FixedPointSet fps = find_fixed_points(vf, box, opt.grid);
  rep["degenerate"] = fps.degenerate;

  auto reduction_at = [&vf](Vec2 p) {
    const Eliminate e = preferred_elimination(vf, p);
    EliminationSettings st;
    st.initial_guess = e == Eliminate::U ? p[0] : p[1];
    return EliminationReduction(vf, e, st);
  };
  auto kcc_at = [&](Vec2 p) {
    const EliminationReduction red = reduction_at(p);
    const Vec2 ph = red.image(p[0], p[1]);
    return kcc_invariants(red.semispray(), ph[0], ph[1]);
  };
  auto theorem = [&vf](Vec2 p) { return theorem_check(vf, p); };
  Json pts = Json::array();
  for (const FixedPoint& fp : fps.points) pts.push_back(detail::fixed_point_json(vf, fp, std::nullopt, kcc_at, theorem));
  rep["fixed_points"] = pts;
  rep["references"] = Json::array();

  Json at = Json::array();
  for (const Vec2& p : opt.at) {
    Json e{{"state", vec_json(p)}};
    try {
      const EliminationReduction red = reduction_at(p);
      const Vec2 ph = red.image(p[0], p[1]);
      const double xs[1] = {ph[0]};
      const double ys[1] = {ph[1]};
      const Semispray s = red.semispray();
      const KccInvariants k = opt.higher ? kcc_invariants_full(s, xs, ys) : kcc_invariants(s, xs, ys);
      e["eliminated"] = to_string(red.eliminated());
      e["kcc"] = kcc_json(k);
      e["jacobi"] = jacobi_json(classify_jacobi(k.P));
    } catch (const Error& err) {
      e["error"] = err.what();
    }
    at.push_back(e);
  }
  rep["kcc_at"] = at;
  return rep;
}

/// Plain-text summary of an analysis report.
inline void write_analysis_text(std::ostream& os, const Json& rep) {
  const auto& sys = rep["system"];
  if (sys["kind"] == "model") {
    os << "model " << sys["model"].get<std::string>();
    for (const auto& [k, v] : sys["params"].items()) os << ' ' << k << '=' << (v.is_null() ? "nan" : format_number(v.get<double>()));
    os << '\n';
  } else {
    os << "system du/dt = " << sys["du"].get<std::string>() << "; dv/dt = " << sys["dv"].get<std::string>() << '\n';
  }
  auto n = [](const Json& v) { return v.is_null() ? std::string("nan") : format_number(v.get<double>()); };
  os << "fixed points: " << rep["fixed_points"].size() << (rep["degenerate"].get<bool>() ? " (degenerate)" : "") << '\n';
  for (const auto& fp : rep["fixed_points"]) {
    os << "  (" << n(fp["point"][0]) << ", " << n(fp["point"][1]) << ")";
    if (!fp["label"].is_null()) os << " [" << fp["label"].get<std::string>() << "]";
    os << '\n';
    if (fp.contains("linear")) {
      const auto& l = fp["linear"];
      os << "    trace " << n(l["trace"]) << "  det " << n(l["det"]) << "  discriminant " << n(l["discriminant"])
         << "  class " << l["class"].get<std::string>() << '\n';
    }
    if (fp.contains("jacobi"))
      os << "    P11 " << n(fp["jacobi"]["P"][0][0]) << "  " << fp["jacobi"]["class"].get<std::string>() << '\n';
    if (fp.contains("theorem"))
      os << "    4P11 - discriminant residual " << n(fp["theorem"]["residual"]) << '\n';
    for (const auto& e : fp["errors"]) os << "    error: " << e.get<std::string>() << '\n';
  }
}

inline Json limit_cycle_json(const LimitCycleReport& r) {
  return Json{{"schema", kLimitCycleSchema},
              {"section", Json{{"anchor", vec_json(r.section.anchor)}, {"normal", vec_json(r.section.normal)}}},
              {"point", vec_json(r.point)},
              {"s_star", num(r.s_star)},
              {"period", num(r.period)},
              {"multiplier", num(r.multiplier)},
              {"multiplier_secant", num(r.multiplier_secant)},
              {"multiplier_divergence", num(r.multiplier_divergence)},
              {"class", std::string(to_string(r.cls))},
              {"closure", num(r.closure)},
              {"iterations", r.iterations}};
}

}  // namespace kccstab
