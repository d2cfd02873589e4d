#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kccstab/kccstab.hpp"

namespace kccstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

inline double parse_double(std::string_view s, std::string_view what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InputError("invalid number '" + std::string(s) + "' in " + std::string(what));
  return v;
}

inline std::vector<double> parse_list(std::string_view s, char sep, std::string_view what) {
  std::vector<double> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(parse_double(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start), what));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<double> parse_list(std::string_view s, char sep, std::size_t count, std::string_view what) {
  auto v = parse_list(s, sep, what);
  if (v.size() != count)
    throw InputError(std::string(what) + " expects " + std::to_string(count) + " values, got '" + std::string(s) + "'");
  return v;
}

/// "k=v" pairs into a parameter map.
inline Params parse_params(const std::vector<std::string>& items) {
  Params p;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--param expects name=value, got '" + it + "'");
    const std::string key = it.substr(0, eq);
    if (p.count(key)) throw InputError("parameter '" + key + "' given twice");
    p[key] = parse_double(std::string_view(it).substr(eq + 1), "--param " + key);
  }
  return p;
}

/// "name=lo:hi:step".
inline SweepAxis parse_range(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("--range expects name=lo:hi:step, got '" + s + "'");
  const auto v = parse_list(std::string_view(s).substr(eq + 1), ':', 3, "--range");
  SweepAxis a{s.substr(0, eq), v[0], v[1], v[2]};
  a.validate();
  return a;
}

inline Vec2 parse_vec2(const std::string& s, std::string_view what) {
  const auto v = parse_list(s, ',', 2, what);
  return {v[0], v[1]};
}

inline Box parse_box(const std::string& s) {
  const auto v = parse_list(s, ',', 4, "--box");
  if (!(v[0] < v[1]) || !(v[2] < v[3])) throw InputError("--box expects u_lo,u_hi,v_lo,v_hi with lo < hi");
  return {v[0], v[1], v[2], v[3]};
}

/// State variable names: --vars if given, else (x, y) when the expressions use x/y but not u/v.
inline std::array<std::string, 2> infer_vars(const ExprAst& f, const ExprAst& g, const Params& params,
                                             const std::string& vars) {
  if (!vars.empty()) {
    const auto c = vars.find(',');
    if (c == std::string::npos || c == 0 || c + 1 == vars.size() || vars.find(',', c + 1) != std::string::npos)
      throw InputError("--vars expects two names separated by a comma");
    std::array<std::string, 2> names{vars.substr(0, c), vars.substr(c + 1)};
    if (names[0] == names[1]) throw InputError("--vars names must differ");
    return names;
  }
  std::set<std::string> ids = free_identifiers(f);
  for (const auto& s : free_identifiers(g)) ids.insert(s);
  for (const auto& [k, v] : params) ids.erase(k);
  const bool uv = ids.count("u") || ids.count("v");
  const bool xy = ids.count("x") || ids.count("y");
  if (xy && !uv) return {"x", "y"};
  return {"u", "v"};
}

/// The system named on the command line: a model or a pair of expressions.
struct SystemInput {
  std::string model;
  std::vector<std::string> params;
  std::string du;
  std::string dv;
  std::string vars;

  void add_options(CLI::App& app) {
    app.add_option("--model", model, "built-in model: brusselator, lane-emden, sphere, brane, dark-energy");
    app.add_option("--param", params, "parameter name=value (repeatable)");
    app.add_option("--du", du, "expression for the first component");
    app.add_option("--dv", dv, "expression for the second component");
    app.add_option("--vars", vars, "state variable names, e.g. x,y");
  }

  bool is_model() const {
    if (!model.empty() && (!du.empty() || !dv.empty())) throw InputError("give either --model or --du/--dv, not both");
    if (model.empty() && (du.empty() || dv.empty())) throw InputError("need --model NAME or both --du and --dv");
    if (!model.empty() && !vars.empty()) throw InputError("--vars applies only to --du/--dv systems");
    return !model.empty();
  }

  Model build_model() const { return make_model(std::string_view(model), parse_params(params)); }

  VectorField2 build_field(Params* bound = nullptr) const {
    const Params p = parse_params(params);
    const ExprAst f = parse(du);
    const ExprAst g = parse(dv);
    if (bound) *bound = p;
    return VectorField2::from_expressions(f, g, p, infer_vars(f, g, p, vars));
  }
};

/// Writes to --out when given, else to the supplied stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw InputError("cannot open '" + path + "' for writing");
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

struct Formatting {
  std::string format = "json";
  bool json = false;

  void add_options(CLI::App& app) {
    app.add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));
    app.add_flag("--json", json, "same as --format json");
  }
  bool text() const { return !json && format == "text"; }
};

/// Rewrites "--opt value" as "--opt=value" so values such as "-u" or "-1,0" are not taken for flags.
inline std::vector<std::string> attach_values(const std::vector<std::string>& args) {
  static const std::set<std::string, std::less<>> valued{
      "--model", "--param", "--du",   "--dv",   "--vars",           "--box",  "--grid",    "--at",
      "--out",   "--range", "--point", "--threads", "--from",       "--tspan", "--deviation", "--seed-direction",
      "--rtol",  "--seed",  "--section", "--transient", "--samples", "--format"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (valued.count(args[i]) && i + 1 < args.size()) {
      out.push_back(args[i] + "=" + args[i + 1]);
      ++i;
    } else {
      out.push_back(args[i]);
    }
  }
  return out;
}

inline void write_json(std::ostream& os, const Json& j) { os << j.dump(2) << '\n'; }

/**
 * @brief Runs the command line; returns the process exit code.
 *
 * Diagnostics go to `err`; reports go to `out` unless --out names a file.
 */
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear and Jacobi (KCC) stability analysis of planar dynamical systems", "kccstab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kccstab 1.0.0");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "fixed points with linear and Jacobi stability");
  SystemInput a_sys;
  a_sys.add_options(*analyze);
  Formatting a_fmt;
  a_fmt.add_options(*analyze);
  std::string a_box, a_out;
  std::vector<std::string> a_at;
  int a_grid = 21;
  analyze->add_option("--box", a_box, "fixed-point search box u_lo,u_hi,v_lo,v_hi");
  analyze->add_option("--grid", a_grid, "Newton seeds per axis")->check(CLI::Range(2, 1000));
  analyze->add_option("--at", a_at, "state x,y at which to report all KCC invariants (repeatable)");
  analyze->add_option("--out", a_out, "output file");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "parameter sweep of one reference point to CSV");
  std::string s_model, s_point, s_out;
  std::vector<std::string> s_params, s_ranges;
  unsigned s_threads = 0;
  sweep->add_option("--model", s_model, "built-in model")->required();
  sweep->add_option("--param", s_params, "fixed parameter name=value (repeatable)");
  sweep->add_option("--range", s_ranges, "swept parameter name=lo:hi:step (one or two)")->required();
  sweep->add_option("--point", s_point, "reference point label (default: the model's primary point)");
  sweep->add_option("--threads", s_threads, "worker threads (default: KCCSTAB_THREADS or all cores)");
  sweep->add_option("--out", s_out, "output file");

  // trajectory
  auto* traj = app.add_subcommand("trajectory", "integrate a trajectory, optionally with a deviation vector");
  SystemInput t_sys;
  t_sys.add_options(*traj);
  std::string t_from, t_tspan, t_dev, t_seed_dir, t_out;
  double t_rtol = 1e-10;
  traj->add_option("--from", t_from, "initial state x,y")->required();
  traj->add_option("--tspan", t_tspan, "t0:t1")->required();
  traj->add_option("--deviation", t_dev, "raw or covariant")->check(CLI::IsMember({"raw", "covariant"}));
  traj->add_option("--seed-direction", t_seed_dir, "initial deviation velocity w1[,w2]");
  traj->add_option("--rtol", t_rtol, "relative tolerance")->check(CLI::PositiveNumber);
  traj->add_option("--out", t_out, "output file");

  // limit-cycle
  auto* lc = app.add_subcommand("limit-cycle", "locate a periodic orbit and its characteristic multiplier");
  SystemInput l_sys;
  l_sys.add_options(*lc);
  Formatting l_fmt;
  l_fmt.add_options(*lc);
  std::string l_seed, l_section, l_out;
  double l_transient = 200.0;
  lc->add_option("--seed", l_seed, "starting state x,y")->required();
  lc->add_option("--section", l_section, "section anchor and normal ax,ay,nx,ny");
  lc->add_option("--transient", l_transient, "pre-integration time")->check(CLI::NonNegativeNumber);
  lc->add_option("--out", l_out, "output file");

  // verify
  auto* ver = app.add_subcommand("verify", "run the built-in reference and property checks");
  VerifyOptions v_opt;
  bool v_json = false;
  ver->add_option("--seed", v_opt.seed, "seed of the random-system suite");
  ver->add_option("--samples", v_opt.samples, "number of random systems")->check(CLI::Range(1, 100000));
  ver->add_flag("--json", v_json, "machine-readable output");

  try {
    std::vector<std::string> rev = attach_values(args);
    std::reverse(rev.begin(), rev.end());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "kccstab 1.0.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (analyze->parsed()) {
      AnalysisOptions opt;
      if (!a_box.empty()) opt.box = parse_box(a_box);
      opt.grid = a_grid;
      for (const auto& s : a_at) opt.at.push_back(parse_vec2(s, "--at"));
      Json rep;
      if (a_sys.is_model()) {
        rep = analyze_model(a_sys.build_model(), opt);
      } else {
        Params p;
        const VectorField2 vf = a_sys.build_field(&p);
        rep = analyze_custom(vf, a_sys.du, a_sys.dv, p, opt);
      }
      Output o(a_out, out);
      if (a_fmt.text()) {
        write_analysis_text(o.stream(), rep);
      } else {
        write_json(o.stream(), rep);
      }
    } else if (sweep->parsed()) {
      SweepSpec spec;
      const auto name = model_from_string(s_model);
      if (!name) throw InputError("unknown model '" + s_model + "'");
      spec.model = *name;
      spec.fixed = parse_params(s_params);
      for (const auto& r : s_ranges) spec.axes.push_back(parse_range(r));
      if (spec.axes.size() == 2 && spec.axes[0].name == spec.axes[1].name)
        throw InputError("the same parameter is swept twice");
      spec.point = s_point;
      spec.threads = s_threads;
      const auto rows = run_sweep(spec);
      Output o(s_out, out);
      write_sweep_csv(o.stream(), spec, rows);
    } else if (traj->parsed()) {
      const Vec2 from = parse_vec2(t_from, "--from");
      const auto ts = parse_list(t_tspan, ':', 2, "--tspan");
      if (!(ts[1] > ts[0])) throw InputError("--tspan expects t0 < t1");
      OdeOptions ode;
      ode.rtol = t_rtol;
      ode.atol = 1e-3 * t_rtol;
      const bool model = t_sys.is_model();
      std::optional<Model> m;
      VectorField2 vf;
      if (model) {
        m = t_sys.build_model();
        vf = m->field;
      } else {
        vf = t_sys.build_field();
      }
      if (!vf.in_domain(from[0], from[1])) throw InputError("--from lies outside the domain of the system");
      if (!t_seed_dir.empty() && t_dev.empty()) throw InputError("--seed-direction requires --deviation");
      Output o(t_out, out);
      if (t_dev.empty()) {
        const Trajectory tr = integrate(vf, from, ts[0], ts[1], ode);
        const std::array<std::string, 2>& names = vf.names();
        write_csv(o.stream(), tr, std::span<const std::string>(names.data(), 2));
        if (tr.truncated) err << "warning: trajectory left the domain at t = " << format_number(tr.t.back()) << '\n';
      } else {
        Semispray s;
        Vec2 ph;
        Eliminate elim;
        if (model) {
          s = m->semispray;
          ph = m->phase_point(from);
          elim = m->elimination;
        } else {
          elim = preferred_elimination(vf, from);
          EliminationSettings st;
          st.initial_guess = elim == Eliminate::U ? from[0] : from[1];
          const EliminationReduction red(vf, elim, st);
          s = red.semispray();
          ph = red.image(from[0], from[1]);
        }
        // The reduced equation is one-dimensional in the retained coordinate.
        double w = 1.0;
        if (!t_seed_dir.empty()) {
          const auto v = parse_list(t_seed_dir, ',', "--seed-direction");
          if (v.size() == 1) {
            w = v[0];
          } else if (v.size() == 2) {
            w = elim == Eliminate::U ? v[1] : v[0];
          } else {
            throw InputError("--seed-direction expects one or two values");
          }
          if (w == 0.0) throw InputError("--seed-direction has no component along the retained coordinate");
        }
        const double xs[1] = {ph[0]};
        const double ys[1] = {ph[1]};
        const double ws[1] = {w};
        const DeviationTrack d = integrate_deviation(
            s, xs, ys, ws, ts[0], ts[1], t_dev == "raw" ? DeviationMode::RawVariational : DeviationMode::Covariant, ode);
        write_csv(o.stream(), d);
        if (d.truncated) err << "warning: trajectory left the domain at t = " << format_number(d.t.back()) << '\n';
      }
    } else if (lc->parsed()) {
      const Vec2 seed = parse_vec2(l_seed, "--seed");
      std::optional<Section> sec;
      if (!l_section.empty()) {
        const auto v = parse_list(l_section, ',', 4, "--section");
        sec = Section{{v[0], v[1]}, {v[2], v[3]}};
      }
      const VectorField2 vf = l_sys.is_model() ? l_sys.build_model().field : l_sys.build_field();
      LimitCycleOptions opt;
      opt.transient = l_transient;
      const LimitCycleReport r = find_limit_cycle(vf, seed, sec, opt);
      const Json j = limit_cycle_json(r);
      Output o(l_out, out);
      if (l_fmt.text()) {
        o.stream() << "class " << to_string(r.cls) << "\nmultiplier " << format_number(r.multiplier)
                   << "\nmultiplier_secant " << format_number(r.multiplier_secant) << "\nperiod "
                   << format_number(r.period) << "\npoint " << format_number(r.point[0]) << ','
                   << format_number(r.point[1]) << '\n';
      } else {
        write_json(o.stream(), j);
      }
    } else if (ver->parsed()) {
      const VerifyReport rep = run_verify(v_opt);
      if (v_json) {
        write_json(out, verify_json(rep));
      } else {
        write_verify_text(out, rep);
      }
      return rep.passed() ? kExitOk : kExitNumeric;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace kccstab::cli
