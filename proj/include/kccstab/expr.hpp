#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>
#include <vector>

#include "kccstab/error.hpp"
#include "kccstab/taylor2.hpp"

namespace kccstab {

using Params = std::map<std::string, double, std::less<>>;

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class Func { Exp, Ln, Sqrt, Sin, Cos, Abs };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Constant {
  double value;
};
struct Identifier {
  std::string name;
};
struct Negate {
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};
struct Call {
  Func fn;
  NodePtr arg;
};

struct Node {
  std::variant<Constant, Identifier, Negate, Binary, Call> data;
  std::size_t offset = 0;
};

inline std::string_view func_name(Func f) {
  switch (f) {
    case Func::Exp: return "exp";
    case Func::Ln: return "ln";
    case Func::Sqrt: return "sqrt";
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Abs: return "abs";
  }
  return "?";
}

/// Immutable parsed expression.
class ExprAst {
 public:
  ExprAst() = default;
  ExprAst(NodePtr root, std::string source) : root_(std::move(root)), source_(std::move(source)) {}

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  const std::string& source() const noexcept { return source_; }
  bool empty() const noexcept { return !root_; }

 private:
  NodePtr root_;
  std::string source_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw SyntaxError(pos_, "operator or end of input");
    return e;
  }

 private:
  static NodePtr make(std::size_t off, auto data) {
    return std::make_shared<const Node>(Node{std::move(data), off});
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      const std::size_t off = pos_;
      if (accept('+')) {
        lhs = make(off, Binary{BinaryOp::Add, lhs, term()});
      } else if (accept('-')) {
        lhs = make(off, Binary{BinaryOp::Sub, lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_ws();
      const std::size_t off = pos_;
      if (accept('*')) {
        lhs = make(off, Binary{BinaryOp::Mul, lhs, unary()});
      } else if (accept('/')) {
        lhs = make(off, Binary{BinaryOp::Div, lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  // '^' binds tighter than unary minus: -x^2 is -(x^2); the exponent may carry a sign.
  NodePtr unary() {
    skip_ws();
    const std::size_t off = pos_;
    if (accept('-')) return make(off, Negate{unary()});
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    skip_ws();
    const std::size_t off = pos_;
    if (accept('^')) return make(off, Binary{BinaryOp::Pow, base, unary()});
    return base;
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

  NodePtr atom() {
    skip_ws();
    const std::size_t off = pos_;
    if (pos_ >= src_.size()) throw SyntaxError(pos_, "expression");
    const char c = src_[pos_];
    if (is_digit(c) || c == '.') return number();
    if (is_alpha(c)) {
      while (pos_ < src_.size() && (is_alpha(src_[pos_]) || is_digit(src_[pos_]) || src_[pos_] == '_')) ++pos_;
      std::string name(src_.substr(off, pos_ - off));
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        const Func fn = lookup(name, off);
        ++pos_;
        NodePtr arg = expr();
        if (!accept(')')) throw SyntaxError(pos_, "')'");
        return make(off, Call{fn, arg});
      }
      return make(off, Identifier{std::move(name)});
    }
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) throw SyntaxError(pos_, "')'");
      return e;
    }
    throw SyntaxError(pos_, "expression");
  }

  NodePtr number() {
    const std::size_t off = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
      return pos_ - s;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw SyntaxError(off, "digit");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    if (pos_ < src_.size() && (is_alpha(src_[pos_]) || src_[pos_] == '_'))
      throw SyntaxError(pos_, "operator (implicit multiplication is not supported)");
    double value = 0.0;
    const char* first = src_.data() + off;
    const auto res = std::from_chars(first, src_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw SyntaxError(off, "number");
    return make(off, Constant{value});
  }

  static Func lookup(const std::string& name, std::size_t off) {
    static const std::map<std::string, Func, std::less<>> table{
        {"exp", Func::Exp}, {"ln", Func::Ln},   {"sqrt", Func::Sqrt},
        {"sin", Func::Sin}, {"cos", Func::Cos}, {"abs", Func::Abs}};
    const auto it = table.find(name);
    if (it == table.end()) throw UnknownFunction(name, off);
    return it->second;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

inline void collect_identifiers(const Node& n, std::set<std::string>& out) {
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Identifier>) {
          out.insert(d.name);
        } else if constexpr (std::is_same_v<D, Negate>) {
          collect_identifiers(*d.operand, out);
        } else if constexpr (std::is_same_v<D, Binary>) {
          collect_identifiers(*d.lhs, out);
          collect_identifiers(*d.rhs, out);
        } else if constexpr (std::is_same_v<D, Call>) {
          collect_identifiers(*d.arg, out);
        }
      },
      n.data);
}

inline void print(const Node& n, std::string& out) {
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          char buf[40];
          const auto r = std::to_chars(buf, buf + sizeof buf, d.value);
          out.append(buf, r.ptr);
        } else if constexpr (std::is_same_v<D, Identifier>) {
          out += d.name;
        } else if constexpr (std::is_same_v<D, Negate>) {
          out += "(-";
          print(*d.operand, out);
          out += ')';
        } else if constexpr (std::is_same_v<D, Binary>) {
          static constexpr char ops[] = {'+', '-', '*', '/', '^'};
          out += '(';
          print(*d.lhs, out);
          out += ' ';
          out += ops[static_cast<int>(d.op)];
          out += ' ';
          print(*d.rhs, out);
          out += ')';
        } else {
          out += func_name(d.fn);
          out += '(';
          print(*d.arg, out);
          out += ')';
        }
      },
      n.data);
}

inline bool same_structure(const Node& a, const Node& b) {
  if (a.data.index() != b.data.index()) return false;
  return std::visit(
      [&](const auto& da) {
        using D = std::decay_t<decltype(da)>;
        const auto& db = std::get<D>(b.data);
        if constexpr (std::is_same_v<D, Constant>) {
          return da.value == db.value;
        } else if constexpr (std::is_same_v<D, Identifier>) {
          return da.name == db.name;
        } else if constexpr (std::is_same_v<D, Negate>) {
          return same_structure(*da.operand, *db.operand);
        } else if constexpr (std::is_same_v<D, Binary>) {
          return da.op == db.op && same_structure(*da.lhs, *db.lhs) && same_structure(*da.rhs, *db.rhs);
        } else {
          return da.fn == db.fn && same_structure(*da.arg, *db.arg);
        }
      },
      a.data);
}

}  // namespace detail

/// Parses an expression. Throws SyntaxError or UnknownFunction.
inline ExprAst parse(std::string_view source) {
  detail::Parser p(source);
  return ExprAst(p.parse_all(), std::string(source));
}

inline std::set<std::string> free_identifiers(const ExprAst& ast) {
  std::set<std::string> out;
  if (!ast.empty()) detail::collect_identifiers(ast.root(), out);
  return out;
}

/// Fully parenthesized rendering that reparses to the same tree.
inline std::string to_string(const ExprAst& ast) {
  std::string out;
  if (!ast.empty()) detail::print(ast.root(), out);
  return out;
}

inline bool structurally_equal(const ExprAst& a, const ExprAst& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return detail::same_structure(a.root(), b.root());
}

namespace detail {

template <class T>
T lift(double c, std::size_t m) {
  if constexpr (std::is_same_v<T, double>) {
    (void)m;
    return c;
  } else {
    return T::constant(typename T::scalar_type(c), m);
  }
}

template <class T>
std::size_t seed_count(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    (void)x;
    return 0;
  } else {
    return x.seeds();
  }
}

inline double apply(Func f, double x) {
  switch (f) {
    case Func::Exp: return std::exp(x);
    case Func::Ln:
      if (!(x > 0.0)) throw DomainError("ln of non-positive value");
      return std::log(x);
    case Func::Sqrt:
      if (x < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(x);
    case Func::Sin: return std::sin(x);
    case Func::Cos: return std::cos(x);
    case Func::Abs: return std::abs(x);
  }
  return 0.0;
}

template <class T>
T apply(Func f, const T& x) {
  switch (f) {
    case Func::Exp: return exp(x);
    case Func::Ln: return log(x);
    case Func::Sqrt: return sqrt(x);
    case Func::Sin: return sin(x);
    case Func::Cos: return cos(x);
    case Func::Abs: return abs(x);
  }
  return x;
}

inline double pow_const(double x, double p) {
  if (x == 0.0 && p < 0.0) throw DomainError("zero raised to a negative power");
  if (x < 0.0 && !is_integral_exponent(p)) throw DomainError("non-integer power of negative value");
  return std::pow(x, p);
}

template <class T>
T pow_const(const T& x, double p) {
  return pow(x, p);
}

inline double pow_general(double x, double y) { return pow_const(x, y); }

template <class T>
T pow_general(const T& x, const T& y) {
  return pow(x, y);
}

inline double divide(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return a / b;
}

template <class T>
T divide(const T& a, const T& b) {
  return a / b;
}

}  // namespace detail

/**
 * @brief Expression bound to an ordered list of variable names and parameter values.
 *
 * Parameters and variable-free subtrees are folded to constants at bind time.
 * Variables take precedence over parameters of the same name.
 */
class BoundExpr {
 public:
  BoundExpr() = default;

  BoundExpr(const ExprAst& ast, const std::vector<std::string>& vars, const Params& params) {
    if (ast.empty()) throw InputError("empty expression");
    compile(ast.root(), vars, params);
    arity_ = vars.size();
  }

  std::size_t arity() const noexcept { return arity_; }

  template <class T>
  T eval(std::span<const T> vars) const {
    if (vars.size() != arity_) throw std::invalid_argument("BoundExpr: arity mismatch");
    const std::size_t m = vars.empty() ? 0 : detail::seed_count(vars[0]);
    std::vector<T> val;
    val.reserve(ops_.size());
    for (const Op& op : ops_) {
      switch (op.kind) {
        case Kind::Const: val.push_back(detail::lift<T>(op.c, m)); break;
        case Kind::Var: val.push_back(vars[op.a]); break;
        case Kind::Neg: val.push_back(-val[op.a]); break;
        case Kind::Add: val.push_back(val[op.a] + val[op.b]); break;
        case Kind::Sub: val.push_back(val[op.a] - val[op.b]); break;
        case Kind::Mul: val.push_back(val[op.a] * val[op.b]); break;
        case Kind::Div: val.push_back(detail::divide(val[op.a], val[op.b])); break;
        case Kind::PowConst: val.push_back(detail::pow_const(val[op.a], op.c)); break;
        case Kind::Pow: val.push_back(detail::pow_general(val[op.a], val[op.b])); break;
        case Kind::Call: val.push_back(detail::apply(op.fn, val[op.a])); break;
      }
    }
    return val.back();
  }

  template <class T>
  T operator()(std::initializer_list<T> vars) const {
    return eval<T>(std::span<const T>(vars.begin(), vars.size()));
  }

 private:
  enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, PowConst, Pow, Call };
  struct Op {
    Kind kind;
    std::size_t a = 0;
    std::size_t b = 0;
    double c = 0.0;
    Func fn = Func::Exp;
  };

  // Returns the index of the emitted op. Constant subtrees collapse to one Const op.
  std::size_t compile(const Node& n, const std::vector<std::string>& vars, const Params& params) {
    return std::visit(
        [&](const auto& d) -> std::size_t {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, Constant>) {
            return emit({Kind::Const, 0, 0, d.value});
          } else if constexpr (std::is_same_v<D, Identifier>) {
            for (std::size_t i = 0; i < vars.size(); ++i)
              if (vars[i] == d.name) return emit({Kind::Var, i});
            const auto it = params.find(d.name);
            if (it == params.end()) throw UnboundIdentifier(d.name);
            return emit({Kind::Const, 0, 0, it->second});
          } else if constexpr (std::is_same_v<D, Negate>) {
            const std::size_t a = compile(*d.operand, vars, params);
            if (is_const(a)) return fold(a, -ops_[a].c);
            return emit({Kind::Neg, a});
          } else if constexpr (std::is_same_v<D, Binary>) {
            const std::size_t a = compile(*d.lhs, vars, params);
            const std::size_t b = compile(*d.rhs, vars, params);
            if (is_const(a) && is_const(b)) {
              const double x = ops_[a].c;
              const double y = ops_[b].c;
              ops_.pop_back();
              return fold(a, fold_binary(d.op, x, y));
            }
            switch (d.op) {
              case BinaryOp::Add: return emit({Kind::Add, a, b});
              case BinaryOp::Sub: return emit({Kind::Sub, a, b});
              case BinaryOp::Mul: return emit({Kind::Mul, a, b});
              case BinaryOp::Div: return emit({Kind::Div, a, b});
              case BinaryOp::Pow:
                if (is_const(b)) {
                  const double p = ops_[b].c;
                  ops_.pop_back();
                  return emit({Kind::PowConst, a, 0, p});
                }
                return emit({Kind::Pow, a, b});
            }
            return a;
          } else {
            const std::size_t a = compile(*d.arg, vars, params);
            if (is_const(a)) return fold(a, detail::apply(d.fn, ops_[a].c));
            return emit({Kind::Call, a, 0, 0.0, d.fn});
          }
        },
        n.data);
  }

  static double fold_binary(BinaryOp op, double x, double y) {
    switch (op) {
      case BinaryOp::Add: return x + y;
      case BinaryOp::Sub: return x - y;
      case BinaryOp::Mul: return x * y;
      case BinaryOp::Div: return detail::divide(x, y);
      case BinaryOp::Pow: return detail::pow_const(x, y);
    }
    return 0.0;
  }

  bool is_const(std::size_t i) const { return ops_[i].kind == Kind::Const; }

  std::size_t fold(std::size_t i, double v) {
    ops_.resize(i + 1);
    ops_[i] = Op{Kind::Const, 0, 0, v};
    return i;
  }

  std::size_t emit(Op op) {
    ops_.push_back(op);
    return ops_.size() - 1;
  }

  std::vector<Op> ops_;
  std::size_t arity_ = 0;
};

/// Evaluates with named jet bindings; all bound jets must share one seed dimension.
template <class T = double>
Taylor2<T> eval_jet(const ExprAst& ast, const std::map<std::string, Taylor2<T>, std::less<>>& bindings,
                    const Params& params) {
  std::vector<std::string> names;
  std::vector<Taylor2<T>> values;
  for (const auto& [k, v] : bindings) {
    if (!values.empty() && v.seeds() != values.front().seeds())
      throw std::invalid_argument("eval_jet: bound jets differ in seed dimension");
    names.push_back(k);
    values.push_back(v);
  }
  const BoundExpr bound(ast, names, params);
  return bound.eval<Taylor2<T>>(values);
}

/// Evaluates with named real bindings.
inline double eval_value(const ExprAst& ast, const std::map<std::string, double, std::less<>>& bindings,
                         const Params& params) {
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& [k, v] : bindings) {
    names.push_back(k);
    values.push_back(v);
  }
  return BoundExpr(ast, names, params).eval<double>(values);
}

}  // namespace kccstab
