#include "peakon/expr.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

namespace peakon {

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

// Integers below 2^50 add and multiply exactly in double; other constants are
// left as nodes so the exact polynomial path sees the literals unrounded.
bool small_integer(double v) { return std::abs(v) < 0x1p50 && std::trunc(v) == v; }

}  // namespace

std::string JetVar::name() const {
  std::string x_part(static_cast<std::size_t>(xorder), 'x');
  switch (base) {
    case JetBase::X: return "x";
    case JetBase::T: return "t";
    case JetBase::U: return "u" + x_part;
    case JetBase::M: return "m" + x_part;
    case JetBase::Ut: return "ut" + x_part;
    case JetBase::Mt: return "mt" + x_part;
  }
  return "?";
}

Rational::Rational(long n, long d) : num(n), den(d) {
  if (den == 0) throw ExprError("rational exponent with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

const char* fn_name(Fn fn) {
  switch (fn) {
    case Fn::Exp: return "exp";
    case Fn::Ln: return "ln";
    case Fn::Sqrt: return "sqrt";
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Arctanh: return "arctanh";
  }
  return "?";
}

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double v) {
  Node n;
  n.kind = NodeKind::Const;
  n.value = v;
  return Expr(make_node(std::move(n)));
}

Expr Expr::param(std::string name) {
  Node n;
  n.kind = NodeKind::Param;
  n.name = std::move(name);
  return Expr(make_node(std::move(n)));
}

Expr Expr::var(JetVar v) {
  Node n;
  n.kind = NodeKind::Var;
  n.var = v;
  return Expr(make_node(std::move(n)));
}

Expr Expr::pow(const Expr& base, Rational exponent) {
  if (exponent.num == 0) return constant(1.0);
  if (exponent == Rational(1)) return base;
  if (base.is_constant(0.0) && exponent.num > 0) return base;
  if (base.is_constant(1.0)) return base;
  if (base.is_constant() && exponent.is_integer() && exponent.num > 0 && exponent.num <= 8 &&
      small_integer(base.node().value)) {
    double v = std::pow(base.node().value, static_cast<double>(exponent.num));
    if (small_integer(v)) return constant(v);
  }
  Node n;
  n.kind = NodeKind::Pow;
  n.exponent = exponent;
  n.a = base.node_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::apply(Fn fn, const Expr& arg) {
  Node n;
  n.kind = NodeKind::Func;
  n.fn = fn;
  n.a = arg.node_;
  return Expr(make_node(std::move(n)));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (a.is_constant() && b.is_constant() && small_integer(a.node().value) &&
      small_integer(b.node().value))
    return Expr::constant(a.node().value + b.node().value);
  Node n;
  n.kind = NodeKind::Add;
  n.a = a.node_;
  n.b = b.node_;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  if (a.same(b)) return Expr::constant(0.0);
  if (a.is_constant() && b.is_constant() && small_integer(a.node().value) &&
      small_integer(b.node().value))
    return Expr::constant(a.node().value - b.node().value);
  Node n;
  n.kind = NodeKind::Sub;
  n.a = a.node_;
  n.b = b.node_;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  if (a.is_constant() && b.is_constant() && small_integer(a.node().value) &&
      small_integer(b.node().value)) {
    double v = a.node().value * b.node().value;
    if (small_integer(v)) return Expr::constant(v);
  }
  Node n;
  n.kind = NodeKind::Mul;
  n.a = a.node_;
  n.b = b.node_;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) throw ExprError("division by the constant 0");
  if (a.is_constant(0.0)) return a;
  if (b.is_constant(1.0)) return a;
  if (b.is_constant(-1.0)) return -a;
  if (a.same(b)) return Expr::constant(1.0);
  Node n;
  n.kind = NodeKind::Div;
  n.a = a.node_;
  n.b = b.node_;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.node().value);
  if (a.kind() == NodeKind::Neg) return a.lhs();
  Node n;
  n.kind = NodeKind::Neg;
  n.a = a.node_;
  return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr pow(const Expr& base, long exponent) { return Expr::pow(base, Rational(exponent)); }
Expr pow(const Expr& base, Rational exponent) { return Expr::pow(base, exponent); }
Expr exp(const Expr& e) { return Expr::apply(Fn::Exp, e); }
Expr ln(const Expr& e) { return Expr::apply(Fn::Ln, e); }
Expr sqrt(const Expr& e) { return Expr::apply(Fn::Sqrt, e); }
Expr sin(const Expr& e) { return Expr::apply(Fn::Sin, e); }
Expr cos(const Expr& e) { return Expr::apply(Fn::Cos, e); }
Expr arctanh(const Expr& e) { return Expr::apply(Fn::Arctanh, e); }

Expr var_x() { return Expr::var(JetVar::x()); }
Expr var_t() { return Expr::var(JetVar::t()); }
Expr var_u() { return Expr::var(JetVar::u()); }
Expr var_ux() { return Expr::var(JetVar::u(1)); }
Expr var_m(int k) { return Expr::var(JetVar::m(k)); }
Expr var_ut() { return Expr::var(JetVar::ut()); }
Expr var_utx() { return Expr::var(JetVar::ut(1)); }
Expr var_mt(int k) { return Expr::var(JetVar::mt(k)); }

namespace {

// Precedence: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atom.
int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Const: return n.value < 0 || std::signbit(n.value) ? 3 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw ExprError("cannot print non-finite constant");
  return fmt::format("{}", v);
}

std::string format_exponent(const Rational& r) {
  if (r.is_integer()) return fmt::format("{}", r.num);
  return fmt::format("({}/{})", r.num, r.den);
}

void print(const Node& n, int min_prec, std::string& out) {
  const bool wrap = precedence(n) < min_prec;
  if (wrap) out += '(';
  switch (n.kind) {
    case NodeKind::Const: out += format_number(n.value); break;
    case NodeKind::Param: out += n.name; break;
    case NodeKind::Var: out += n.var.name(); break;
    case NodeKind::Add:
      print(*n.a, 1, out);
      out += " + ";
      print(*n.b, 1, out);
      break;
    case NodeKind::Sub:
      print(*n.a, 1, out);
      out += " - ";
      print(*n.b, 2, out);
      break;
    case NodeKind::Mul:
      print(*n.a, 2, out);
      out += '*';
      print(*n.b, 3, out);
      break;
    case NodeKind::Div:
      print(*n.a, 2, out);
      out += '/';
      print(*n.b, 4, out);
      break;
    case NodeKind::Neg:
      out += '-';
      print(*n.a, 3, out);
      break;
    case NodeKind::Pow:
      print(*n.a, 5, out);
      out += '^';
      out += format_exponent(n.exponent);
      break;
    case NodeKind::Func:
      out += fn_name(n.fn);
      out += '(';
      print(*n.a, 0, out);
      out += ')';
      break;
  }
  if (wrap) out += ')';
}

template <typename Visit>
void walk(const Node* root, Visit&& visit) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    visit(*n);
    if (n->a) stack.push_back(n->a.get());
    if (n->b) stack.push_back(n->b.get());
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e.node(), 0, out);
  return out;
}

std::set<JetVar> variables(const Expr& e) {
  std::set<JetVar> out;
  walk(e.id(), [&](const Node& n) {
    if (n.kind == NodeKind::Var) out.insert(n.var);
  });
  return out;
}

std::set<std::string> parameters(const Expr& e) {
  std::set<std::string> out;
  walk(e.id(), [&](const Node& n) {
    if (n.kind == NodeKind::Param) out.insert(n.name);
  });
  return out;
}

std::size_t node_count(const Expr& e) {
  std::size_t count = 0;
  walk(e.id(), [&](const Node&) { ++count; });
  return count;
}

namespace {

void collect_terms(const Expr& e, bool negate, std::vector<Expr>& out) {
  switch (e.kind()) {
    case NodeKind::Add:
      collect_terms(e.lhs(), negate, out);
      collect_terms(e.rhs(), negate, out);
      return;
    case NodeKind::Sub:
      collect_terms(e.lhs(), negate, out);
      collect_terms(e.rhs(), !negate, out);
      return;
    case NodeKind::Neg: collect_terms(e.lhs(), !negate, out); return;
    default: out.push_back(negate ? -e : e);
  }
}

class Rewriter {
 public:
  template <typename Leaf>
  Expr run(const Expr& e, Leaf&& leaf) {
    auto it = memo_.find(e.id());
    if (it != memo_.end()) return it->second;
    Expr result = rebuild(e, leaf);
    memo_.emplace(e.id(), result);
    return result;
  }

 private:
  template <typename Leaf>
  Expr rebuild(const Expr& e, Leaf& leaf) {
    const Node& n = e.node();
    switch (n.kind) {
      case NodeKind::Const: return e;
      case NodeKind::Param:
      case NodeKind::Var: return leaf(e);
      case NodeKind::Add: return run(e.lhs(), leaf) + run(e.rhs(), leaf);
      case NodeKind::Sub: return run(e.lhs(), leaf) - run(e.rhs(), leaf);
      case NodeKind::Mul: return run(e.lhs(), leaf) * run(e.rhs(), leaf);
      case NodeKind::Div: return run(e.lhs(), leaf) / run(e.rhs(), leaf);
      case NodeKind::Neg: return -run(e.lhs(), leaf);
      case NodeKind::Pow: return Expr::pow(run(e.lhs(), leaf), n.exponent);
      case NodeKind::Func: return Expr::apply(n.fn, run(e.lhs(), leaf));
    }
    return e;
  }

  std::unordered_map<const Node*, Expr> memo_;
};

}  // namespace

std::vector<Expr> additive_terms(const Expr& e) {
  std::vector<Expr> out;
  collect_terms(e, false, out);
  return out;
}

Expr substitute(const Expr& e, const std::map<JetVar, Expr>& replacements) {
  Rewriter rw;
  return rw.run(e, [&](const Expr& leaf) {
    if (leaf.kind() != NodeKind::Var) return leaf;
    auto it = replacements.find(leaf.node().var);
    return it == replacements.end() ? leaf : it->second;
  });
}

Expr bind_parameters(const Expr& e, const std::map<std::string, double>& values) {
  Rewriter rw;
  return rw.run(e, [&](const Expr& leaf) {
    if (leaf.kind() != NodeKind::Param) return leaf;
    auto it = values.find(leaf.node().name);
    return it == values.end() ? leaf : Expr::constant(it->second);
  });
}

}  // namespace peakon
