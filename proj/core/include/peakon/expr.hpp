#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace peakon {

/// Jet-space coordinate families. `U`/`Ut` carry x-derivatives of u and u_t,
/// `M`/`Mt` those of m = u - u_xx and m_t.
enum class JetBase : std::uint8_t { X, T, U, M, Ut, Mt };

struct JetVar {
  JetBase base = JetBase::U;
  int xorder = 0;

  static constexpr JetVar x() { return {JetBase::X, 0}; }
  static constexpr JetVar t() { return {JetBase::T, 0}; }
  static constexpr JetVar u(int k = 0) { return {JetBase::U, k}; }
  static constexpr JetVar m(int k = 0) { return {JetBase::M, k}; }
  static constexpr JetVar ut(int k = 0) { return {JetBase::Ut, k}; }
  static constexpr JetVar mt(int k = 0) { return {JetBase::Mt, k}; }

  bool has_t_derivative() const { return base == JetBase::Ut || base == JetBase::Mt; }

  /// Grammar identifier (`ux`, `mtx`, ...). Orders beyond the grammar still
  /// print as e.g. `uxxx` for diagnostics.
  std::string name() const;

  auto operator<=>(const JetVar&) const = default;
};

/// Rational exponent p/q with q > 0, stored reduced.
struct Rational {
  long num = 1;
  long den = 1;

  Rational() = default;
  Rational(long n, long d = 1);

  bool is_integer() const { return den == 1; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Rational operator-(long k) const { return Rational(num - k * den, den); }
  bool operator==(const Rational&) const = default;
};

enum class Fn : std::uint8_t { Exp, Ln, Sqrt, Sin, Cos, Arctanh };

const char* fn_name(Fn fn);

enum class NodeKind : std::uint8_t { Const, Param, Var, Add, Sub, Mul, Div, Neg, Pow, Func };

class Expr;

struct Node {
  NodeKind kind = NodeKind::Const;
  double value = 0.0;  // Const
  std::string name;    // Param
  JetVar var;          // Var
  Rational exponent;   // Pow
  Fn fn = Fn::Exp;     // Func
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

/// Immutable expression DAG over jet variables and named parameters.
/// Subtrees are shared; all transformations return new handles.
class Expr {
 public:
  Expr();  // the constant 0
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static Expr constant(double v);
  static Expr param(std::string name);
  static Expr var(JetVar v);
  static Expr pow(const Expr& base, Rational exponent);
  static Expr apply(Fn fn, const Expr& arg);

  const Node& node() const { return *node_; }
  const Node* id() const { return node_.get(); }
  NodeKind kind() const { return node_->kind; }
  Expr lhs() const { return Expr(node_->a); }
  Expr rhs() const { return Expr(node_->b); }

  bool is_constant() const { return kind() == NodeKind::Const; }
  bool is_constant(double v) const { return is_constant() && node_->value == v; }

  /// Same shared node (cheap identity, not semantic equality).
  bool same(const Expr& o) const { return node_ == o.node_; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  std::shared_ptr<const Node> node_;
};

inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
inline Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

Expr pow(const Expr& base, long exponent);
Expr pow(const Expr& base, Rational exponent);
Expr exp(const Expr& e);
Expr ln(const Expr& e);
Expr sqrt(const Expr& e);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr arctanh(const Expr& e);

// Shorthands for the canonical coordinates.
Expr var_x();
Expr var_t();
Expr var_u();
Expr var_ux();
Expr var_m(int k = 0);
Expr var_ut();
Expr var_utx();
Expr var_mt(int k = 0);

/// Printed in the input grammar; `parse(to_string(e))` evaluates identically.
std::string to_string(const Expr& e);

std::set<JetVar> variables(const Expr& e);
std::set<std::string> parameters(const Expr& e);

/// Number of distinct DAG nodes.
std::size_t node_count(const Expr& e);

/// Top-level additive terms with their signs folded in (a - (b + c) -> a, -b, -c).
std::vector<Expr> additive_terms(const Expr& e);

/// Replace variables by expressions (memoized over the DAG).
Expr substitute(const Expr& e, const std::map<JetVar, Expr>& replacements);

/// Replace named parameters by constants.
Expr bind_parameters(const Expr& e, const std::map<std::string, double>& values);

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peakon
