#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "peakon/expr.hpp"

namespace peakon {

using ParamMap = std::map<std::string, double>;

/// Numeric assignment to jet variables and parameters.
struct JetPoint {
  std::map<JetVar, double> vars;
  ParamMap params;

  double& operator[](JetVar v) { return vars[v]; }
};

/// Evaluate by tree walk; throws ExprError if a variable or parameter is
/// unbound. Non-finite results are returned, not thrown.
double evaluate(const Expr& e, const JetPoint& point);

/// Flattened evaluation tape for repeated evaluation of one expression.
/// Parameters are bound at compile time; variables are read from a slot
/// vector in the order given by `slots()`.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, const ParamMap& params, std::vector<JetVar> slots = {});

  const std::vector<JetVar>& slots() const { return slots_; }

  double operator()(std::span<const double> slot_values) const;

  /// Evaluate and also report the magnitude of the largest additive term of
  /// the expression once products of sums are multiplied out.
  double evaluate_with_scale(std::span<const double> slot_values, double& scale) const;

  std::size_t size() const { return tape_.size(); }

 private:
  struct Op {
    NodeKind kind;
    Fn fn;
    int a = -1;
    int b = -1;
    double value = 0.0;
    long num = 1;
    long den = 1;
    int slot = -1;
  };

  double run(std::span<const double> slot_values, std::vector<double>& regs) const;

  std::vector<JetVar> slots_;
  std::vector<Op> tape_;
};

/// Real-valued power with rational exponent p/q; odd q admits negative bases.
double rational_pow(double base, long num, long den);

double apply_fn(Fn fn, double x);

}  // namespace peakon
