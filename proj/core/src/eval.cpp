#include "peakon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace peakon {

double rational_pow(double base, long num, long den) {
  if (den == 1) return std::pow(base, static_cast<double>(num));
  const double e = static_cast<double>(num) / static_cast<double>(den);
  if (base >= 0.0) return std::pow(base, e);
  if (den % 2 == 0) return std::nan("");
  const double mag = std::pow(-base, e);
  return (num % 2 == 0) ? mag : -mag;
}

double apply_fn(Fn fn, double x) {
  switch (fn) {
    case Fn::Exp: return std::exp(x);
    case Fn::Ln: return x > 0.0 ? std::log(x) : std::nan("");
    case Fn::Sqrt: return x >= 0.0 ? std::sqrt(x) : std::nan("");
    case Fn::Sin: return std::sin(x);
    case Fn::Cos: return std::cos(x);
    case Fn::Arctanh: return std::abs(x) < 1.0 ? std::atanh(x) : std::nan("");
  }
  return std::nan("");
}

namespace {

double eval_node(const Node& n, const JetPoint& p, std::unordered_map<const Node*, double>& memo) {
  if (auto it = memo.find(&n); it != memo.end()) return it->second;
  double r = 0.0;
  switch (n.kind) {
    case NodeKind::Const: r = n.value; break;
    case NodeKind::Param: {
      auto it = p.params.find(n.name);
      if (it == p.params.end()) throw ExprError("unbound parameter '" + n.name + "'");
      r = it->second;
      break;
    }
    case NodeKind::Var: {
      auto it = p.vars.find(n.var);
      if (it == p.vars.end()) throw ExprError("unbound jet variable '" + n.var.name() + "'");
      r = it->second;
      break;
    }
    case NodeKind::Add: r = eval_node(*n.a, p, memo) + eval_node(*n.b, p, memo); break;
    case NodeKind::Sub: r = eval_node(*n.a, p, memo) - eval_node(*n.b, p, memo); break;
    case NodeKind::Mul: r = eval_node(*n.a, p, memo) * eval_node(*n.b, p, memo); break;
    case NodeKind::Div: r = eval_node(*n.a, p, memo) / eval_node(*n.b, p, memo); break;
    case NodeKind::Neg: r = -eval_node(*n.a, p, memo); break;
    case NodeKind::Pow:
      r = rational_pow(eval_node(*n.a, p, memo), n.exponent.num, n.exponent.den);
      break;
    case NodeKind::Func: r = apply_fn(n.fn, eval_node(*n.a, p, memo)); break;
  }
  memo.emplace(&n, r);
  return r;
}

}  // namespace

double evaluate(const Expr& e, const JetPoint& point) {
  std::unordered_map<const Node*, double> memo;
  return eval_node(e.node(), point, memo);
}

CompiledExpr::CompiledExpr(const Expr& e, const ParamMap& params, std::vector<JetVar> slots)
    : slots_(std::move(slots)) {
  if (slots_.empty()) {
    auto vs = variables(e);
    slots_.assign(vs.begin(), vs.end());
  }
  std::unordered_map<const Node*, int> reg_of;
  // Post-order emission; explicit stack keeps deep Euler-operator DAGs off
  // the call stack.
  std::vector<std::pair<const Node*, bool>> stack{{e.id(), false}};
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (reg_of.count(n)) continue;
    if (!expanded) {
      stack.emplace_back(n, true);
      if (n->b) stack.emplace_back(n->b.get(), false);
      if (n->a) stack.emplace_back(n->a.get(), false);
      continue;
    }
    Op op{n->kind, n->fn};
    switch (n->kind) {
      case NodeKind::Const: op.value = n->value; break;
      case NodeKind::Param: {
        auto it = params.find(n->name);
        if (it == params.end()) throw ExprError("unbound parameter '" + n->name + "'");
        op.kind = NodeKind::Const;
        op.value = it->second;
        break;
      }
      case NodeKind::Var: {
        auto it = std::find(slots_.begin(), slots_.end(), n->var);
        if (it == slots_.end()) throw ExprError("jet variable '" + n->var.name() + "' has no slot");
        op.slot = static_cast<int>(it - slots_.begin());
        break;
      }
      case NodeKind::Pow:
        op.num = n->exponent.num;
        op.den = n->exponent.den;
        break;
      default: break;
    }
    if (n->a) op.a = reg_of.at(n->a.get());
    if (n->b) op.b = reg_of.at(n->b.get());
    reg_of.emplace(n, static_cast<int>(tape_.size()));
    tape_.push_back(op);
  }
}

double CompiledExpr::run(std::span<const double> x, std::vector<double>& r) const {
  r.resize(tape_.size());
  for (std::size_t i = 0; i < tape_.size(); ++i) {
    const Op& op = tape_[i];
    switch (op.kind) {
      case NodeKind::Const: r[i] = op.value; break;
      case NodeKind::Var: r[i] = x[static_cast<std::size_t>(op.slot)]; break;
      case NodeKind::Add: r[i] = r[op.a] + r[op.b]; break;
      case NodeKind::Sub: r[i] = r[op.a] - r[op.b]; break;
      case NodeKind::Mul: r[i] = r[op.a] * r[op.b]; break;
      case NodeKind::Div: r[i] = r[op.a] / r[op.b]; break;
      case NodeKind::Neg: r[i] = -r[op.a]; break;
      case NodeKind::Pow: r[i] = rational_pow(r[op.a], op.num, op.den); break;
      case NodeKind::Func: r[i] = apply_fn(op.fn, r[op.a]); break;
      case NodeKind::Param: break;
    }
  }
  return r.back();
}

double CompiledExpr::operator()(std::span<const double> slot_values) const {
  thread_local std::vector<double> regs;
  return run(slot_values, regs);
}

double CompiledExpr::evaluate_with_scale(std::span<const double> slot_values, double& scale) const {
  thread_local std::vector<double> regs;
  thread_local std::vector<double> big;
  const double v = run(slot_values, regs);
  // big[i]: magnitude of the largest term in the formal expansion of node i,
  // with quotients, non-integer powers and functions taken as opaque factors.
  big.resize(tape_.size());
  for (std::size_t i = 0; i < tape_.size(); ++i) {
    const Op& op = tape_[i];
    switch (op.kind) {
      case NodeKind::Add:
      case NodeKind::Sub: big[i] = std::max(big[op.a], big[op.b]); break;
      case NodeKind::Mul: big[i] = big[op.a] * big[op.b]; break;
      case NodeKind::Div: big[i] = big[op.a] / std::abs(regs[op.b]); break;
      case NodeKind::Neg: big[i] = big[op.a]; break;
      case NodeKind::Pow:
        big[i] = (op.den == 1 && op.num > 0) ? std::pow(big[op.a], static_cast<double>(op.num))
                                             : std::abs(regs[i]);
        break;
      default: big[i] = std::abs(regs[i]); break;
    }
  }
  scale = big.back();
  return v;
}

}  // namespace peakon
