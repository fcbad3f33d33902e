#include "peakon/jet.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

namespace peakon {

namespace {

using VarRule = std::function<Expr(JetVar)>;

// Chain-rule derivation memoized over the DAG; `rule` gives the derivative of
// each coordinate.
class Deriver {
 public:
  explicit Deriver(VarRule rule) : rule_(std::move(rule)) {}

  Expr operator()(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr d = derive(e);
    memo_.emplace(e.id(), d);
    return d;
  }

 private:
  Expr derive(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
      case NodeKind::Const:
      case NodeKind::Param: return Expr::constant(0.0);
      case NodeKind::Var: return rule_(n.var);
      case NodeKind::Add: return (*this)(e.lhs()) + (*this)(e.rhs());
      case NodeKind::Sub: return (*this)(e.lhs()) - (*this)(e.rhs());
      case NodeKind::Neg: return -(*this)(e.lhs());
      case NodeKind::Mul: {
        Expr a = e.lhs(), b = e.rhs();
        return (*this)(a) * b + a * (*this)(b);
      }
      case NodeKind::Div: {
        Expr a = e.lhs(), b = e.rhs();
        Expr da = (*this)(a), db = (*this)(b);
        if (db.is_constant(0.0)) return da / b;
        return da / b - a * db / pow(b, 2);
      }
      case NodeKind::Pow: {
        Expr a = e.lhs();
        Expr da = (*this)(a);
        if (da.is_constant(0.0)) return da;
        const Rational r = n.exponent;
        return Expr::constant(r.value()) * pow(a, r - 1) * da;
      }
      case NodeKind::Func: {
        Expr a = e.lhs();
        Expr da = (*this)(a);
        if (da.is_constant(0.0)) return da;
        switch (n.fn) {
          case Fn::Exp: return e * da;
          case Fn::Ln: return da / a;
          case Fn::Sqrt: return da / (2.0 * e);
          case Fn::Sin: return cos(a) * da;
          case Fn::Cos: return -(sin(a) * da);
          case Fn::Arctanh: return da / (1.0 - pow(a, 2));
        }
      }
    }
    return Expr::constant(0.0);
  }

  VarRule rule_;
  std::unordered_map<const Node*, Expr> memo_;
};

Expr zero() { return Expr::constant(0.0); }
Expr one() { return Expr::constant(1.0); }

int max_order(const Expr& e, JetBase base) {
  int order = -1;
  for (const JetVar& v : variables(e))
    if (v.base == base) order = std::max(order, v.xorder);
  return order;
}

Expr euler(const Expr& e, JetBase base) {
  const Expr uj = to_u_jet(e);
  const int n = max_order(uj, base);
  if (n < 0) return zero();
  // Horner form of sum_k (-D_x)^k d/dv^(k): acc <- d_k - D_x acc.
  Expr acc = partial(uj, {base, n});
  for (int k = n - 1; k >= 0; --k) acc = partial(uj, {base, k}) - d_x_ujet(acc);
  return to_m_jet(acc);
}

}  // namespace

Expr partial(const Expr& e, JetVar v) {
  Deriver d([v](JetVar w) { return w == v ? one() : zero(); });
  return d(e);
}

Expr d_x_ujet(const Expr& e) {
  Deriver d([](JetVar w) -> Expr {
    switch (w.base) {
      case JetBase::X: return one();
      case JetBase::T: return zero();
      case JetBase::U:
      case JetBase::Ut: return Expr::var({w.base, w.xorder + 1});
      case JetBase::M:
      case JetBase::Mt: throw JetError("d_x_ujet: m-variable in u-jet expression");
    }
    return zero();
  });
  return d(e);
}

Expr d_x(const Expr& e) {
  const Expr c = is_canonical(e) ? e : to_m_jet(e);
  Deriver d([](JetVar w) -> Expr {
    switch (w.base) {
      case JetBase::X: return one();
      case JetBase::T: return zero();
      case JetBase::U: return w.xorder == 0 ? var_ux() : var_u() - var_m();
      case JetBase::Ut: return w.xorder == 0 ? var_utx() : var_ut() - var_mt();
      case JetBase::M:
      case JetBase::Mt: return Expr::var({w.base, w.xorder + 1});
    }
    return zero();
  });
  return d(c);
}

Expr d_t(const Expr& e) {
  const Expr c = is_canonical(e) ? e : to_m_jet(e);
  for (const JetVar& v : variables(c))
    if (v.has_t_derivative()) throw JetError("d_t: expression already contains " + v.name());
  Deriver d([](JetVar w) -> Expr {
    switch (w.base) {
      case JetBase::X: return zero();
      case JetBase::T: return one();
      case JetBase::U: return Expr::var(JetVar::ut(w.xorder));
      case JetBase::M: return Expr::var(JetVar::mt(w.xorder));
      default: return zero();
    }
  });
  return d(c);
}

Expr to_u_jet(const Expr& e) {
  std::map<JetVar, Expr> rep;
  for (const JetVar& v : variables(e)) {
    if (v.base == JetBase::M)
      rep.emplace(v, Expr::var(JetVar::u(v.xorder)) - Expr::var(JetVar::u(v.xorder + 2)));
    else if (v.base == JetBase::Mt)
      rep.emplace(v, Expr::var(JetVar::ut(v.xorder)) - Expr::var(JetVar::ut(v.xorder + 2)));
  }
  return rep.empty() ? e : substitute(e, rep);
}

Expr to_m_jet(const Expr& e) {
  // u^(2n) = u - sum_{j<n} m^(2j),  u^(2n+1) = u_x - sum_{j<n} m^(2j+1).
  std::map<JetVar, Expr> rep;
  for (const JetVar& v : variables(e)) {
    if ((v.base != JetBase::U && v.base != JetBase::Ut) || v.xorder < 2) continue;
    const bool t = v.base == JetBase::Ut;
    const int parity = v.xorder % 2;
    Expr r = Expr::var(t ? JetVar::ut(parity) : JetVar::u(parity));
    for (int k = parity; k < v.xorder; k += 2)
      r = r - Expr::var(t ? JetVar::mt(k) : JetVar::m(k));
    rep.emplace(v, r);
  }
  return rep.empty() ? e : substitute(e, rep);
}

Expr euler_u(const Expr& e) { return euler(e, JetBase::U); }
Expr euler_ut(const Expr& e) { return euler(e, JetBase::Ut); }

bool is_canonical(const Expr& e) {
  for (const JetVar& v : variables(e)) {
    switch (v.base) {
      case JetBase::U:
      case JetBase::Ut:
        if (v.xorder > 1) return false;
        break;
      case JetBase::M:
      case JetBase::Mt:
        if (v.xorder > kMaxMOrder) return false;
        break;
      default: break;
    }
  }
  return true;
}

}  // namespace peakon
