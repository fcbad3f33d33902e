#include "peakon/polynomial.hpp"

#include <cmath>
#include <unordered_map>

namespace peakon {

mpq_class exact_rational(double v) {
  if (!std::isfinite(v)) throw ExprError("non-finite constant has no rational value");
  // A double that is the correctly rounded value of p/q with a small q stands
  // for p/q (so c/3 * 3 normalizes to c); anything else is taken at face value.
  if (v != std::floor(v) && std::abs(v) < 1e9) {
    double x = std::abs(v);
    long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    for (int it = 0; it < 40; ++it) {
      const double a = std::floor(x);
      const long long ai = static_cast<long long>(a);
      const long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
      if (k2 > 1000000) break;
      h0 = h1; h1 = h2; k0 = k1; k1 = k2;
      if (static_cast<double>(h1) / static_cast<double>(k1) == std::abs(v)) {
        mpq_class q(static_cast<long>(h1), static_cast<long>(k1));
        q.canonicalize();
        return v < 0 ? mpq_class(-q) : q;
      }
      const double frac = x - a;
      if (frac == 0.0) break;
      x = 1.0 / frac;
    }
  }
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), v);
  return q;
}

Polynomial Polynomial::constant(const mpq_class& c) {
  Polynomial p;
  p.add_term({}, c);
  return p;
}

Polynomial Polynomial::variable(JetVar v) {
  Polynomial p;
  p.add_term({{v, 1}}, mpq_class(1));
  return p;
}

std::optional<mpq_class> Polynomial::constant_value() const {
  if (terms_.empty()) return mpq_class(0);
  if (terms_.size() == 1 && terms_.begin()->first.empty()) return terms_.begin()->second;
  return std::nullopt;
}

void Polynomial::add_term(const Monomial& mono, const mpq_class& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.emplace(mono, c);
  if (inserted) return;
  it->second += c;
  if (it->second == 0) terms_.erase(it);
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [mono, c] : o.terms_) r.add_term(mono, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [mono, c] : o.terms_) r.add_term(mono, -c);
  return r;
}

Polynomial Polynomial::operator-() const { return scaled(mpq_class(-1)); }

Polynomial Polynomial::scaled(const mpq_class& c) const {
  Polynomial r;
  if (c == 0) return r;
  for (const auto& [mono, k] : terms_) r.terms_.emplace(mono, k * c);
  return r;
}

namespace {

Polynomial::Monomial multiply(const Polynomial::Monomial& a, const Polynomial::Monomial& b) {
  Polynomial::Monomial out;
  out.reserve(a.size() + b.size());
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() || j != b.end()) {
    if (j == b.end() || (i != a.end() && i->first < j->first)) {
      out.push_back(*i++);
    } else if (i == a.end() || j->first < i->first) {
      out.push_back(*j++);
    } else {
      out.emplace_back(i->first, i->second + j->second);
      ++i;
      ++j;
    }
  }
  return out;
}

class Converter {
 public:
  Converter(const ParamMap& params, std::size_t max_terms) : params_(params), max_terms_(max_terms) {}

  std::optional<Polynomial> operator()(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    auto p = convert(e);
    if (p && p->term_count() > max_terms_) p.reset();
    memo_.emplace(e.id(), p);
    return p;
  }

 private:
  std::optional<Polynomial> convert(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
      case NodeKind::Const: return Polynomial::constant(exact_rational(n.value));
      case NodeKind::Param: {
        auto it = params_.find(n.name);
        if (it == params_.end()) return std::nullopt;
        return Polynomial::constant(exact_rational(it->second));
      }
      case NodeKind::Var: return Polynomial::variable(n.var);
      case NodeKind::Add:
      case NodeKind::Sub:
      case NodeKind::Mul: {
        auto a = (*this)(e.lhs());
        if (!a) return std::nullopt;
        auto b = (*this)(e.rhs());
        if (!b) return std::nullopt;
        if (n.kind == NodeKind::Add) return *a + *b;
        if (n.kind == NodeKind::Sub) return *a - *b;
        if (a->term_count() * b->term_count() > max_terms_ * 4) return std::nullopt;
        return *a * *b;
      }
      case NodeKind::Div: {
        auto b = (*this)(e.rhs());
        if (!b) return std::nullopt;
        auto c = b->constant_value();
        if (!c || *c == 0) return std::nullopt;
        auto a = (*this)(e.lhs());
        if (!a) return std::nullopt;
        return a->scaled(1 / *c);
      }
      case NodeKind::Neg: {
        auto a = (*this)(e.lhs());
        if (!a) return std::nullopt;
        return -*a;
      }
      case NodeKind::Pow: {
        if (!n.exponent.is_integer() || n.exponent.num < 0 || n.exponent.num > 32)
          return std::nullopt;
        auto a = (*this)(e.lhs());
        if (!a) return std::nullopt;
        Polynomial r = Polynomial::constant(mpq_class(1));
        for (long k = 0; k < n.exponent.num; ++k) {
          r = r * *a;
          if (r.term_count() > max_terms_) return std::nullopt;
        }
        return r;
      }
      case NodeKind::Func: return std::nullopt;
    }
    return std::nullopt;
  }

  const ParamMap& params_;
  std::size_t max_terms_;
  std::unordered_map<const Node*, std::optional<Polynomial>> memo_;
};

}  // namespace

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) r.add_term(multiply(ma, mb), ca * cb);
  return r;
}

std::optional<Polynomial> to_polynomial(const Expr& e, const ParamMap& params, std::size_t max_terms) {
  Converter conv(params, max_terms);
  return conv(e);
}

}  // namespace peakon
