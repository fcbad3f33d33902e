#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "peakon/eval.hpp"
#include "peakon/expr.hpp"

namespace peakon {

/// Sparse multivariate polynomial over Q in jet variables. Monomials are
/// sorted (variable, exponent) lists with positive exponents.
class Polynomial {
 public:
  using Monomial = std::vector<std::pair<JetVar, int>>;

  Polynomial() = default;
  static Polynomial constant(const mpq_class& c);
  static Polynomial variable(JetVar v);

  bool is_zero() const { return terms_.empty(); }
  std::optional<mpq_class> constant_value() const;
  std::size_t term_count() const { return terms_.size(); }
  const std::map<Monomial, mpq_class>& terms() const { return terms_; }

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial scaled(const mpq_class& c) const;

 private:
  void add_term(const Monomial& mono, const mpq_class& c);
  std::map<Monomial, mpq_class> terms_;
};

/// Exact conversion; parameters are replaced by the exact rational value of
/// their double binding. Returns nullopt when the expression is not a
/// polynomial in the jet variables (functions, non-integer or negative
/// powers, division by non-constants) or when expansion exceeds `max_terms`.
std::optional<Polynomial> to_polynomial(const Expr& e, const ParamMap& params,
                                        std::size_t max_terms = 20000);

/// Exact rational value of a finite double.
mpq_class exact_rational(double v);

}  // namespace peakon
