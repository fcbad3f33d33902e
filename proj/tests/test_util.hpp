#pragma once

#include <random>

#include "peakon/expr.hpp"

namespace testutil {

inline peakon::Expr u_deriv(int k) { return peakon::Expr::var(peakon::JetVar::u(k)); }

/// Random expression in u, u_x, m, m_x that stays finite on the sampling box.
inline peakon::Expr random_mjet_expr(std::mt19937_64& rng, int depth, bool functions = false) {
  using namespace peakon;
  std::uniform_int_distribution<int> pick(0, functions ? 8 : 6);
  std::uniform_int_distribution<int> leaf(0, 4);
  std::uniform_int_distribution<int> small(1, 5);
  if (depth <= 0) {
    switch (leaf(rng)) {
      case 0: return var_u();
      case 1: return var_ux();
      case 2: return var_m();
      case 3: return var_m(1);
      default: return Expr::constant(small(rng));
    }
  }
  auto sub = [&] { return random_mjet_expr(rng, depth - 1, functions); };
  switch (pick(rng)) {
    case 0: return sub() + sub();
    case 1: return sub() - sub();
    case 2:
    case 3: return sub() * sub();
    case 4: return pow(sub(), 2);
    case 5: return sub() / var_u();
    case 6: return -sub();
    case 7: return sin(sub());
    default: return exp(Expr::constant(0.1) * var_ux()) * sub();
  }
}

/// Alias used by the parser tests.
inline peakon::Expr random_expr(std::mt19937_64& rng, int depth, bool functions) {
  return random_mjet_expr(rng, depth, functions);
}

/// Random polynomial in (x, u, u_x) of total degree <= max_degree with
/// integer coefficients in [-3, 3].
inline peakon::Expr random_polynomial_xuux(std::mt19937_64& rng, int max_degree) {
  using namespace peakon;
  std::uniform_int_distribution<int> coef(-3, 3);
  Expr out = Expr::constant(0.0);
  for (int a = 0; a <= max_degree; ++a)
    for (int b = 0; a + b <= max_degree; ++b)
      for (int c = 0; a + b + c <= max_degree; ++c) {
        const int k = coef(rng);
        if (k == 0) continue;
        out = out + Expr::constant(k) * pow(var_x(), a) * pow(var_u(), b) * pow(var_ux(), c);
      }
  return out;
}

}  // namespace testutil
