#pragma once

#include "peakon/expr.hpp"

namespace peakon {

/// Highest m-derivative order accepted at public entry points.
inline constexpr int kMaxMOrder = 4;

/// Partial derivative with respect to one jet coordinate (others held fixed).
Expr partial(const Expr& e, JetVar v);

/// Total x-derivative in canonical m-jet coordinates: D_x u_x = u - m,
/// D_x u_tx = u_t - m_t. Non-canonical input is canonicalized first.
Expr d_x(const Expr& e);

/// Total t-derivative, off-shell: D_t u = u_t, D_t u_x = u_tx, D_t m^(k) = m_t^(k).
/// Throws JetError if `e` already carries a t-derivative.
Expr d_t(const Expr& e);

/// Total x-derivative in the pure u-jet (u^(k) -> u^(k+1), u_t^(k) -> u_t^(k+1)).
Expr d_x_ujet(const Expr& e);

/// m^(k) -> u^(k) - u^(k+2) and m_t^(k) -> u_t^(k) - u_t^(k+2).
Expr to_u_jet(const Expr& e);

/// Eliminates u^(k), u_t^(k) for k >= 2 in favour of m-derivatives.
Expr to_m_jet(const Expr& e);

/// Spatial Euler operators, computed in the u-jet and returned in m-jet form.
Expr euler_u(const Expr& e);
Expr euler_ut(const Expr& e);

/// True if every variable is a canonical m-jet coordinate within the order cap.
bool is_canonical(const Expr& e);

class JetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace peakon
