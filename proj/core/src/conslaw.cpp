#include "peakon/conslaw.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

#include "peakon/jet.hpp"
#include "peakon/parse.hpp"

namespace peakon {

namespace {

const Expr kU = var_u();
const Expr kUx = var_ux();
const Expr kM = var_m();

Expr y_expr() { return pow(kU, 2) - pow(kUx, 2); }

// Seed offset for cross-validation draws, so they never reuse the fit points.
constexpr std::uint64_t kFreshSeedOffset = 0x9E3779B97F4A7C15ULL;

struct RationalApprox {
  long num;
  long den;
};

std::optional<RationalApprox> rational_approx(double x, long max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  const double target_tol = tol * std::max(1.0, std::abs(x));
  // Continued-fraction convergents.
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int i = 0; i < 40; ++i) {
    const double a_d = std::floor(r);
    if (std::abs(a_d) > 1e15) break;
    const long a = static_cast<long>(a_d);
    const long h2 = a * h1 + h0;
    const long k2 = a * k1 + k0;
    if (k2 > max_den) break;
    if (std::abs(static_cast<double>(h2) / static_cast<double>(k2) - x) <= target_tol)
      return RationalApprox{h2, k2};
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = r - a_d;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

// Prints as p/q when x is a small-denominator rational.
Expr rational_constant(double x) {
  if (auto q = rational_approx(x, 720, 1e-12)) {
    if (q->den == 1) return Expr::constant(static_cast<double>(q->num));
    return Expr::constant(static_cast<double>(q->num)) / Expr::constant(static_cast<double>(q->den));
  }
  return Expr::constant(x);
}

bool only_vars(const Expr& e, std::initializer_list<JetVar> allowed) {
  for (const JetVar& v : variables(e))
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) return false;
  return true;
}

// Evaluates e at (u, u_x) with compiled slots [u, u_x].
class UUxFunction {
 public:
  UUxFunction(const Expr& e, const ParamMap& params)
      : c_(e, params, {JetVar::u(), JetVar::u(1)}) {}
  double operator()(double u, double ux) const {
    const double in[2] = {u, ux};
    return c_(in);
  }

 private:
  CompiledExpr c_;
};

ZeroVerdict confirm(const Expr& e, const ParamMap& params, const SamplingPolicy& policy) {
  try {
    return is_zero(e, params, policy);
  } catch (const SingularSamplingError&) {
    return ZeroVerdict{};
  }
}

// Least-squares polynomial fit on (x_i, v_i); returns coefficients of the
// lowest degree <= max_degree that reproduces the data to rel_tol.
std::optional<std::vector<double>> fit_polynomial(const std::vector<double>& xs,
                                                  const std::vector<double>& vs, int max_degree,
                                                  double rel_tol) {
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Eigen::VectorXd v(n);
  double vmax = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = vs[static_cast<std::size_t>(i)];
    vmax = std::max(vmax, std::abs(v(i)));
  }
  for (int d = 0; d <= max_degree && d + 2 < n; ++d) {
    Eigen::MatrixXd V(n, d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = 1.0;
      for (int j = 0; j <= d; ++j) {
        V(i, j) = p;
        p *= xs[static_cast<std::size_t>(i)];
      }
    }
    Eigen::VectorXd c = V.colPivHouseholderQr().solve(v);
    const double res = (V * c - v).cwiseAbs().maxCoeff();
    if (res <= rel_tol * vmax) return std::vector<double>(c.data(), c.data() + c.size());
  }
  return std::nullopt;
}

Expr polynomial_expr(const std::vector<double>& coeffs, const Expr& var) {
  double cmax = 0.0;
  for (double c : coeffs) cmax = std::max(cmax, std::abs(c));
  Expr out = Expr::constant(0.0);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const double c = snap_rational(coeffs[j], 720, 1e-9);
    if (std::abs(c) <= 1e-12 * std::max(1.0, cmax)) continue;
    Expr term = rational_constant(c);
    if (j > 0) term = term * pow(var, static_cast<long>(j));
    out = out + term;
  }
  return out;
}

std::vector<double> antiderivative_coeffs(const std::vector<double>& c) {
  std::vector<double> out(c.size() + 1, 0.0);
  for (std::size_t j = 0; j < c.size(); ++j)
    out[j + 1] = snap_rational(c[j], 720, 1e-9) / static_cast<double>(j + 1);
  return out;
}

// c * base^p, or its antiderivative with respect to base.
Expr power_term(double c, RationalApprox p, const Expr& base) {
  return rational_constant(c) * Expr::pow(base, Rational(p.num, p.den));
}

Expr power_antiderivative(double c, RationalApprox p, const Expr& base) {
  if (p.num == -p.den) return rational_constant(0.5 * c) * ln(pow(base, 2));
  const Rational q(p.num + p.den, p.den);
  return rational_constant(c / q.value()) * Expr::pow(base, q);
}

std::vector<double> chebyshev_nodes(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double t = std::cos(M_PI * (i + 0.5) / n);
    out.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * t);
  }
  return out;
}

}  // namespace

double snap_rational(double x, long max_den, double tol) {
  if (auto q = rational_approx(x, max_den, tol))
    return static_cast<double>(q->num) / static_cast<double>(q->den);
  return x;
}

// ---------------------------------------------------------------------------
// EquationSpec

EquationSpec::EquationSpec(Expr f, Expr g, ParamMap params)
    : f_(std::move(f)), g_(std::move(g)), params_(std::move(params)) {
  if (!only_vars(f_, {JetVar::u(), JetVar::u(1)}))
    throw SpecError("f may depend only on u and ux, got " + to_string(f_));
  if (!only_vars(g_, {JetVar::u(), JetVar::u(1)}))
    throw SpecError("g may depend only on u and ux, got " + to_string(g_));
  for (const Expr* e : {&f_, &g_})
    for (const std::string& p : parameters(*e))
      if (!params_.count(p)) throw SpecError("parameter '" + p + "' has no value");
  for (const auto& [name, value] : params_)
    if (!std::isfinite(value)) throw SpecError("parameter '" + name + "' is not finite");
  if (variables(f_).empty() && variables(g_).empty())
    throw SpecError("f and g are both constant; the equation is linear");
}

EquationSpec EquationSpec::parse(std::string_view f, std::string_view g, ParamMap params) {
  std::set<std::string> declared;
  for (const auto& kv : params) declared.insert(kv.first);
  return EquationSpec(peakon::parse(f, declared), peakon::parse(g, declared), std::move(params));
}

EquationSpec EquationSpec::scaled(double lambda) const {
  return EquationSpec(lambda * f_, lambda * g_, params_);
}

Expr EquationSpec::upsilon() const { return var_mt() + f_ * kM + d_x(g_ * kM); }

// ---------------------------------------------------------------------------
// Verdicts

LawVerdict check_momentum(const EquationSpec& eq, const SamplingPolicy& policy) {
  LawVerdict v;
  v.residual = euler_u(eq.f() * kM);
  v.evidence = is_zero(v.residual, eq.params(), policy);
  return v;
}

LawVerdict check_h1(const EquationSpec& eq, const SamplingPolicy& policy) {
  LawVerdict v;
  v.residual = euler_u((kU * eq.f() - kUx * eq.g()) * kM);
  v.evidence = is_zero(v.residual, eq.params(), policy);
  return v;
}

const char* to_string(SetKind k) {
  switch (k) {
    case SetKind::Empty: return "empty";
    case SetKind::Point: return "point";
    case SetKind::Line: return "line";
    case SetKind::Plane: return "plane";
    case SetKind::Indeterminate: return "indeterminate";
  }
  return "?";
}

const char* to_string(Answer a) {
  switch (a) {
    case Answer::Yes: return "Y";
    case Answer::No: return "N";
    case Answer::Indeterminate: return "indeterminate";
  }
  return "?";
}

bool GradEnergySet::contains(double mu_q, double nu_q, double tol) const {
  switch (kind) {
    case SetKind::Plane: return true;
    case SetKind::Point:
      return std::abs(mu - mu_q) <= tol * std::max(1.0, std::abs(mu)) &&
             std::abs(nu - nu_q) <= tol * std::max(1.0, std::abs(nu));
    case SetKind::Line: {
      // Distance from the query to the line through (mu, nu).
      const double dm = mu_q - mu, dn = nu_q - nu;
      const double along = dm * direction[0] + dn * direction[1];
      const double perp = std::hypot(dm - along * direction[0], dn - along * direction[1]);
      return perp <= tol * std::max(1.0, std::hypot(mu_q, nu_q));
    }
    default: return false;
  }
}

bool GradEnergySet::has_weighted_h2() const {
  constexpr double tol = 1e-7;
  switch (kind) {
    case SetKind::Plane: return true;
    case SetKind::Point: return std::abs(nu) <= tol && std::abs(mu - 2.0) > tol;
    case SetKind::Line: {
      if (std::abs(direction[1]) <= tol) return std::abs(nu) <= tol;
      const double t = -nu / direction[1];
      return std::abs(mu + t * direction[0] - 2.0) > tol;
    }
    default: return false;
  }
}

GradEnergySet check_grad_energy(const EquationSpec& eq, const SamplingPolicy& policy) {
  GradEnergySet out;
  const Expr& f = eq.f();
  const Expr& g = eq.g();
  out.A = euler_u((kU * f - kUx * g) * kM);
  out.B = euler_u(f * kM);
  out.C = euler_u((f + 0.5 * d_x(g)) * pow(kM, 2));

  std::set<JetVar> var_set = variables(out.A);
  for (const Expr* e : {&out.B, &out.C}) {
    auto vs = variables(*e);
    var_set.insert(vs.begin(), vs.end());
  }
  const std::vector<JetVar> vars(var_set.begin(), var_set.end());
  const CompiledExpr ca(out.A, eq.params(), vars), cb(out.B, eq.params(), vars),
      cc(out.C, eq.params(), vars);

  std::mt19937_64 rng(policy.seed);
  std::vector<std::array<double, 3>> rows;
  const int max_attempts = policy.samples * policy.max_attempts_per_sample;
  std::vector<double> slot(vars.size());
  for (int attempt = 0; static_cast<int>(rows.size()) < policy.samples && attempt < max_attempts;
       ++attempt) {
    JetPoint p = draw_point(vars, policy, rng);
    for (std::size_t k = 0; k < vars.size(); ++k) slot[k] = p.vars.at(vars[k]);
    double sa = 0.0, sb = 0.0, sc = 0.0;
    const double a = ca.evaluate_with_scale(slot, sa);
    const double b = cb.evaluate_with_scale(slot, sb);
    const double c = cc.evaluate_with_scale(slot, sc);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(sa) ||
        !std::isfinite(sb) || !std::isfinite(sc))
      continue;
    const double s = std::max({1.0, sa, sb, sc, std::abs(a), std::abs(b), std::abs(c)});
    rows.push_back({a / s, b / s, c / s});
  }
  if (rows.empty()) throw SingularSamplingError("grad-energy residual non-finite at every sample");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd M(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    M(i, 0) = r[0];
    M(i, 1) = r[1];
    rhs(i) = -r[2];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Vector2d sv = svd.singularValues();
  out.singular_values = {sv(0), sv(1)};

  // Rows are normalized to magnitude <= 1, so an all-zero A, B shows as
  // sigma_max at roundoff level.
  const double zero_level = policy.tolerance * std::sqrt(static_cast<double>(n));
  int rank = 0;
  if (sv(0) > zero_level) rank = sv(1) > 1e-7 * sv(0) ? 2 : 1;
  if (rank >= 1) {
    const double ratio = sv(1) / sv(0);
    if (ratio > 1e-9 && ratio < 1e-5 && sv(1) > zero_level) {
      out.kind = SetKind::Indeterminate;
      out.note = fmt::format("rank ambiguous: sigma_min/sigma_max = {:.3g}", ratio);
      return out;
    }
  }

  const SamplingPolicy fresh = policy.with_seed(policy.seed + kFreshSeedOffset);
  auto residual_at = [&](double p, double nu) {
    return p * out.A + nu * out.B + out.C;
  };

  if (rank == 0) {
    out.residual_max = rhs.cwiseAbs().maxCoeff();
    if (out.residual_max > policy.tolerance) {
      out.kind = SetKind::Empty;
      return out;
    }
    out.kind = SetKind::Plane;
    out.mu = 2.0;
    out.nu = 0.0;
    ZeroVerdict va = confirm(out.A, eq.params(), fresh);
    ZeroVerdict vb = confirm(out.B, eq.params(), fresh);
    ZeroVerdict vc = confirm(out.C, eq.params(), fresh);
    out.cross_check = vc;
    if (!(va.zero() && vb.zero() && vc.zero())) {
      out.kind = SetKind::Indeterminate;
      out.note = "sampled system vanishes but cross-check found a nonzero coefficient";
    }
    return out;
  }

  // Truncated pseudo-inverse solution (minimal norm for rank 1).
  const Eigen::MatrixXd& U = svd.matrixU();
  const Eigen::MatrixXd& V = svd.matrixV();
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  for (int j = 0; j < rank; ++j) x += V.col(j) * (U.col(j).dot(rhs) / sv(j));
  out.residual_max = (M * x - rhs).cwiseAbs().maxCoeff();
  const double consistency_tol = policy.tolerance * std::max({1.0, std::abs(x(0)), std::abs(x(1))});
  if (out.residual_max > consistency_tol * 10.0) {
    out.kind = SetKind::Empty;
    out.mu = x(0) + 2.0;
    out.nu = x(1);
    return out;
  }

  double p = snap_rational(x(0), 720, 1e-8);
  double nu = snap_rational(x(1), 720, 1e-8);
  if (rank == 2) {
    out.kind = SetKind::Point;
    out.mu = p + 2.0;
    out.nu = nu;
    out.cross_check = confirm(residual_at(p, nu), eq.params(), fresh);
  } else {
    out.kind = SetKind::Line;
    Eigen::Vector2d d = V.col(1);
    if (d(0) < 0 || (d(0) == 0 && d(1) < 0)) d = -d;
    out.direction = {snap_rational(d(0), 720, 1e-8), snap_rational(d(1), 720, 1e-8)};
    const double dn = std::hypot(out.direction[0], out.direction[1]);
    out.direction = {out.direction[0] / dn, out.direction[1] / dn};
    out.mu = p + 2.0;
    out.nu = nu;
    ZeroVerdict v0 = confirm(residual_at(p, nu), eq.params(), fresh);
    ZeroVerdict v1 = confirm(residual_at(p + out.direction[0], nu + out.direction[1]), eq.params(),
                             fresh.with_seed(fresh.seed + 1));
    out.cross_check = v0.zero() ? v1 : v0;
  }
  if (!out.cross_check->zero()) {
    out.note = fmt::format("least-squares solution (mu={}, nu={}) failed the cross-check", out.mu,
                           out.nu);
    out.kind = SetKind::Indeterminate;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pole form and antiderivatives

std::optional<PoleSplit> split_pole_form(const Expr& k, const ParamMap& params,
                                         const SamplingPolicy& policy) {
  if (!only_vars(k, {JetVar::u(), JetVar::u(1)})) return std::nullopt;
  const UUxFunction kf(k, params);

  // u_x k1(y) is odd in u_x and k0 u / y is even, so k0 comes from the even
  // part; the limit u_x -> u would be swamped by any pole of k1 at y = 0.
  std::vector<double> estimates;
  for (auto [u0, ux0] : {std::pair{0.7, 0.3}, std::pair{1.3, -0.5}, std::pair{-0.9, 0.4}}) {
    const double y = u0 * u0 - ux0 * ux0;
    const double q0 = 0.5 * (kf(u0, ux0) + kf(u0, -ux0)) * y / u0;
    if (!std::isfinite(q0)) return std::nullopt;
    estimates.push_back(q0);
  }
  const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
  if (*hi - *lo > 1e-5 * std::max(1.0, std::abs(*hi))) return std::nullopt;
  double k0 = snap_rational(estimates[0], 720, 1e-6);
  if (std::abs(k0) < 1e-8) k0 = 0.0;

  // Samples of k1(y) = (k - k0 u / y) / u_x on y in [0.25, 2.5].
  const double ux = 0.6;
  std::vector<double> ys, k1s;
  for (double y : chebyshev_nodes(0.25, 2.5, 24)) {
    const double u = std::sqrt(y + ux * ux);
    const double v = (kf(u, ux) - k0 * u / y) / ux;
    if (!std::isfinite(v)) return std::nullopt;
    ys.push_back(y);
    k1s.push_back(v);
  }

  const Expr Y = y_expr();
  const Expr pole = k0 == 0.0 ? Expr::constant(0.0) : rational_constant(k0) * kU / Y;
  auto verify = [&](const Expr& k1) {
    const Expr candidate = kUx * substitute(k1, {{JetVar::u(), Y}}) + pole;
    return confirm(k - candidate, params, policy).zero();
  };

  PoleSplit out;
  out.k0 = k0;
  if (auto c = fit_polynomial(ys, k1s, 6, 1e-10)) {
    out.k1 = polynomial_expr(*c, kU);
    if (verify(out.k1)) {
      out.K1 = polynomial_expr(antiderivative_coeffs(*c), kU);
      out.form = "polynomial";
      return out;
    }
  }

  // Single power c y^p.
  const bool same_sign = std::all_of(k1s.begin(), k1s.end(), [&](double v) {
    return v != 0.0 && std::signbit(v) == std::signbit(k1s[0]);
  });
  if (!same_sign) return std::nullopt;
  std::vector<double> lx, lv;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    lx.push_back(std::log(ys[i]));
    lv.push_back(std::log(std::abs(k1s[i])));
  }
  auto line = fit_polynomial(lx, lv, 1, 1e-9);
  if (!line || line->size() != 2) return std::nullopt;
  auto p = rational_approx((*line)[1], 12, 1e-6);
  if (!p) return std::nullopt;
  const double pd = static_cast<double>(p->num) / static_cast<double>(p->den);
  double c = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) c += k1s[i] / std::pow(ys[i], pd);
  c = snap_rational(c / static_cast<double>(ys.size()), 720, 1e-9);
  out.k1 = power_term(c, *p, kU);
  if (!verify(out.k1)) return std::nullopt;
  out.K1 = power_antiderivative(c, *p, kU);
  out.form = "power";
  return out;
}

std::optional<Expr> antiderivative_in_u(const Expr& g, const ParamMap& params,
                                        const SamplingPolicy& policy) {
  if (!only_vars(g, {JetVar::u()})) return std::nullopt;
  const CompiledExpr gf(g, params, {JetVar::u()});
  auto at = [&](double u) {
    const double in[1] = {u};
    return gf(in);
  };

  std::vector<double> us, gs;
  for (double u : chebyshev_nodes(0.3, 1.9, 24)) {
    const double v = at(u);
    if (!std::isfinite(v)) return std::nullopt;
    us.push_back(u);
    gs.push_back(v);
  }
  if (auto c = fit_polynomial(us, gs, 6, 1e-10)) {
    if (confirm(g - polynomial_expr(*c, kU), params, policy).zero())
      return polynomial_expr(antiderivative_coeffs(*c), kU);
  }

  // c (u + beta)^p: g / g_u = (u + beta) / p is linear in u.
  const CompiledExpr gu(partial(g, JetVar::u()), params, {JetVar::u()});
  std::vector<double> rs;
  for (double u : us) {
    const double in[1] = {u};
    const double r = at(u) / gu(in);
    if (!std::isfinite(r)) return std::nullopt;
    rs.push_back(r);
  }
  auto line = fit_polynomial(us, rs, 1, 1e-9);
  if (!line || line->size() != 2 || std::abs((*line)[1]) < 1e-12) return std::nullopt;
  auto p = rational_approx(1.0 / (*line)[1], 12, 1e-6);
  if (!p) return std::nullopt;
  const double pd = static_cast<double>(p->num) / static_cast<double>(p->den);
  const double beta = snap_rational((*line)[0] * pd, 720, 1e-8);
  const double u0 = us[0];
  const double c = snap_rational(at(u0) / std::pow(u0 + beta, pd), 720, 1e-9);
  const Expr base = beta == 0.0 ? kU : kU + rational_constant(beta);
  if (!confirm(g - power_term(c, *p, base), params, policy).zero()) return std::nullopt;
  return power_antiderivative(c, *p, base);
}

// ---------------------------------------------------------------------------
// Currents

Expr characteristic_residual(const ConservedCurrent& cur, const EquationSpec& eq) {
  return d_t(cur.T) + d_x(cur.Phi) - cur.Q * eq.upsilon();
}

LawVerdict characteristic_check(const ConservedCurrent& cur, const EquationSpec& eq,
                                const SamplingPolicy& policy) {
  LawVerdict v;
  v.residual = characteristic_residual(cur, eq);
  v.evidence = is_zero(v.residual, eq.params(), policy);
  return v;
}

std::pair<Expr, Expr> multiplier_conditions(const Expr& T, const Expr& Q, const EquationSpec& eq) {
  const Expr e = d_t(T) - Q * eq.upsilon();
  return {euler_u(e), euler_ut(e)};
}

namespace {

// Builds (1/2) K1(y) + (1/2) k0 ln((u - u_x)/(u + u_x)) + k0 x, scaled by `s`.
Expr pole_potential(const PoleSplit& split, double s) {
  const Expr Y = y_expr();
  Expr out = Expr::constant(0.0);
  if (!split.K1.is_constant(0.0)) out = out + rational_constant(0.5 * s) * substitute(split.K1, {{JetVar::u(), Y}});
  if (split.k0 != 0.0) {
    out = out + rational_constant(0.5 * s * split.k0) * ln((kU - kUx) / (kU + kUx)) +
          rational_constant(s * split.k0) * var_x();
  }
  return out;
}

FluxResult verified(ConservedCurrent cur, const EquationSpec& eq, const SamplingPolicy& policy) {
  FluxResult r;
  LawVerdict check;
  try {
    check = characteristic_check(cur, eq, policy);
  } catch (const SingularSamplingError& e) {
    r.reason = cur.name + ": characteristic check could not be evaluated (" + e.what() + ")";
    return r;
  }
  if (!check.conserved()) {
    r.reason = cur.name + ": constructed current failed the characteristic check";
    return r;
  }
  r.current = std::move(cur);
  return r;
}

}  // namespace

FluxResult flux_momentum(const EquationSpec& eq, const SamplingPolicy& policy) {
  if (!check_momentum(eq, policy).conserved()) return {std::nullopt, "momentum: not conserved"};
  auto split = split_pole_form(eq.f(), eq.params(), policy);
  if (!split)
    return {std::nullopt, "momentum: f does not match u_x f1(u^2-u_x^2) + f0 u/(u^2-u_x^2) "
                          "with f1 polynomial or a power"};
  ConservedCurrent cur;
  cur.name = "momentum";
  cur.T = kU;
  cur.Phi = eq.g() * kM - var_utx() + pole_potential(*split, 1.0);
  cur.Q = Expr::constant(1.0);
  return verified(std::move(cur), eq, policy);
}

FluxResult flux_h1(const EquationSpec& eq, const SamplingPolicy& policy) {
  if (!check_h1(eq, policy).conserved()) return {std::nullopt, "h1: not conserved"};
  const Expr k = kU * eq.f() - kUx * eq.g();
  auto split = split_pole_form(k, eq.params(), policy);
  if (!split)
    return {std::nullopt, "h1: u f - u_x g does not match u_x h1(u^2-u_x^2) + h0 u/(u^2-u_x^2) "
                          "with h1 polynomial or a power"};
  ConservedCurrent cur;
  cur.name = "h1";
  cur.T = pow(kUx, 2) + pow(kU, 2);
  cur.Phi = 2.0 * kU * eq.g() * kM - 2.0 * kU * var_utx() + pole_potential(*split, 2.0);
  cur.Q = 2.0 * kU;
  return verified(std::move(cur), eq, policy);
}

FluxResult flux_grad_energy(const EquationSpec& eq, double mu, double nu,
                            const SamplingPolicy& policy) {
  const std::string name =
      nu == 0.0 && mu == 2.0 ? "l2m"
      : nu == 0.0            ? fmt::format("weighted_h2(mu={:.17g})", mu)
                             : fmt::format("grad_energy(mu={:.17g},nu={:.17g})", mu, nu);
  const Expr& g = eq.g();
  ConservedCurrent cur;
  cur.name = name;
  if (mu == 2.0 && nu == 0.0) {
    cur.T = pow(kM, 2);
    cur.Phi = g * pow(kM, 2);
    cur.Q = 2.0 * kM;
    return verified(std::move(cur), eq, policy);
  }
  if (!only_vars(g, {JetVar::u()})) return {std::nullopt, name + ": g depends on u_x"};
  const Expr Mu = rational_constant(mu);
  const Expr Nu = rational_constant(nu);
  const Expr w = (Mu - 2.0) * kU + Nu;  // (mu-2) u + nu
  const Expr uxx = kU - kM;
  cur.T = pow(uxx, 2) + Mu * pow(kUx, 2) + (Mu - 1.0) * pow(kU, 2) + 2.0 * Nu * kU;
  cur.Q = 2.0 * (kM + w);
  Expr phi = 2.0 * ((1.0 - Mu) * kU - Nu) * var_utx() - 2.0 * kUx * var_ut() +
             (2.0 * w + kM) * kM * g + ((2.0 - Mu) * y_expr() - Nu * kU) * g +
             0.5 * w * pow(kUx, 2) * partial(g, JetVar::u());
  if (nu != 0.0) {
    auto G = antiderivative_in_u(g, eq.params(), policy);
    if (!G) return {std::nullopt, name + ": no closed-form antiderivative of g"};
    phi = phi + Nu * *G;
  }
  cur.Phi = phi;
  return verified(std::move(cur), eq, policy);
}

// ---------------------------------------------------------------------------
// Classification

bool ConservationReport::determinate() const {
  return momentum.determinate() && h1.determinate() &&
         grad_energy.kind != SetKind::Indeterminate;
}

ConservationReport classify(const EquationSpec& eq, const SamplingPolicy& policy,
                            bool build_fluxes) {
  ConservationReport r;
  r.momentum = check_momentum(eq, policy);
  r.h1 = check_h1(eq, policy);
  r.grad_energy = check_grad_energy(eq, policy);
  if (r.grad_energy.kind == SetKind::Indeterminate) {
    r.l2m = r.weighted_h2 = Answer::Indeterminate;
  } else {
    r.l2m = r.grad_energy.contains(2.0, 0.0) ? Answer::Yes : Answer::No;
    r.weighted_h2 = r.grad_energy.has_weighted_h2() ? Answer::Yes : Answer::No;
  }
  if (!build_fluxes) return r;

  auto attach = [&](FluxResult fr) {
    if (fr.current) {
      r.fluxes.push_back(std::move(*fr.current));
    } else {
      r.flux_notes.push_back(std::move(fr.reason));
    }
  };
  if (r.momentum.conserved()) attach(flux_momentum(eq, policy));
  if (r.h1.conserved()) attach(flux_h1(eq, policy));

  const GradEnergySet& ge = r.grad_energy;
  if (ge.kind == SetKind::Point) {
    attach(flux_grad_energy(eq, ge.mu, ge.nu, policy));
  } else if (ge.kind == SetKind::Line || ge.kind == SetKind::Plane) {
    if (r.l2m == Answer::Yes) attach(flux_grad_energy(eq, 2.0, 0.0, policy));
    if (r.weighted_h2 == Answer::Yes) {
      double mu_w = 3.0;
      if (ge.kind == SetKind::Line && std::abs(ge.direction[1]) > 1e-7)
        mu_w = snap_rational(ge.mu - ge.nu / ge.direction[1] * ge.direction[0], 720, 1e-8);
      attach(flux_grad_energy(eq, mu_w, 0.0, policy));
    }
    if (ge.kind == SetKind::Line && std::abs(ge.direction[1]) > 1e-7) {
      // A member with nu != 0, which needs G = int g du.
      if (std::abs(ge.direction[0]) <= 1e-7) {
        attach(flux_grad_energy(eq, ge.mu, ge.nu + 1.0, policy));
      } else {
        const double slope = snap_rational(ge.direction[1] / ge.direction[0], 720, 1e-8);
        attach(flux_grad_energy(eq, ge.mu + 1.0, ge.nu + slope, policy));
      }
    }
  }
  return r;
}

namespace {

nlohmann::json verdict_json(const LawVerdict& v) {
  nlohmann::json j;
  j["conserved"] = v.conserved();
  j["status"] = v.conserved() ? "conserved"
                : v.determinate() ? "not_conserved"
                                  : "indeterminate";
  j["residual_max"] = v.evidence.max_rel;
  j["residual_max_abs"] = v.evidence.max_abs;
  j["samples"] = v.evidence.samples;
  j["exact"] = v.evidence.exact;
  if (v.evidence.witness) {
    nlohmann::json w;
    for (const auto& [var, value] : v.evidence.witness->point.vars) w["point"][var.name()] = value;
    w["value"] = v.evidence.witness->value;
    w["scale"] = v.evidence.witness->scale;
    j["witness"] = w;
  }
  return j;
}

nlohmann::json answer_json(Answer a) {
  if (a == Answer::Indeterminate) return "indeterminate";
  return a == Answer::Yes;
}

}  // namespace

std::string report_to_json(const ConservationReport& r, const EquationSpec& eq) {
  nlohmann::json j;
  j["equation"] = {{"f", to_string(eq.f())}, {"g", to_string(eq.g())}, {"params", eq.params()}};
  j["momentum"] = verdict_json(r.momentum);
  j["h1"] = verdict_json(r.h1);
  const GradEnergySet& ge = r.grad_energy;
  nlohmann::json g;
  g["kind"] = to_string(ge.kind);
  if (ge.kind == SetKind::Point || ge.kind == SetKind::Line) {
    g["mu"] = ge.mu;
    g["nu"] = ge.nu;
  } else {
    g["mu"] = nullptr;
    g["nu"] = nullptr;
  }
  g["direction"] = ge.kind == SetKind::Line ? nlohmann::json(ge.direction) : nlohmann::json(nullptr);
  g["singular_values"] = ge.singular_values;
  g["residual_max"] = ge.residual_max;
  if (ge.cross_check) g["cross_check"] = to_string(ge.cross_check->status);
  if (!ge.note.empty()) g["note"] = ge.note;
  j["grad_energy"] = g;
  j["l2m"] = answer_json(r.l2m);
  j["weighted_h2"] = answer_json(r.weighted_h2);
  j["fluxes"] = nlohmann::json::array();
  for (const auto& c : r.fluxes)
    j["fluxes"].push_back(
        {{"name", c.name}, {"T", to_string(c.T)}, {"Phi", to_string(c.Phi)}, {"Q", to_string(c.Q)}});
  j["flux_notes"] = r.flux_notes;
  return j.dump(2);
}

}  // namespace peakon
