#include "peakon/twave.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "peakon/polynomial.hpp"

namespace peakon::twave {

namespace odeint = boost::numeric::odeint;

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  if (n < 2) throw TwaveError("grid needs at least two points");
  std::vector<double> out(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + h * static_cast<double>(i);
  out.back() = hi;
  return out;
}

namespace {

void check_solitary_params(double b, double c) {
  if (!(b > 0.0 && b < 1.0)) throw TwaveError(fmt::format("b = {} outside (0, 1)", b));
  if (!(c > 0.0) || !std::isfinite(c)) throw TwaveError(fmt::format("c = {} must be positive", c));
}

// Quantities of the closed form at height U (0 <= U <= peak).
struct Shape {
  double w;   // sqrt(1 - c U^2)
  double A;   // 1 + w
  double B;   // b^2 - 1 + w, written without cancellation near the peak
  double r;   // sqrt(B / A)
};

Shape shape_at(double U, double b, double c) {
  const double Um = solitary_peak_height(b, c);
  U = std::min(std::abs(U), Um);
  Shape s{};
  s.w = std::sqrt(std::max(0.0, 1.0 - c * U * U));
  s.A = 1.0 + s.w;
  s.B = c * (Um - U) * (Um + U) / (s.w + 1.0 - b * b);
  s.r = std::sqrt(s.B / s.A);
  return s;
}

// |xi| as a function of log U. The closed form
//   |xi| = (sqrt2/b) arctanh(sqrt2 r/b) - 2 arctanh(r),  r = sqrt(B/A),
// has 1 - sqrt2 r/b = (2-b^2) c U^2 / (A^2 b^2 (1 + sqrt2 r/b)), used in log
// form so the tail stays accurate down to underflow.
double abs_xi_log(double lnU, double b, double c) {
  const double U = std::exp(lnU);
  const Shape s = shape_at(U, b, c);
  const double z = std::numbers::sqrt2 * s.r / b;
  const double ln_one_minus_z = std::log(2.0 - b * b) + std::log(c) + 2.0 * lnU -
                                std::log(s.A * s.A * b * b * (1.0 + z));
  const double atanh_z = 0.5 * (std::log1p(z) - ln_one_minus_z);
  return std::numbers::sqrt2 / b * atanh_z - 2.0 * std::atanh(s.r);
}

}  // namespace

double solitary_peak_height(double b, double c) {
  check_solitary_params(b, c);
  return b * std::sqrt(2.0 - b * b) / std::sqrt(c);
}

double solitary_abs_xi(double U, double b, double c) {
  const double Um = solitary_peak_height(b, c);
  if (!(U > 0.0 && U <= Um)) throw TwaveError(fmt::format("height {} outside (0, {}]", U, Um));
  return abs_xi_log(std::log(U), b, c);
}

double solitary_slope(double U, double b, double c) {
  const Shape s = shape_at(U, b, c);
  const double r2 = s.r * s.r;
  // Implicit derivative of the closed form.
  return -s.r * s.w * std::abs(U) * (1.0 - r2) / (1.0 - b * b + r2);
}

double solitary_height_at(double xi, double b, double c) {
  const double Um = solitary_peak_height(b, c);
  const double target = std::abs(xi);
  if (target == 0.0) return Um;
  double hi = std::log(Um);
  double lo = hi - 740.0;
  if (abs_xi_log(lo, b, c) < target)
    throw TwaveError(fmt::format("bisection does not bracket xi = {}", xi));
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (abs_xi_log(mid, b, c) > target)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

WaveProfile solitary_profile(double b, double c, std::span<const double> xi, int orientation) {
  check_solitary_params(b, c);
  if (orientation != 1 && orientation != -1) throw TwaveError("orientation must be +1 or -1");
  WaveProfile p;
  p.kind = "solitary";
  p.b = b;
  p.c = c;
  p.orientation = orientation;
  p.peak_height = solitary_peak_height(b, c);
  p.xi.assign(xi.begin(), xi.end());
  p.U.resize(xi.size());
  p.Uprime.resize(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double U = solitary_height_at(xi[i], b, c);
    const double slope = solitary_slope(U, b, c);
    p.U[i] = orientation * U;
    p.Uprime[i] = xi[i] > 0.0 ? orientation * slope : xi[i] < 0.0 ? -orientation * slope : 0.0;
  }
  return p;
}

namespace {

constexpr std::array<double, 9> kD1{1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0,
                                    4.0 / 5,   -1.0 / 5,   4.0 / 105, -1.0 / 280};
constexpr std::array<double, 9> kD2{-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72,
                                    8.0 / 5,    -1.0 / 5,  8.0 / 315, -1.0 / 560};

double stencil(const std::array<double, 9>& w, const std::vector<double>& v, std::size_t i) {
  double s = 0.0;
  for (std::size_t k = 0; k < 9; ++k) s += w[k] * v[i + k - 4];
  return s;
}

void accumulate(ResidualStats& s, double r) {
  s.max = std::max(s.max, std::abs(r));
  s.rms += r * r;
  ++s.count;
}

void finish(ResidualStats& s) {
  if (s.count) s.rms = std::sqrt(s.rms / static_cast<double>(s.count));
}

}  // namespace

SolitaryResiduals solitary_ode_residual(const WaveProfile& p, double exclude_radius) {
  if (p.kind != "solitary") throw TwaveError("residuals are defined for solitary profiles only");
  const std::size_t n = p.xi.size();
  if (n < 9) throw TwaveError("grid too coarse for 8th-order differences (need >= 9 points)");
  const double h = (p.xi.back() - p.xi.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(p.xi[i] - p.xi[i - 1] - h) > 1e-9 * std::abs(h))
      throw TwaveError("residuals need a uniform xi grid");

  SolitaryResiduals out;
  out.spacing = h;
  out.excluded_radius = exclude_radius;
  const double b = p.b, c = p.c;
  out.c2 = 2.0 - b * b;
  out.c1 = 0.25 * out.c2 * out.c2;
  out.fi_l2.expected = out.c1;
  out.fi_h1.expected = out.c2;

  for (std::size_t i = 0; i < n; ++i) {
    const double U = p.U[i];
    const Shape s = shape_at(U, b, c);
    accumulate(out.ode1, p.Uprime[i] * p.Uprime[i] - U * U * s.B / s.A);
  }
  finish(out.ode1);

  double sum_l2 = 0.0, sum_h1 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 4; i + 4 < n; ++i) {
    const double U = p.U[i], U1 = p.Uprime[i];
    const double U2 = stencil(kD1, p.Uprime, i) / h;
    const double U3 = stencil(kD2, p.Uprime, i) / (h * h);
    const double m = U - U2;
    const double l2 = m * m * (1.0 / (U * U) - c);
    const double h1 = -c * (U * U + U1 * U1) + 2.0 * c * U * U2 + 2.0 * m / U;
    sum_l2 += l2;
    sum_h1 += h1;
    ++count;
    out.fi_l2.max_rel_dev = std::max(out.fi_l2.max_rel_dev,
                                     std::abs(l2 - out.c1) / std::max(1.0, std::abs(out.c1)));
    out.fi_h1.max_rel_dev = std::max(out.fi_h1.max_rel_dev,
                                     std::abs(h1 - out.c2) / std::max(1.0, std::abs(out.c2)));
    if (std::abs(p.xi[i]) < exclude_radius) continue;
    // -c(U' - U''') + U' m U^-3 + (m U^-2)', expanded.
    accumulate(out.ode3, (U1 - U3) * (1.0 / (U * U) - c) - U1 * m / (U * U * U));
  }
  finish(out.ode3);
  if (count) {
    out.fi_l2.mean = sum_l2 / static_cast<double>(count);
    out.fi_h1.mean = sum_h1 / static_cast<double>(count);
  }
  return out;
}

QuadratureCheck quadrature_crosscheck(double b, double c, double lo, double hi, std::size_t n) {
  check_solitary_params(b, c);
  if (!(lo > 0.0 && hi > lo)) throw TwaveError("cross-check range must satisfy 0 < lo < hi");
  const double Um = solitary_peak_height(b, c);
  // U'' at the crest from the first-order ODE: F'(Um)/2 with F = U^2 B/A.
  const double curvature = -c * Um * Um * Um / (2.0 * (2.0 - b * b) * (1.0 - b * b));
  const std::vector<double> grid = uniform_grid(lo, hi, n);

  using State = std::array<double, 1>;
  auto rhs = [&](const State& x, State& dx, double) {
    const Shape s = shape_at(x[0], b, c);
    dx[0] = -x[0] * s.r;
  };

  QuadratureCheck out;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double gap = out.start_rel_gap;
    const double eps = std::sqrt(2.0 * gap * Um / std::abs(curvature));
    out.start_offset = eps;
    if (eps >= lo) break;
    std::vector<double> times{eps};
    times.insert(times.end(), grid.begin(), grid.end());
    std::vector<double> values;
    State x{Um * (1.0 - gap)};
    try {
      auto stepper = odeint::make_controlled(1e-14, 1e-13, odeint::runge_kutta_dopri5<State>());
      odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-4,
                              [&](const State& s, double) { values.push_back(s[0]); });
    } catch (const std::exception& e) {
      out.warnings.push_back(fmt::format("integration from relative gap {} failed ({}); enlarging", gap,
                                         e.what()));
      out.start_rel_gap *= 100.0;
      continue;
    }
    out.max_discrepancy = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      out.max_discrepancy =
          std::max(out.max_discrepancy, std::abs(values[i + 1] - solitary_height_at(grid[i], b, c)));
    return out;
  }
  throw TwaveError("quadrature cross-check could not start near the crest");
}

WaveProfile peakon(double a, std::span<const double> xi) {
  if (a == 0.0 || !std::isfinite(a)) throw TwaveError("peakon amplitude must be nonzero");
  WaveProfile p;
  p.kind = "peakon";
  p.a = a;
  p.c = peakon_speed(a);
  p.orientation = a > 0 ? 1 : -1;
  p.peak_height = std::abs(a);
  p.xi.assign(xi.begin(), xi.end());
  for (double s : xi) {
    const double v = a * std::exp(-std::abs(s));
    p.U.push_back(v);
    p.Uprime.push_back(s > 0 ? -v : s < 0 ? v : 0.0);
  }
  return p;
}

double peakon_speed(double a) {
  if (a == 0.0 || !std::isfinite(a)) throw TwaveError("peakon amplitude must be nonzero");
  return 1.0 / (a * a);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> series_coeffs(const Expr& e, const ParamMap& params, const char* what) {
  auto p = to_polynomial(e, params);
  if (!p) throw TwaveError(fmt::format("{} must be a polynomial in one variable", what));
  std::vector<double> c;
  for (const auto& [mono, coeff] : p->terms()) {
    int deg = 0;
    for (const auto& [v, k] : mono) {
      if (!(v == JetVar::u())) throw TwaveError(fmt::format("{} must depend on y (written u) only", what));
      deg = k;
    }
    if (c.size() <= static_cast<std::size_t>(deg)) c.resize(static_cast<std::size_t>(deg) + 1, 0.0);
    c[static_cast<std::size_t>(deg)] = coeff.get_d();
  }
  return c;
}

// sum c_k y^k, or sum c_k y^k / (k + 1) when integrating (then times y gives the antiderivative)
double horner(const std::vector<double>& c, double y, bool integrate) {
  double s = 0.0;
  for (std::size_t k = c.size(); k-- > 0;)
    s = s * y + (integrate ? c[k] / static_cast<double>(k + 1) : c[k]);
  return s;
}

}  // namespace

HamiltonianFamily::HamiltonianFamily(const Expr& f1, const Expr& g1, const ParamMap& params)
    : f_(series_coeffs(f1, params, "f1")), g_(series_coeffs(g1, params, "g1")) {}

double HamiltonianFamily::f1(double y) const { return horner(f_, y, false); }
double HamiltonianFamily::g1(double y) const { return horner(g_, y, false); }
double HamiltonianFamily::F1_tilde(double y) const { return horner(f_, y, true); }
double HamiltonianFamily::G1_tilde(double y) const { return horner(g_, y, true); }
double HamiltonianFamily::F1(double y) const { return y * F1_tilde(y); }
double HamiltonianFamily::G1(double y) const { return y * G1_tilde(y); }

HamiltonianFamily::Values HamiltonianFamily::first_integrals(double U, double U1, double U2,
                                                             double c) const {
  const double y = U * U - U1 * U1;
  const double m = U - U2;
  const double h = U * f1(y) + g1(y);
  Values v;
  v.fi_mom = -c * m + 0.5 * F1(y) + m * h;
  v.fi_h1 = -c * (U * U + U1 * U1) + 2.0 * c * U * U2 - G1(y) + 2.0 * U * m * h;
  v.ode = (U1 * U1 - U * U) * (U * F1_tilde(y) + G1_tilde(y) - c);
  return v;
}

HamiltonianFamily::SolitaryVerdict HamiltonianFamily::solitary_analysis() const {
  SolitaryVerdict v;
  const double g0 = g1(0.0);
  if (g0 == 0.0) {
    v.message =
        "no smooth solitary wave: decay gives c1 = c2 = 0, and U F1~ + G1~ = c fails as U -> 0 "
        "because g1(0) = 0 != c";
  } else {
    v.fixed_speed = g0;
    v.message = fmt::format(
        "no smooth solitary wave with arbitrary speed; decay is only compatible with c = g1(0) = {}",
        g0);
  }
  return v;
}

HamiltonianFamily::DegeneracyCheck HamiltonianFamily::degeneracy(std::span<const double> U,
                                                                 std::span<const double> U1, double c,
                                                                 double factor_tol) const {
  if (U.size() != U1.size()) throw TwaveError("U and U' samples differ in length");
  DegeneracyCheck out;
  out.total = U.size();
  for (std::size_t i = 0; i < U.size(); ++i) {
    const double y = U[i] * U[i] - U1[i] * U1[i];
    const double factor = U[i] * F1_tilde(y) + G1_tilde(y) - c;
    if (std::abs(factor) <= factor_tol) continue;
    ++out.forced;
    out.max_violation = std::max(out.max_violation, std::abs(y));
  }
  return out;
}

PeriodicWave hamiltonian_periodic_wave(const HamiltonianFamily& fam, double c, double c1, double U_max,
                                       std::size_t n) {
  if (n < 2) throw TwaveError("need at least two samples");
  using State = std::array<double, 2>;
  auto rhs = [&](const State& s, State& ds, double) {
    const double y = s[0] * s[0] - s[1] * s[1];
    const double denom = s[0] * fam.f1(y) + fam.g1(y) - c;
    ds[0] = s[1];
    ds[1] = s[0] - (c1 - 0.5 * fam.F1(y)) / denom;
  };
  State probe{U_max, 0.0}, d{};
  rhs(probe, d, 0.0);
  if (!(d[1] < 0.0)) throw TwaveError("starting point is not a crest (U'' >= 0)");

  auto make = [] { return odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>()); };
  PeriodicWave w;
  w.c = c;
  w.c1 = c1;
  w.U_max = U_max;
  w.U_min = U_max;

  // Crest -> trough (U' < 0) -> crest (U' back to 0 from above).
  auto stepper = make();
  stepper.initialize(State{U_max, 0.0}, 0.0, 1e-3);
  bool rising = false;
  while (true) {
    auto [t0, t1] = stepper.do_step(rhs);
    const State s = stepper.current_state();
    if (!std::isfinite(s[0]) || t1 > 1e4) throw TwaveError("no closed orbit through the crest");
    w.U_min = std::min(w.U_min, s[0]);
    if (!rising && s[1] > 0.0) rising = true;
    if (rising && s[1] <= 0.0) {
      double a = t0, b = t1;
      State x{};
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double mid = 0.5 * (a + b);
        stepper.calc_state(mid, x);
        (x[1] > 0.0 ? a : b) = mid;
      }
      w.period = 0.5 * (a + b);
      break;
    }
  }

  w.xi = uniform_grid(0.0, w.period, n + 1);
  w.xi.pop_back();
  auto pass = make();
  pass.initialize(State{U_max, 0.0}, 0.0, 1e-3);
  // Dense output has no interval before the first step; the crest is known.
  w.U.push_back(U_max);
  w.Uprime.push_back(0.0);
  std::size_t j = 1;
  State x{};
  while (j < n) {
    while (j < n && w.xi[j] <= pass.current_time()) {
      pass.calc_state(w.xi[j], x);
      w.U.push_back(x[0]);
      w.Uprime.push_back(x[1]);
      ++j;
    }
    if (j < n) pass.do_step(rhs);
  }
  return w;
}

}  // namespace peakon::twave
