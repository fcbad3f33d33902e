#include "peakon/pde.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <set>

#include <fftw3.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "peakon/parse.hpp"
#include "peakon/twave.hpp"

namespace peakon::pde {

using cplx = std::complex<double>;

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double wrap(double d, double L) {
  d = std::fmod(d, L);
  if (d < -0.5 * L) d += L;
  if (d >= 0.5 * L) d -= L;
  return d;
}

}  // namespace

Grid::Grid(double L_, std::size_t N_) : L(L_), N(N_) {
  if (!(L > 0.0) || !std::isfinite(L)) throw PdeError(fmt::format("domain length {} must be positive", L));
  if (N < 16 || (N & (N - 1)) != 0) throw PdeError(fmt::format("N = {} must be a power of two >= 16", N));
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(N);
  for (std::size_t j = 0; j < N; ++j) x[j] = this->x(j);
  return x;
}

double Grid::k(std::size_t j) const { return 2.0 * std::numbers::pi * static_cast<double>(j) / L; }

// ---------------------------------------------------------------------------

SpectralOps::SpectralOps(const Grid& g, bool dealias)
    : grid_(g), dealias_(dealias), cutoff_(g.N / 3) {
  real_ = fftw_alloc_real(g.N);
  spec_ = reinterpret_cast<cplx*>(fftw_alloc_complex(g.N / 2 + 1));
  // FFTW_ESTIMATE picks the same algorithm every run, so results are bitwise reproducible.
  std::lock_guard lock(planner_mutex());
  const int n = static_cast<int>(g.N);
  plan_fwd_ = fftw_plan_dft_r2c_1d(n, real_, reinterpret_cast<fftw_complex*>(spec_), FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spec_), real_, FFTW_ESTIMATE);
}

SpectralOps::~SpectralOps() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(spec_);
  fftw_free(real_);
}

void SpectralOps::forward(std::span<const double> v) {
  if (v.size() != grid_.N) throw PdeError("array length does not match the grid");
  std::copy(v.begin(), v.end(), real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
}

void SpectralOps::backward(std::vector<double>& out) {
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  out.resize(grid_.N);
  const double inv = 1.0 / static_cast<double>(grid_.N);
  for (std::size_t j = 0; j < grid_.N; ++j) out[j] = real_[j] * inv;
}

void SpectralOps::helmholtz(std::span<const double> m, std::vector<double>& u, std::vector<double>& ux) {
  forward(m);
  const std::size_t H = grid_.N / 2;
  std::vector<cplx> uhat(H + 1);
  for (std::size_t j = 0; j <= H; ++j) {
    const double k = grid_.k(j);
    uhat[j] = spec_[j] / (1.0 + k * k);
  }
  std::copy(uhat.begin(), uhat.end(), spec_);
  backward(u);
  for (std::size_t j = 0; j <= H; ++j) spec_[j] = cplx(0.0, grid_.k(j)) * uhat[j];
  spec_[H] = 0.0;
  backward(ux);
}

void SpectralOps::derivative(std::span<const double> v, std::vector<double>& out) {
  forward(v);
  const std::size_t H = grid_.N / 2;
  for (std::size_t j = 0; j < H; ++j) spec_[j] *= cplx(0.0, grid_.k(j));
  spec_[H] = 0.0;
  backward(out);
}

void SpectralOps::second_derivative(std::span<const double> v, std::vector<double>& out) {
  forward(v);
  for (std::size_t j = 0; j <= grid_.N / 2; ++j) spec_[j] *= -grid_.k(j) * grid_.k(j);
  backward(out);
}

void SpectralOps::momentum_of(std::span<const double> u, std::vector<double>& m) {
  forward(u);
  for (std::size_t j = 0; j <= grid_.N / 2; ++j) spec_[j] *= 1.0 + grid_.k(j) * grid_.k(j);
  backward(m);
}

void SpectralOps::filter(std::vector<double>& v) {
  if (!dealias_) return;
  forward(v);
  for (std::size_t j = cutoff_ + 1; j <= grid_.N / 2; ++j) spec_[j] = 0.0;
  backward(v);
}

void SpectralOps::smooth(std::vector<double>& v, double sigma) {
  forward(v);
  for (std::size_t j = 0; j <= grid_.N / 2; ++j) {
    const double k = grid_.k(j);
    spec_[j] *= std::exp(-0.5 * k * k * sigma * sigma);
  }
  backward(v);
}

SpectralOps::Interpolant SpectralOps::interpolant(std::span<const double> v) {
  forward(v);
  Interpolant p;
  p.L = grid_.L;
  p.coeffs.assign(spec_, spec_ + grid_.N / 2 + 1);
  for (auto& c : p.coeffs) c /= static_cast<double>(grid_.N);
  return p;
}

double SpectralOps::Interpolant::value(double x) const {
  const std::size_t H = coeffs.size() - 1;
  const double w = 2.0 * std::numbers::pi / L;
  double s = coeffs[0].real();
  for (std::size_t j = 1; j < H; ++j) s += 2.0 * (coeffs[j] * std::polar(1.0, w * j * x)).real();
  s += coeffs[H].real() * std::cos(w * H * x);
  return s;
}

double SpectralOps::Interpolant::derivative(double x) const {
  const std::size_t H = coeffs.size() - 1;
  const double w = 2.0 * std::numbers::pi / L;
  double s = 0.0;
  for (std::size_t j = 1; j < H; ++j)
    s += 2.0 * (cplx(0.0, w * j) * coeffs[j] * std::polar(1.0, w * j * x)).real();
  return s;
}

// ---------------------------------------------------------------------------

GridState make_state(SpectralOps& ops, std::vector<double> m, double t) {
  GridState s;
  s.t = t;
  s.m = std::move(m);
  ops.helmholtz(s.m, s.u, s.ux);
  return s;
}

double helmholtz_residual(SpectralOps& ops, const GridState& s) {
  std::vector<double> uxx;
  ops.second_derivative(s.u, uxx);
  double r = 0.0, scale = 1.0;
  for (std::size_t j = 0; j < s.m.size(); ++j) {
    r = std::max(r, std::abs(s.u[j] - uxx[j] - s.m[j]));
    scale = std::max(scale, std::abs(s.m[j]));
  }
  return r / scale;
}

NodalEquation::NodalEquation(const EquationSpec& eq)
    : eq_(eq),
      f_(eq.f(), eq.params(), {JetVar::u(), JetVar::u(1)}),
      g_(eq.g(), eq.params(), {JetVar::u(), JetVar::u(1)}) {
  for (double ux : {0.3, -0.7, 1.1}) {
    if (!std::isfinite(f(0.0, ux)) || !std::isfinite(g(0.0, ux))) singular_ = true;
  }
}

double NodalEquation::f(double u, double ux) const {
  const double in[2] = {u, ux};
  return f_(in);
}

double NodalEquation::g(double u, double ux) const {
  const double in[2] = {u, ux};
  return g_(in);
}

void rhs(SpectralOps& ops, const NodalEquation& eq, std::span<const double> m, std::span<const double> u,
         std::span<const double> ux, std::vector<double>& out, double u_floor) {
  const std::size_t N = m.size();
  std::vector<double> fm(N), gm(N), dgm;
  for (std::size_t j = 0; j < N; ++j) {
    if (u_floor > 0.0 && std::abs(u[j]) < u_floor)
      throw SingularityError(fmt::format("|u| = {:.3g} below the floor {:.3g} at x = {:.6g}",
                                         std::abs(u[j]), u_floor, ops.grid().x(j)),
                             ops.grid().x(j), u[j]);
    const double fv = eq.f(u[j], ux[j]);
    const double gv = eq.g(u[j], ux[j]);
    if (!std::isfinite(fv) || !std::isfinite(gv) || !std::isfinite(m[j]))
      throw SingularityError(fmt::format("non-finite f or g at x = {:.6g} (u = {:.6g}, u_x = {:.6g})",
                                         ops.grid().x(j), u[j], ux[j]),
                             ops.grid().x(j), u[j]);
    fm[j] = fv * m[j];
    gm[j] = gv * m[j];
  }
  ops.derivative(gm, dgm);
  out.resize(N);
  for (std::size_t j = 0; j < N; ++j) out[j] = -fm[j] - dgm[j];
  ops.filter(out);
}

std::vector<double> rhs(SpectralOps& ops, const NodalEquation& eq, const GridState& s, double u_floor) {
  std::vector<double> out;
  rhs(ops, eq, s.m, s.u, s.ux, out, u_floor);
  return out;
}

GridState step_rk4(SpectralOps& ops, const NodalEquation& eq, const GridState& s, double dt,
                   double u_floor) {
  const std::size_t N = s.m.size();
  std::vector<double> k1, k2, k3, k4, mt(N), u, ux;
  rhs(ops, eq, s.m, s.u, s.ux, k1, u_floor);
  for (std::size_t j = 0; j < N; ++j) mt[j] = s.m[j] + 0.5 * dt * k1[j];
  ops.helmholtz(mt, u, ux);
  rhs(ops, eq, mt, u, ux, k2, u_floor);
  for (std::size_t j = 0; j < N; ++j) mt[j] = s.m[j] + 0.5 * dt * k2[j];
  ops.helmholtz(mt, u, ux);
  rhs(ops, eq, mt, u, ux, k3, u_floor);
  for (std::size_t j = 0; j < N; ++j) mt[j] = s.m[j] + dt * k3[j];
  ops.helmholtz(mt, u, ux);
  rhs(ops, eq, mt, u, ux, k4, u_floor);
  std::vector<double> next(N);
  for (std::size_t j = 0; j < N; ++j)
    next[j] = s.m[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  return make_state(ops, std::move(next), s.t + dt);
}

double cfl_number(const NodalEquation& eq, const GridState& s, const Grid& grid, double dt) {
  double gmax = 0.0;
  for (std::size_t j = 0; j < s.u.size(); ++j) gmax = std::max(gmax, std::abs(eq.g(s.u[j], s.ux[j])));
  return dt * gmax * static_cast<double>(grid.N) / grid.L;
}

// ---------------------------------------------------------------------------

Diagnostics diagnostics(const GridState& s, const Grid& grid, double mu, double nu) {
  Diagnostics d;
  d.t = s.t;
  d.min_u = s.u.empty() ? 0.0 : s.u[0];
  for (std::size_t j = 0; j < s.m.size(); ++j) {
    const double u = s.u[j], ux = s.ux[j], m = s.m[j], uxx = u - m;
    d.M += m;
    d.H1sq += ux * ux + u * u;
    d.L2msq += m * m;
    d.E += uxx * uxx + mu * ux * ux + (mu - 1.0) * u * u + 2.0 * nu * u;
    d.sup_u = std::max(d.sup_u, std::abs(u));
    d.sup_ux = std::max(d.sup_ux, std::abs(ux));
    d.min_u = std::min(d.min_u, u);
  }
  const double h = grid.dx();
  d.M *= h;
  d.H1sq *= h;
  d.L2msq *= h;
  d.E *= h;
  return d;
}

double ConservedSeries::drift(double Diagnostics::*q) const {
  if (rows.empty()) return 0.0;
  const double q0 = rows.front().*q;
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(r.*q - q0));
  return worst / std::max(std::abs(q0), 1e-300);
}

// ---------------------------------------------------------------------------

namespace {

double param(const InitialData& init, const char* name, double fallback) {
  auto it = init.params.find(name);
  return it == init.params.end() ? fallback : it->second;
}

void check_params(const InitialData& init, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : init.params) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) ==
        allowed.end())
      throw PdeError(fmt::format("initial data '{}' has no parameter '{}'", init.kind, k));
    if (!std::isfinite(v)) throw PdeError(fmt::format("initial parameter '{}' is not finite", k));
  }
}

}  // namespace

std::vector<double> initial_momentum(SpectralOps& ops, const InitialData& init) {
  const Grid& g = ops.grid();
  const double L = g.L;
  std::vector<double> u(g.N);
  if (init.kind == "gaussian") {
    check_params(init, {"amplitude", "center", "width", "offset"});
    const double A = param(init, "amplitude", 1.0), x0 = param(init, "center", 0.5 * L),
                 w = param(init, "width", 1.0), off = param(init, "offset", 0.0);
    if (!(w > 0.0)) throw PdeError("gaussian width must be positive");
    for (std::size_t j = 0; j < g.N; ++j) {
      const double d = wrap(g.x(j) - x0, L) / w;
      u[j] = off + A * std::exp(-d * d);
    }
  } else if (init.kind == "cosine_offset") {
    check_params(init, {"offset", "amplitude", "mode"});
    const double off = param(init, "offset", 2.0), A = param(init, "amplitude", 0.5),
                 mode = param(init, "mode", 1.0);
    if (mode != std::floor(mode)) throw PdeError("cosine mode must be an integer");
    for (std::size_t j = 0; j < g.N; ++j) u[j] = off + A * std::cos(2.0 * std::numbers::pi * mode * g.x(j) / L);
  } else if (init.kind == "mollified_peakon") {
    check_params(init, {"amplitude", "center", "width_factor"});
    const double a = param(init, "amplitude", 1.0), x0 = param(init, "center", 0.5 * L),
                 wf = param(init, "width_factor", 3.0);
    if (a == 0.0) throw PdeError("peakon amplitude must be nonzero");
    // Periodic peakon: cosh profile scaled so the crest height is exactly a.
    for (std::size_t j = 0; j < g.N; ++j) {
      const double d = std::abs(wrap(g.x(j) - x0, L));
      u[j] = a * std::cosh(0.5 * L - d) / std::cosh(0.5 * L);
    }
    ops.smooth(u, wf * g.dx());
  } else if (init.kind == "solitary_wave") {
    check_params(init, {"b", "c", "center", "orientation", "tail_cutoff"});
    const double b = param(init, "b", 0.5), c = param(init, "c", 1.0), x0 = param(init, "center", 0.5 * L),
                 cut = param(init, "tail_cutoff", 1e-12);
    const int orient = param(init, "orientation", 1.0) < 0 ? -1 : 1;
    try {
      for (std::size_t j = 0; j < g.N; ++j) {
        const double U = twave::solitary_height_at(wrap(g.x(j) - x0, L), b, c);
        u[j] = U < cut ? 0.0 : orient * U;
      }
    } catch (const twave::TwaveError& e) {
      throw PdeError(e.what());
    }
  } else {
    throw PdeError(fmt::format("unknown initial data kind '{}'", init.kind));
  }
  std::vector<double> m;
  ops.momentum_of(u, m);
  return m;
}

EquationSpec SimConfig::equation() const { return EquationSpec::parse(f, g, params); }

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

double get_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw PdeError(fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end())
      throw PdeError(fmt::format("unknown key '{}' in {}", it.key(), where));
  }
}

std::map<std::string, double> number_map(const json& j, const char* where) {
  if (!j.is_object()) throw PdeError(fmt::format("'{}' must be an object", where));
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw PdeError(fmt::format("{}.{} must be a number", where, it.key()));
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

}  // namespace

SimConfig parse_sim_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw PdeError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw PdeError("config must be a JSON object");
  SimConfig c;
  try {
    reject_unknown(j,
                   {"L", "N", "dt", "t_final", "dealias", "equation", "initial", "output", "energy",
                    "blowup_threshold", "min_u_floor", "series_interval"},
                   "config");
    c.L = get_number(j, "L");
    const double N = get_number(j, "N");
    if (N != std::floor(N) || N < 1) throw PdeError("'N' must be a positive integer");
    c.N = static_cast<std::size_t>(N);
    c.dt = get_number(j, "dt");
    c.t_final = get_number(j, "t_final");
    if (j.contains("dealias")) {
      if (!j["dealias"].is_boolean()) throw PdeError("'dealias' must be a boolean");
      c.dealias = j["dealias"].get<bool>();
    }
    const json& eq = j.at("equation");
    reject_unknown(eq, {"f", "g", "params"}, "equation");
    if (!eq.at("f").is_string() || !eq.at("g").is_string()) throw PdeError("equation f and g must be strings");
    c.f = eq["f"].get<std::string>();
    c.g = eq["g"].get<std::string>();
    if (eq.contains("params")) c.params = number_map(eq["params"], "equation.params");
    const json& init = j.at("initial");
    reject_unknown(init, {"kind", "params"}, "initial");
    if (!init.at("kind").is_string()) throw PdeError("initial.kind must be a string");
    c.initial.kind = init["kind"].get<std::string>();
    if (init.contains("params")) c.initial.params = number_map(init["params"], "initial.params");
    if (j.contains("energy")) {
      reject_unknown(j["energy"], {"mu", "nu"}, "energy");
      if (j["energy"].contains("mu")) c.mu = get_number(j["energy"], "mu");
      if (j["energy"].contains("nu")) c.nu = get_number(j["energy"], "nu");
    }
    if (j.contains("blowup_threshold")) c.blowup_threshold = get_number(j, "blowup_threshold");
    if (j.contains("min_u_floor")) c.min_u_floor = get_number(j, "min_u_floor");
    if (j.contains("series_interval")) c.series_interval = get_number(j, "series_interval");
    if (j.contains("output")) {
      const json& o = j["output"];
      reject_unknown(o, {"series_path", "snapshot_times", "snapshot_path"}, "output");
      if (o.contains("series_path")) c.series_path = o["series_path"].get<std::string>();
      if (o.contains("snapshot_path")) c.snapshot_path = o["snapshot_path"].get<std::string>();
      if (o.contains("snapshot_times")) {
        if (!o["snapshot_times"].is_array()) throw PdeError("output.snapshot_times must be an array");
        for (const auto& t : o["snapshot_times"]) {
          if (!t.is_number()) throw PdeError("snapshot times must be numbers");
          c.snapshot_times.push_back(t.get<double>());
        }
      }
    }
  } catch (const json::exception& e) {
    throw PdeError(fmt::format("config schema violation: {}", e.what()));
  }
  Grid(c.L, c.N);
  if (!(c.dt > 0.0)) throw PdeError("'dt' must be positive");
  if (!(c.t_final > 0.0)) throw PdeError("'t_final' must be positive");
  if (!(c.series_interval > 0.0)) throw PdeError("'series_interval' must be positive");
  if (!(c.blowup_threshold > 0.0)) throw PdeError("'blowup_threshold' must be positive");
  if (!(c.min_u_floor >= 0.0)) throw PdeError("'min_u_floor' must be non-negative");
  for (double t : c.snapshot_times)
    if (t < 0.0 || t > c.t_final) throw PdeError(fmt::format("snapshot time {} outside [0, t_final]", t));
  return c;
}

std::string sim_config_to_json(const SimConfig& c) {
  json j;
  j["L"] = c.L;
  j["N"] = c.N;
  j["dt"] = c.dt;
  j["t_final"] = c.t_final;
  j["dealias"] = c.dealias;
  j["equation"] = {{"f", c.f}, {"g", c.g}, {"params", c.params}};
  j["initial"] = {{"kind", c.initial.kind}, {"params", c.initial.params}};
  j["energy"] = {{"mu", c.mu}, {"nu", c.nu}};
  j["blowup_threshold"] = c.blowup_threshold;
  j["min_u_floor"] = c.min_u_floor;
  j["series_interval"] = c.series_interval;
  j["output"] = {{"series_path", c.series_path},
                 {"snapshot_times", c.snapshot_times},
                 {"snapshot_path", c.snapshot_path}};
  return j.dump(2);
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::WaveBreaking: return "wave-breaking detected";
    case RunStatus::SingularityGuard: return "singularity guard";
  }
  return "?";
}

// ---------------------------------------------------------------------------

double crest_position(SpectralOps& ops, const GridState& s, bool negative) {
  const std::size_t N = s.u.size();
  const double sign = negative ? -1.0 : 1.0;
  std::size_t jmax = 0;
  for (std::size_t j = 1; j < N; ++j)
    if (sign * s.u[j] > sign * s.u[jmax]) jmax = j;
  const auto p = ops.interpolant(s.u);
  const double h = ops.grid().dx();
  double a = ops.grid().x(jmax) - h, b = ops.grid().x(jmax) + h;
  double da = sign * p.derivative(a), db = sign * p.derivative(b);
  if (!(da > 0.0 && db < 0.0)) return ops.grid().x(jmax);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    (sign * p.derivative(mid) > 0.0 ? a : b) = mid;
  }
  double x = std::fmod(0.5 * (a + b), ops.grid().L);
  return x < 0.0 ? x + ops.grid().L : x;
}

double crest_speed(const std::vector<double>& t, const std::vector<double>& crest, double L) {
  if (t.size() != crest.size() || t.size() < 2) throw PdeError("need at least two crest samples");
  std::vector<double> x(crest.size());
  x[0] = crest[0];
  for (std::size_t i = 1; i < crest.size(); ++i) x[i] = x[i - 1] + wrap(crest[i] - crest[i - 1], L);
  double tm = 0.0, xm = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    xm += x[i];
  }
  tm /= static_cast<double>(t.size());
  xm /= static_cast<double>(t.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - tm) * (x[i] - xm);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  return sxy / sxx;
}

RunResult run(const SimConfig& cfg, const StepObserver& observer) {
  const Grid grid(cfg.L, cfg.N);
  SpectralOps ops(grid, cfg.dealias);
  const NodalEquation eq(cfg.equation());
  const double floor = eq.singular_at_zero() ? cfg.min_u_floor : 0.0;

  std::vector<double> m0 = initial_momentum(ops, cfg.initial);
  ops.filter(m0);
  GridState state = make_state(ops, std::move(m0));

  RunResult res;
  res.series.mu = cfg.mu;
  res.series.nu = cfg.nu;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
  const auto stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.series_interval / cfg.dt)));
  std::set<std::size_t> snap_steps;
  for (double t : cfg.snapshot_times) snap_steps.insert(static_cast<std::size_t>(std::llround(t / cfg.dt)));

  double min_abs_u = std::numeric_limits<double>::infinity(), umax = 0.0, umin = 0.0;
  for (double u : state.u) {
    min_abs_u = std::min(min_abs_u, std::abs(u));
    umax = std::max(umax, u);
    umin = std::min(umin, u);
  }
  const bool negative_crest = -umin > umax;

  auto record = [&] {
    res.series.rows.push_back(diagnostics(state, grid, cfg.mu, cfg.nu));
    res.crest.push_back(crest_position(ops, state, negative_crest));
    res.max_cfl = std::max(res.max_cfl, cfl_number(eq, state, grid, cfg.dt));
  };
  auto snapshot = [&] {
    Snapshot s;
    s.t = state.t;
    s.x = grid.nodes();
    s.u = state.u;
    s.m = state.m;
    res.snapshots.push_back(std::move(s));
  };

  if (eq.singular_at_zero() && min_abs_u < 10.0 * cfg.min_u_floor) {
    res.status = RunStatus::SingularityGuard;
    res.message = fmt::format(
        "initial min |u| = {:.6g} is below 10 x the floor {:.3g} required for an equation singular at u = 0",
        min_abs_u, cfg.min_u_floor);
    res.final_state = state;
    res.series.rows.push_back(diagnostics(state, grid, cfg.mu, cfg.nu));
    return res;
  }

  try {
    record();
  } catch (const SingularityError& e) {
    res.status = RunStatus::SingularityGuard;
    res.message = e.what();
    res.final_state = state;
    return res;
  }
  if (snap_steps.count(0)) snapshot();

  for (std::size_t n = 1; n <= steps; ++n) {
    try {
      state = step_rk4(ops, eq, state, cfg.dt, floor);
      state.t = static_cast<double>(n) * cfg.dt;
    } catch (const SingularityError& e) {
      res.status = RunStatus::SingularityGuard;
      res.message = fmt::format("t = {:.6g}: {}", state.t, e.what());
      break;
    }
    res.steps = n;
    if (observer) observer(state);
    double sup_ux = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < state.ux.size(); ++j) {
      sup_ux = std::max(sup_ux, std::abs(state.ux[j]));
      finite = finite && std::isfinite(state.m[j]);
    }
    if (!finite || sup_ux > cfg.blowup_threshold) {
      res.status = RunStatus::WaveBreaking;
      res.message = fmt::format("t = {:.6g}: sup |u_x| = {:.6g} exceeds {:.3g}", state.t, sup_ux,
                                cfg.blowup_threshold);
      if (finite) record();
      break;
    }
    if (n % stride == 0 || n == steps) record();
    if (snap_steps.count(n)) snapshot();
  }
  if (res.max_cfl > 1.0)
    res.warnings.push_back(fmt::format("CFL number dt max|g| N/L reached {:.3g} > 1", res.max_cfl));
  res.final_state = std::move(state);
  return res;
}

// ---------------------------------------------------------------------------

const char* to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::Ok: return "ok";
    case BoundStatus::Violated: return "violated";
    case BoundStatus::NotApplicable: return "not applicable";
    case BoundStatus::Degenerate: return "degenerate (zero data)";
  }
  return "?";
}

BoundsReport check_apriori_bounds(const ConservedSeries& series, bool conserves_l2m_and_h1) {
  BoundsReport r;
  if (!conserves_l2m_and_h1) {
    r.status = BoundStatus::NotApplicable;
    r.message = "the equation does not conserve both the H1 norm and the L2 norm of m";
    return r;
  }
  if (series.rows.empty()) {
    r.status = BoundStatus::Degenerate;
    r.message = "empty series";
    return r;
  }
  r.h1_norm0 = std::sqrt(series.rows.front().H1sq);
  r.l2m_norm0 = std::sqrt(series.rows.front().L2msq);
  if (r.l2m_norm0 == 0.0) {
    r.status = BoundStatus::Degenerate;
    r.message = "zero initial data; the strict bounds 0 < 0 fail vacuously";
    return r;
  }
  const double bu = r.h1_norm0 / std::numbers::sqrt2;
  r.margin_norms = r.l2m_norm0 - bu;
  r.min_margin_u = std::numeric_limits<double>::infinity();
  r.min_margin_ux = std::numeric_limits<double>::infinity();
  if (!(r.margin_norms > 0.0)) ++r.violations;
  for (const auto& d : series.rows) {
    r.min_margin_u = std::min(r.min_margin_u, bu - d.sup_u);
    r.min_margin_ux = std::min(r.min_margin_ux, r.l2m_norm0 - d.sup_ux);
    if (!(d.sup_u < bu) || !(d.sup_ux < r.l2m_norm0)) ++r.violations;
  }
  r.status = r.violations ? BoundStatus::Violated : BoundStatus::Ok;
  r.message = fmt::format("{} violation(s) over {} rows", r.violations, series.rows.size());
  return r;
}

std::string series_csv(const ConservedSeries& s) {
  std::string out = "t,M,H1sq,L2msq,E,sup_u,sup_ux,min_u\n";
  for (const auto& d : s.rows)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", d.t, d.M,
                       d.H1sq, d.L2msq, d.E, d.sup_u, d.sup_ux, d.min_u);
  return out;
}

std::string snapshot_csv(const Snapshot& s) {
  std::string out = "x,u,m\n";
  for (std::size_t j = 0; j < s.x.size(); ++j)
    out += fmt::format("{:.17g},{:.17g},{:.17g}\n", s.x[j], s.u[j], s.m[j]);
  return out;
}

}  // namespace peakon::pde
