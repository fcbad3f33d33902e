#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "peakon/pde.hpp"

using namespace peakon;
using namespace peakon::pde;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double max_abs(const std::vector<double>& a) {
  double d = 0.0;
  for (double v : a) d = std::max(d, std::abs(v));
  return d;
}

NodalEquation nodal(const char* f, const char* g) { return NodalEquation(EquationSpec::parse(f, g)); }

GridState run_to(SpectralOps& ops, const NodalEquation& eq, GridState s, double T, std::size_t steps) {
  const double dt = T / static_cast<double>(steps);
  for (std::size_t n = 0; n < steps; ++n) s = step_rk4(ops, eq, s, dt);
  return s;
}

SimConfig singular_config() {
  SimConfig c;
  c.L = 10.0;
  c.N = 256;
  c.t_final = 2.0;
  c.f = "ux/u^3";
  c.g = "1/u^2";
  c.initial.kind = "cosine_offset";
  c.initial.params = {{"offset", 2.0}, {"amplitude", 0.5}};
  return c;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(10.0, 100), PdeError);
  CHECK_THROWS_AS(Grid(10.0, 8), PdeError);
  CHECK_THROWS_AS(Grid(-1.0, 64), PdeError);
  Grid g(kTwoPi, 64);
  CHECK(g.x(1) == doctest::Approx(kTwoPi / 64));
  CHECK(g.k(3) == doctest::Approx(3.0));
}

TEST_CASE("Helmholtz inversion of trigonometric polynomials") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (double L : {kTwoPi, 40.0}) {
    Grid g(L, 128);
    SpectralOps ops(g);
    std::vector<double> u(g.N, 0.0), m, uu, ux;
    for (int k = 0; k < 63; ++k) {
      const double a = nd(rng), b = nd(rng), w = kTwoPi * k / L;
      for (std::size_t j = 0; j < g.N; ++j) u[j] += a * std::cos(w * g.x(j)) + b * std::sin(w * g.x(j));
    }
    ops.momentum_of(u, m);
    ops.helmholtz(m, uu, ux);
    CHECK(max_abs_diff(u, uu) / max_abs(u) < 1e-12);
    GridState s = make_state(ops, m);
    CHECK(helmholtz_residual(ops, s) < 1e-12);
  }
}

TEST_CASE("spectral derivative and interpolant") {
  Grid g(kTwoPi, 64);
  SpectralOps ops(g);
  std::vector<double> v(g.N), d;
  for (std::size_t j = 0; j < g.N; ++j) v[j] = std::sin(3.0 * g.x(j));
  ops.derivative(v, d);
  for (std::size_t j = 0; j < g.N; ++j) CHECK(d[j] == doctest::Approx(3.0 * std::cos(3.0 * g.x(j))).scale(1.0));
  auto p = ops.interpolant(v);
  CHECK(p.value(0.123) == doctest::Approx(std::sin(0.369)).epsilon(1e-12));
  CHECK(p.derivative(0.123) == doctest::Approx(3.0 * std::cos(0.369)).epsilon(1e-12));
}

TEST_CASE("right-hand side: trivial states") {
  Grid g(kTwoPi, 64);
  SpectralOps ops(g);
  const NodalEquation ch = nodal("ux", "u");
  GridState zero = make_state(ops, std::vector<double>(g.N, 0.0));
  CHECK(max_abs(rhs(ops, ch, zero)) == 0.0);
  GridState next = step_rk4(ops, ch, zero, 0.01);
  CHECK(max_abs(next.m) == 0.0);

  // Constant state: only -f(c0, 0) m survives.
  const NodalEquation eq = nodal("u + 1", "u^2");
  GridState c = make_state(ops, std::vector<double>(g.N, 1.5));
  for (double r : rhs(ops, eq, c)) CHECK(r == doctest::Approx(-2.5 * 1.5).epsilon(1e-13));
}

TEST_CASE("right-hand side: CH on a cosine matches the exact derivative") {
  Grid g(kTwoPi, 64);
  SpectralOps ops(g);
  std::vector<double> m(g.N);
  for (std::size_t j = 0; j < g.N; ++j) m[j] = 2.0 + 2.0 * std::cos(g.x(j));  // u = 2 + cos x
  GridState s = make_state(ops, m);
  const auto r = rhs(ops, nodal("ux", "u"), s);
  double err = 0.0;
  for (std::size_t j = 0; j < g.N; ++j) {
    const double x = g.x(j), u = 2.0 + std::cos(x), ux = -std::sin(x), mm = 2.0 + 2.0 * std::cos(x),
                 mx = -2.0 * std::sin(x);
    err = std::max(err, std::abs(r[j] - (-2.0 * ux * mm - u * mx)));
  }
  CHECK(err < 1e-12);
}

TEST_CASE("RK4 temporal order by step halving") {
  Grid g(40.0, 256);
  SpectralOps ops(g);
  std::vector<double> m = initial_momentum(ops, InitialData{});
  GridState s0 = make_state(ops, m);
  const NodalEquation ch = nodal("ux", "u");
  const GridState a = run_to(ops, ch, s0, 1.0, 25), b = run_to(ops, ch, s0, 1.0, 50),
                  c = run_to(ops, ch, s0, 1.0, 100);
  const double ratio = max_abs_diff(a.m, b.m) / max_abs_diff(b.m, c.m);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("time reversal") {
  Grid g(40.0, 256);
  SpectralOps ops(g);
  GridState s0 = make_state(ops, initial_momentum(ops, InitialData{}));
  const NodalEquation ch = nodal("ux", "u");
  GridState fwd = step_rk4(ops, ch, s0, 1e-3);
  GridState back = step_rk4(ops, ch, fwd, -1e-3);
  CHECK(max_abs_diff(back.m, s0.m) / max_abs(s0.m) < 1e-10);
}

TEST_CASE("discrete conservation: CH, DP and the singular family") {
  SimConfig ch;
  ch.N = 256;
  ch.t_final = 2.0;
  RunResult r = run(ch);
  REQUIRE(r.status == RunStatus::Completed);
  CHECK(r.series.drift(&Diagnostics::M) < 1e-10);
  CHECK(r.series.drift(&Diagnostics::H1sq) < 1e-8);
  CHECK(r.series.drift(&Diagnostics::L2msq) > 1e-3);
  CHECK(r.series.rows.size() == 21);
  CHECK(r.warnings.empty());

  SimConfig dp = ch;
  dp.f = "2*ux";
  r = run(dp);
  REQUIRE(r.status == RunStatus::Completed);
  CHECK(r.series.drift(&Diagnostics::M) < 1e-10);
  CHECK(r.series.drift(&Diagnostics::H1sq) > 1e-3);

  r = run(singular_config());
  REQUIRE(r.status == RunStatus::Completed);
  CHECK(r.series.drift(&Diagnostics::H1sq) < 1e-10);
  CHECK(r.series.drift(&Diagnostics::L2msq) < 1e-10);
  CHECK(r.series.drift(&Diagnostics::M) > 1e-5);
}

TEST_CASE("a priori bounds") {
  RunResult r = run(singular_config());
  BoundsReport b = check_apriori_bounds(r.series, true);
  CHECK(b.status == BoundStatus::Ok);
  CHECK(b.margin_norms > 0.0);
  CHECK(b.min_margin_u > 0.0);
  CHECK(b.min_margin_ux > 0.0);

  CHECK(check_apriori_bounds(r.series, false).status == BoundStatus::NotApplicable);

  ConservedSeries zero;
  zero.rows.push_back(Diagnostics{});
  CHECK(check_apriori_bounds(zero, true).status == BoundStatus::Degenerate);

  ConservedSeries bad = r.series;
  bad.rows.back().sup_u = 1e3;
  BoundsReport v = check_apriori_bounds(bad, true);
  CHECK(v.status == BoundStatus::Violated);
  CHECK(v.violations == 1);
}

TEST_CASE("min-u guard") {
  Grid g(kTwoPi, 64);
  SpectralOps ops(g);
  const NodalEquation sing = nodal("ux/u^3", "1/u^2");
  CHECK(sing.singular_at_zero());
  CHECK_FALSE(nodal("ux", "u").singular_at_zero());
  std::vector<double> m(g.N, 1.0);
  GridState s = make_state(ops, m);
  s.u[5] = 5e-4;
  CHECK_THROWS_AS(rhs(ops, sing, s, 1e-3), SingularityError);

  // m decays like exp(-t/u), so u is driven into the floor.
  SimConfig c = singular_config();
  c.f = "1/u";
  c.g = "u";
  c.t_final = 50.0;
  c.dt = 1e-2;
  double lowest = 1e300;
  RunResult r = run(c, [&](const GridState& st) {
    for (double u : st.u) lowest = std::min(lowest, std::abs(u));
  });
  CHECK(r.status == RunStatus::SingularityGuard);
  CHECK(lowest >= c.min_u_floor);
  CHECK(r.series.rows.size() >= 2);

  // Data that starts too close to zero is refused up front.
  c = singular_config();
  c.initial.params = {{"offset", 0.5}, {"amplitude", 0.495}};
  r = run(c);
  CHECK(r.status == RunStatus::SingularityGuard);
  CHECK(r.steps == 0);
}

TEST_CASE("solitary-wave data under the singular equation hits the guard") {
  SimConfig c;
  c.L = 60.0;
  c.N = 1024;
  c.f = "ux/u^3";
  c.g = "1/u^2";
  c.initial.kind = "solitary_wave";
  c.initial.params = {{"b", 0.5}, {"c", 1.0}};
  RunResult r = run(c);
  CHECK(r.status == RunStatus::SingularityGuard);
}

TEST_CASE("wave breaking is reported with the partial series") {
  SimConfig c;
  c.N = 512;
  c.t_final = 5.0;
  c.f = "0";
  c.g = "u^2 - ux^2";
  RunResult r = run(c);
  CHECK(r.status == RunStatus::WaveBreaking);
  CHECK(r.message.find("sup |u_x|") != std::string::npos);
  CHECK_FALSE(r.series.rows.empty());
  CHECK(r.final_state.t < c.t_final);
}

TEST_CASE("crest tracking") {
  Grid g(10.0, 128);
  SpectralOps ops(g);
  std::vector<double> u(g.N), m;
  for (std::size_t j = 0; j < g.N; ++j) u[j] = std::cos(kTwoPi * (g.x(j) - 3.3) / 10.0);
  ops.momentum_of(u, m);
  GridState s = make_state(ops, m);
  CHECK(crest_position(ops, s) == doctest::Approx(3.3).epsilon(1e-10));
  CHECK(crest_position(ops, s, true) == doctest::Approx(8.3).epsilon(1e-10));
  // Unwrapping across the period.
  CHECK(crest_speed({0.0, 1.0, 2.0}, {8.0, 9.5, 1.0}, 10.0) == doctest::Approx(1.5));
}

TEST_CASE("config parsing") {
  SimConfig c = parse_sim_config(R"({"L": 20, "N": 128, "dt": 0.002, "t_final": 1,
      "equation": {"f": "a*ux", "g": "u", "params": {"a": 2}},
      "initial": {"kind": "gaussian", "params": {"amplitude": 0.5}},
      "output": {"series_path": "s.csv", "snapshot_times": [0, 0.5], "snapshot_path": "snap.csv"}})");
  CHECK(c.L == 20.0);
  CHECK(c.N == 128);
  CHECK(c.params.at("a") == 2.0);
  CHECK(c.snapshot_times.size() == 2);
  CHECK(c.initial.params.at("amplitude") == 0.5);
  SimConfig back = parse_sim_config(sim_config_to_json(c));
  CHECK(back.dt == c.dt);
  CHECK(back.f == c.f);

  CHECK_THROWS_AS(parse_sim_config("{"), PdeError);
  CHECK_THROWS_AS(parse_sim_config(R"({"N": 100})"), PdeError);
  CHECK_THROWS_AS(parse_sim_config(R"({"dt": -1})"), PdeError);
  CHECK_THROWS_AS(parse_sim_config(R"({"bogus": 1})"), PdeError);
  CHECK_THROWS_AS(parse_sim_config(R"({"initial": {"kind": "square"}})"), PdeError);
  CHECK_THROWS_AS(parse_sim_config(R"({"equation": {"f": "ux +", "g": "u"}})"), PdeError);
  CHECK_THROWS_AS(parse_sim_config(R"({"initial": {"kind": "gaussian", "params": {"height": 1}}})"),
                  PdeError);
}

TEST_CASE("runs are deterministic and CSV is stable") {
  SimConfig c;
  c.N = 128;
  c.t_final = 0.5;
  c.snapshot_times = {0.25};
  RunResult a = run(c), b = run(c);
  CHECK(series_csv(a.series) == series_csv(b.series));
  REQUIRE(a.snapshots.size() == 1);
  CHECK(a.snapshots[0].t == doctest::Approx(0.25));
  const std::string csv = series_csv(a.series);
  CHECK(csv.rfind("t,M,H1sq,L2msq,E,sup_u,sup_ux,min_u\n", 0) == 0);
  CHECK(snapshot_csv(a.snapshots[0]).rfind("x,u,m\n", 0) == 0);
}

TEST_CASE("mollified peakon has the requested crest height") {
  Grid g(2.0, 1024);
  SpectralOps ops(g);
  InitialData init{"mollified_peakon", {{"amplitude", 1.0}}};
  GridState s = make_state(ops, initial_momentum(ops, init));
  // Smoothing lowers the kink by O(width).
  CHECK(max_abs(s.u) < 1.0);
  CHECK(max_abs(s.u) > 0.99);
  CHECK(crest_position(ops, s) == doctest::Approx(1.0).epsilon(1e-9));
}
