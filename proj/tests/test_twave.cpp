#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "peakon/parse.hpp"
#include "peakon/pde.hpp"
#include "peakon/twave.hpp"

using namespace peakon;
using namespace peakon::twave;

TEST_CASE("solitary peak height law") {
  CHECK(solitary_peak_height(0.5, 1.0) == doctest::Approx(0.6614378277661477).epsilon(1e-15));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> bd(0.02, 0.98), cd(0.1, 5.0);
  for (int i = 0; i < 20; ++i) {
    const double b = bd(rng), c = cd(rng);
    const double xi0 = 0.0;
    WaveProfile p = solitary_profile(b, c, std::span<const double>(&xi0, 1));
    CHECK(std::abs(p.U[0] - b * std::sqrt(2.0 - b * b) / std::sqrt(c)) < 1e-12);
  }
  CHECK(solitary_peak_height(1e-9, 1.0) < 1e-8);
  CHECK_THROWS_AS(solitary_peak_height(1.0, 1.0), TwaveError);
  CHECK_THROWS_AS(solitary_peak_height(0.5, 0.0), TwaveError);
  CHECK_THROWS_AS(solitary_peak_height(-0.2, 1.0), TwaveError);
}

TEST_CASE("solitary profile is symmetric and monotone on each side") {
  const auto xi = uniform_grid(-15.0, 15.0, 3001);
  for (double b : {0.3, 0.5, 0.9}) {
    WaveProfile p = solitary_profile(b, 1.3, xi);
    for (std::size_t i = 0; i < xi.size(); ++i) CHECK(std::abs(p.U[i] - p.U[xi.size() - 1 - i]) <= 1e-10);
    for (std::size_t i = 1501; i < xi.size(); ++i) CHECK(p.U[i] < p.U[i - 1]);
    WaveProfile neg = solitary_profile(b, 1.3, xi, -1);
    CHECK(neg.U[1500] == -p.U[1500]);
  }
}

TEST_CASE("peak ordering against the peakon") {
  const auto b = uniform_grid(0.01, 0.99, 99);
  for (double v : b) CHECK(v * std::sqrt(2.0 - v * v) < 1.0);
}

TEST_CASE("solitary residuals and first integrals") {
  for (auto [b, c] : {std::pair{0.3, 1.0}, {0.5, 1.0}, {0.9, 2.0}}) {
    CAPTURE(b);
    const auto xi = uniform_grid(-15.0, 15.0, 30001);
    SolitaryResiduals r = solitary_ode_residual(solitary_profile(b, c, xi));
    CHECK(r.ode1.max < 1e-10);
    // The third-order residual carries U^-3 factors, so FD roundoff grows in fast-decaying tails.
    if (b < 0.6) CHECK(r.ode3.rms < 1e-6);
    CHECK(r.c2 == doctest::Approx(2.0 - b * b));
    CHECK(r.c1 == doctest::Approx(0.25 * (2.0 - b * b) * (2.0 - b * b)));
    CHECK(r.fi_l2.max_rel_dev < 1e-8);
    CHECK(r.fi_h1.max_rel_dev < 1e-8);
  }
  const auto coarse = uniform_grid(-1.0, 1.0, 5);
  CHECK_THROWS_AS(solitary_ode_residual(solitary_profile(0.5, 1.0, coarse)), TwaveError);
}

TEST_CASE("closed form agrees with direct quadrature") {
  for (auto [b, c] : {std::pair{0.3, 1.0}, {0.5, 1.0}, {0.9, 2.0}}) {
    QuadratureCheck q = quadrature_crosscheck(b, c);
    CHECK(q.max_discrepancy <= 1e-6);
    CHECK(q.start_offset > 0.0);
  }
}

TEST_CASE("solitary tail decay rate") {
  for (auto [b, lo, hi] : {std::tuple{0.5, 10.0, 12.0}, {0.9, 10.0, 12.0}, {0.3, 25.0, 30.0}}) {
    CAPTURE(b);
    const double slope =
        (std::log(solitary_height_at(hi, b, 1.0)) - std::log(solitary_height_at(lo, b, 1.0))) / (hi - lo);
    const double c2 = 2.0 - b * b;
    CHECK(std::abs(-slope / (std::sqrt(2.0 - c2) / std::sqrt(2.0)) - 1.0) < 0.01);
  }
}

TEST_CASE("speed scaling of the solitary profile") {
  const auto xi = uniform_grid(-8.0, 8.0, 161);
  WaveProfile one = solitary_profile(0.6, 1.0, xi), four = solitary_profile(0.6, 4.0, xi);
  // The ODE depends on U only through c U^2.
  for (std::size_t i = 0; i < xi.size(); ++i) CHECK(four.U[i] == doctest::Approx(0.5 * one.U[i]).epsilon(1e-12));
}

TEST_CASE("height and position are inverse") {
  for (double U : {0.6, 0.3, 1e-3, 1e-40}) {
    const double x = solitary_abs_xi(U, 0.5, 1.0);
    CHECK(solitary_height_at(x, 0.5, 1.0) == doctest::Approx(U).epsilon(1e-12));
  }
  CHECK_THROWS_AS(solitary_abs_xi(0.7, 0.5, 1.0), TwaveError);
}

TEST_CASE("peakon speed relation") {
  CHECK(peakon_speed(1.0) == 1.0);
  CHECK(peakon_speed(2.0) == 0.25);
  CHECK(peakon_speed(-2.0) == 0.25);
  CHECK_THROWS_AS(peakon_speed(0.0), TwaveError);
  for (double a : {1e-3, 0.1, 3.0}) CHECK(1.0 / std::sqrt(peakon_speed(a)) == doctest::Approx(a));
  const auto xi = uniform_grid(-2.0, 2.0, 5);
  WaveProfile p = twave::peakon(2.0, xi);
  CHECK(p.c == 0.25);
  CHECK(p.U[2] == 2.0);
  CHECK(p.U[0] == doctest::Approx(2.0 * std::exp(-2.0)));
  CHECK(p.Uprime[3] == doctest::Approx(-2.0 * std::exp(-1.0)));
}

TEST_CASE("Hamiltonian family: first integral on a periodic CH wave") {
  HamiltonianFamily ch(parse("1"), parse("0"));
  const double c = 2.0, c1 = -0.5;
  PeriodicWave w = hamiltonian_periodic_wave(ch, c, c1, 1.2, 256);
  CHECK(w.period > 0.0);
  CHECK(w.U_min < 1.0);

  // U'' from the spectral derivative of the periodic samples.
  pde::SpectralOps ops(pde::Grid(w.period, 256), false);
  std::vector<double> U1, U2;
  ops.derivative(w.U, U1);
  ops.second_derivative(w.U, U2);
  double lo = 1e300, hi = -1e300, c2lo = 1e300, c2hi = -1e300;
  for (std::size_t i = 0; i < w.U.size(); ++i) {
    CHECK(U1[i] == doctest::Approx(w.Uprime[i]).epsilon(1e-8).scale(1.0));
    auto v = ch.first_integrals(w.U[i], U1[i], U2[i], c);
    lo = std::min(lo, v.fi_mom);
    hi = std::max(hi, v.fi_mom);
    c2lo = std::min(c2lo, v.fi_h1);
    c2hi = std::max(c2hi, v.fi_h1);
  }
  CHECK(hi - lo < 1e-6);
  CHECK(0.5 * (hi + lo) == doctest::Approx(c1).epsilon(1e-6));
  CHECK(c2hi - c2lo < 1e-6);
}

TEST_CASE("Hamiltonian family: trivial wave and solitary verdicts") {
  HamiltonianFamily ch(parse("1"), parse("0"));
  auto z = ch.first_integrals(0.0, 0.0, 0.0, 1.7);
  CHECK(z.fi_mom == 0.0);
  CHECK(z.fi_h1 == 0.0);
  CHECK(z.ode == 0.0);

  HamiltonianFamily mch(parse("0"), parse("u"));
  CHECK(mch.g1(2.0) == 2.0);
  CHECK(mch.G1(2.0) == doctest::Approx(2.0));
  CHECK(mch.G1_tilde(2.0) == doctest::Approx(1.0));
  auto v = mch.solitary_analysis();
  CHECK_FALSE(v.arbitrary_speed);
  CHECK_FALSE(v.fixed_speed.has_value());
  CHECK(v.message.find("no smooth solitary wave") != std::string::npos);

  HamiltonianFamily shifted(parse("u"), parse("3 + u^2"));
  auto s = shifted.solitary_analysis();
  REQUIRE(s.fixed_speed.has_value());
  CHECK(*s.fixed_speed == 3.0);
  CHECK(shifted.F1(2.0) == doctest::Approx(2.0));

  CHECK_THROWS_AS(HamiltonianFamily(parse("exp(u)"), parse("0")), TwaveError);
}

TEST_CASE("Hamiltonian family: decay forces U'^2 = U^2") {
  HamiltonianFamily ch(parse("1"), parse("0"));
  // A smooth bump violates U'^2 = U^2 wherever U + 0 - c is away from zero.
  std::vector<double> U, U1;
  for (double x = -5.0; x <= 5.0; x += 0.1) {
    U.push_back(std::exp(-x * x));
    U1.push_back(-2.0 * x * std::exp(-x * x));
  }
  auto d = ch.degeneracy(U, U1, 3.0);
  CHECK(d.forced == d.total);
  CHECK(d.max_violation > 0.5);

  // The peakon branch U' = -U satisfies it exactly.
  std::vector<double> P, P1;
  for (double x = 0.1; x <= 5.0; x += 0.1) {
    P.push_back(std::exp(-x));
    P1.push_back(-std::exp(-x));
  }
  CHECK(ch.degeneracy(P, P1, 3.0).max_violation == 0.0);
}
