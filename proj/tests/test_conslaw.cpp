#include <doctest.h>

#include <random>

#include "peakon/conslaw.hpp"
#include "peakon/jet.hpp"
#include "peakon/parse.hpp"
#include "test_util.hpp"

using namespace peakon;

namespace {

const Expr u = var_u();
const Expr ux = var_ux();
const Expr m = var_m();
const Expr Y = pow(u, 2) - pow(ux, 2);

const SamplingPolicy kPolicy{};

EquationSpec eqn(const char* f, const char* g, ParamMap p = {}) {
  return EquationSpec::parse(f, g, std::move(p));
}

bool zero(const Expr& e, const ParamMap& p = {}) { return is_zero(e, p, kPolicy).zero(); }

struct Row {
  const char* name;
  const char* f;
  const char* g;
  bool momentum, h1, l2m, wh2;
};

// Integrable multi-peakon equations and their conservation properties.
const Row kTable[] = {
    {"Camassa-Holm", "ux", "u", true, true, false, false},
    {"Degasperis-Procesi", "2*ux", "u", true, false, false, false},
    {"Novikov", "u*ux", "u^2", false, true, false, false},
    {"modified Camassa-Holm", "0", "u^2 - ux^2", true, true, false, false},
};

}  // namespace

TEST_CASE("EquationSpec validation") {
  CHECK_THROWS_AS(eqn("0", "0"), SpecError);
  CHECK_THROWS_AS(eqn("1", "2.5"), SpecError);
  CHECK_THROWS_AS(eqn("m", "u"), SpecError);
  CHECK_THROWS_AS(eqn("ux", "utx"), SpecError);
  CHECK_THROWS_AS(EquationSpec(ux * Expr::param("a"), u), SpecError);
  CHECK_THROWS_AS(eqn("ux", "q"), ParseError);
  CHECK_NOTHROW(eqn("a*ux", "u", {{"a", 2.0}}));
  CHECK_NOTHROW(eqn("0", "u"));
}

TEST_CASE("momentum condition") {
  CHECK(check_momentum(eqn("ux", "u"), kPolicy).conserved());
  LawVerdict nov = check_momentum(eqn("u*ux", "u^2"), kPolicy);
  CHECK(nov.evidence.nonzero());
  CHECK(nov.evidence.witness.has_value());
  CHECK(check_momentum(eqn("0", "u^3*ux + exp(u)"), kPolicy).conserved());
}

TEST_CASE("H1 condition") {
  CHECK(check_h1(eqn("2*ux", "u"), kPolicy).evidence.nonzero());
  CHECK(check_h1(eqn("u*ux", "u^2"), kPolicy).conserved());
  CHECK(check_h1(eqn("0", "u^2 - ux^2"), kPolicy).conserved());
}

TEST_CASE("gradient-energy solution sets") {
  GradEnergySet s = check_grad_energy(eqn("a*ux/u^3", "a/u^2", {{"a", 1.0}}), kPolicy);
  REQUIRE(s.kind == SetKind::Line);
  CHECK(s.nu == doctest::Approx(0.0));
  CHECK(std::abs(s.direction[1]) < 1e-12);
  CHECK(s.contains(2.0, 0.0));
  CHECK(s.contains(7.5, 0.0));
  CHECK_FALSE(s.contains(2.0, 1.0));
  CHECK(s.has_weighted_h2());

  s = check_grad_energy(eqn("-u*ux", "u^2"), kPolicy);
  REQUIRE(s.kind == SetKind::Point);
  CHECK(s.mu == doctest::Approx(2.0));
  CHECK(s.nu == doctest::Approx(0.0));
  CHECK_FALSE(s.has_weighted_h2());

  CHECK(check_grad_energy(eqn("ux", "u"), kPolicy).kind == SetKind::Empty);

  // f = alpha u_x, g = -2 alpha u + beta: mu = 2 with nu free.
  s = check_grad_energy(eqn("3*ux", "-6*u + 1"), kPolicy);
  REQUIRE(s.kind == SetKind::Line);
  CHECK(s.mu == doctest::Approx(2.0));
  CHECK(std::abs(s.direction[0]) < 1e-12);
  CHECK(s.contains(2.0, -4.0));
  CHECK_FALSE(s.has_weighted_h2());

  // f = alpha u_x/(u+beta)^3, g = alpha/(u+beta)^2: nu = (mu-2) beta.
  s = check_grad_energy(eqn("2*ux/(u + b)^3", "2/(u + b)^2", {{"b", 0.5}}), kPolicy);
  REQUIRE(s.kind == SetKind::Line);
  CHECK(s.contains(4.0, 1.0));
  CHECK_FALSE(s.contains(4.0, 0.0));
  CHECK_FALSE(s.has_weighted_h2());
}

TEST_CASE("classify reproduces the integrable-equation table") {
  for (const Row& row : kTable) {
    CAPTURE(row.name);
    ConservationReport r = classify(eqn(row.f, row.g), kPolicy);
    CHECK(r.determinate());
    CHECK(r.momentum.conserved() == row.momentum);
    CHECK(r.h1.conserved() == row.h1);
    CHECK((r.l2m == Answer::Yes) == row.l2m);
    CHECK((r.weighted_h2 == Answer::Yes) == row.wh2);
    CHECK(r.l2m != Answer::Indeterminate);
    CHECK(r.flux_notes.empty());
  }
}

TEST_CASE("classify: singular family and Hamiltonian instances") {
  ConservationReport r = classify(eqn("a*ux/u^3", "a/u^2", {{"a", 1.0}}), kPolicy);
  CHECK_FALSE(r.momentum.conserved());
  CHECK(r.momentum.determinate());
  CHECK(r.h1.conserved());
  CHECK(r.grad_energy.kind == SetKind::Line);
  CHECK(r.l2m == Answer::Yes);
  CHECK(r.weighted_h2 == Answer::Yes);

  r = classify(eqn("ux*(u^2-ux^2)", "u*(u^2-ux^2) + (u^2-ux^2)"), kPolicy);
  CHECK(r.momentum.conserved());
  CHECK(r.h1.conserved());

  // Momentum and gradient energy never coexist in the u^-2 family...
  for (double a : {0.5, 1.0, 3.0}) {
    ConservationReport c = classify(eqn("a*ux/u^3", "a/u^2", {{"a", a}}), kPolicy, false);
    CHECK_FALSE(c.momentum.conserved());
    CHECK(c.grad_energy.kind == SetKind::Line);
  }
  // ...but f = alpha u_x, g = -2 alpha u + beta has both (T = u and T = m^2).
  ConservationReport both = classify(eqn("3*ux", "-6*u + 1"), kPolicy);
  CHECK(both.momentum.conserved());
  CHECK(both.l2m == Answer::Yes);
}

TEST_CASE("verdicts are invariant under scaling f, g") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> lam(0.1, 10.0);
  for (const Row& row : kTable) {
    const EquationSpec eq = eqn(row.f, row.g);
    const EquationSpec scaled = eq.scaled(lam(rng));
    ConservationReport a = classify(eq, kPolicy, false), b = classify(scaled, kPolicy, false);
    CHECK(a.momentum.conserved() == b.momentum.conserved());
    CHECK(a.h1.conserved() == b.h1.conserved());
    CHECK(a.l2m == b.l2m);
    CHECK(a.weighted_h2 == b.weighted_h2);
  }
}

TEST_CASE("flux builders") {
  FluxResult ch = flux_momentum(eqn("ux", "u"), kPolicy);
  REQUIRE(ch);
  CHECK(zero(ch.current->T - u));
  CHECK(zero(ch.current->Phi - (u * m - var_utx() + 0.5 * Y)));
  CHECK(zero(ch.current->Q - 1.0));

  const EquationSpec mch = eqn("0", "u^2 - ux^2");
  FluxResult h = flux_h1(mch, kPolicy);
  REQUIRE(h);
  CHECK(zero(h.current->T - (pow(ux, 2) + pow(u, 2))));
  // h1(y) = -y, h0 = 0 and h = y/(2u) in the H1 family form.
  const Expr hh = Y / (2.0 * u);
  const Expr expected = -2.0 * u * var_utx() + 2.0 * pow(u, 2) * hh * m + u * Y * m - 0.5 * pow(Y, 2);
  CHECK(zero(h.current->Phi - expected));
  CHECK(zero(h.current->Q - 2.0 * u));

  FluxResult l2 = flux_grad_energy(eqn("-u*ux", "u^2"), 2.0, 0.0, kPolicy);
  REQUIRE(l2);
  CHECK(zero(l2.current->T - pow(m, 2)));
  CHECK(zero(l2.current->Phi - pow(u, 2) * pow(m, 2)));

  CHECK_FALSE(flux_momentum(eqn("u*ux", "u^2"), kPolicy));
  CHECK_FALSE(flux_grad_energy(eqn("ux", "u"), 2.0, 0.0, kPolicy));
}

TEST_CASE("flux builders with a pole term") {
  // f = u_x (1 + y) + 2 u / y.
  const EquationSpec eq = eqn("ux*(1 + (u^2-ux^2)) + 2*u/(u^2-ux^2)", "u^2");
  auto split = split_pole_form(eq.f(), {}, kPolicy);
  REQUIRE(split);
  CHECK(split->k0 == doctest::Approx(2.0));
  CHECK(split->form == "polynomial");
  CHECK(zero(split->K1 - (u + 0.5 * pow(u, 2))));
  FluxResult r = flux_momentum(eq, kPolicy);
  REQUIRE(r);
  CHECK(characteristic_check(*r.current, eq, kPolicy).conserved());

  // A power-law k1 and its antiderivative.
  auto pw = split_pole_form(ux * pow(Y, -2) * 3.0, {}, kPolicy);
  REQUIRE(pw);
  CHECK(pw->form == "power");
  CHECK(pw->k0 == doctest::Approx(0.0));
  CHECK(zero(pw->K1 + 3.0 / u));

  CHECK_FALSE(split_pole_form(ux * exp(u), {}, kPolicy));
}

TEST_CASE("antiderivatives in u") {
  auto G = antiderivative_in_u(3.0 * pow(u, 2) - 2.0, {}, kPolicy);
  REQUIRE(G);
  CHECK(zero(*G - (pow(u, 3) - 2.0 * u)));
  G = antiderivative_in_u(2.0 / pow(u + 0.5, 2), {}, kPolicy);
  REQUIRE(G);
  CHECK(zero(*G + 2.0 / (u + 0.5)));
  G = antiderivative_in_u(1.0 / u, {}, kPolicy);
  REQUIRE(G);
  CHECK(zero(*G - 0.5 * ln(pow(u, 2))));
  CHECK_FALSE(antiderivative_in_u(exp(u), {}, kPolicy));
  CHECK_FALSE(antiderivative_in_u(ux, {}, kPolicy));
}

TEST_CASE("characteristic equation checks") {
  // Purely spatial conservation law for f = -2 u u_x, g = u^2 - 3 u_x^2.
  const EquationSpec eq = eqn("-2*u*ux", "u^2 - 3*ux^2");
  const Expr g = eq.g();
  ConservedCurrent cur;
  cur.T = Expr::constant(0.0);
  cur.Phi = pow(pow(u, 3) - u * pow(ux, 2) - g * m + var_utx(), 2) -
            pow(pow(u, 2) * ux - pow(ux, 3) + var_ut(), 2);
  cur.Q = 2.0 * u * (pow(ux, 2) - pow(u, 2)) + 2.0 * g * m - 2.0 * var_utx();
  LawVerdict v = characteristic_check(cur, eq, kPolicy);
  CHECK(v.conserved());
  CHECK(v.evidence.max_rel < 1e-9);

  const EquationSpec ch = eqn("ux", "u");
  FluxResult mom = flux_momentum(ch, kPolicy);
  REQUIRE(mom);
  CHECK(characteristic_check(*mom.current, ch, kPolicy).conserved());

  ConservedCurrent bad = *mom.current;
  bad.Phi = bad.Phi + u;
  LawVerdict b = characteristic_check(bad, ch, kPolicy);
  CHECK(b.evidence.nonzero());
  REQUIRE(b.evidence.witness.has_value());
  CHECK(std::abs(b.evidence.witness->value) > 0.1);
}

TEST_CASE("multiplier conditions") {
  auto [eu, eut] = multiplier_conditions(m, Expr::constant(1.0), eqn("ux", "u"));
  CHECK(zero(eu));
  CHECK(zero(eut));

  std::tie(eu, eut) = multiplier_conditions(pow(ux, 2) + pow(u, 2), 2.0 * u, eqn("0", "u^2 - ux^2"));
  CHECK(zero(eu));
  CHECK(zero(eut));

  const Expr T = pow(u - m, 2) + 2.0 * pow(ux, 2) + pow(u, 2);
  std::tie(eu, eut) = multiplier_conditions(T, 2.0 * m, eqn("-u*ux", "u^2"));
  CHECK(zero(eu));
  CHECK(zero(eut));

  // Wrong multiplier for the momentum density.
  std::tie(eu, eut) = multiplier_conditions(m, 2.0 * u, eqn("ux", "u"));
  CHECK_FALSE((zero(eu) && zero(eut)));
}

TEST_CASE("kernel family of E_u(k m) = 0 and its potential") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> c(4);
    for (double& x : c) x = coef(rng);
    const int k0 = trial % 2;
    Expr k1 = Expr::constant(c[0]) + c[1] * Y + c[2] * pow(Y, 2) + c[3] * pow(Y, 3);
    Expr K1 = c[0] * Y + (c[1] / 2.0) * pow(Y, 2) + (c[2] / 3.0) * pow(Y, 3) + (c[3] / 4.0) * pow(Y, 4);
    Expr h1 = ux * k1 + static_cast<double>(k0) * u / Y;
    CHECK(zero(euler_u(h1 * m)));
    Expr potential = 0.5 * K1 + (0.5 * k0) * ln((u - ux) / (u + ux)) + static_cast<double>(k0) * var_x();
    CHECK(zero(h1 * m - d_x(potential)));
    ZeroVerdict pert = is_zero(euler_u((h1 + 1e-3 * u) * m), {}, kPolicy);
    CHECK(pert.nonzero());
    CHECK(pert.max_rel > 1e-6);
  }
}

TEST_CASE("every constructed flux passes the characteristic check") {
  const char* eqs[][2] = {{"ux", "u"},
                          {"2*ux", "u"},
                          {"u*ux", "u^2"},
                          {"0", "u^2 - ux^2"},
                          {"ux/u^3", "1/u^2"},
                          {"-u*ux", "u^2"},
                          {"3*ux", "-6*u + 1"},
                          {"ux/(u + 0.5)^3", "1/(u + 0.5)^2"},
                          {"ux*(u^2-ux^2)", "u*(u^2-ux^2) + (u^2-ux^2)"}};
  for (auto& e : eqs) {
    const EquationSpec eq = eqn(e[0], e[1]);
    ConservationReport r = classify(eq, kPolicy);
    CAPTURE(e[0]);
    CHECK(r.flux_notes.empty());
    for (const auto& cur : r.fluxes) {
      CAPTURE(cur.name);
      CHECK(characteristic_check(cur, eq, kPolicy.with_seed(1234)).conserved());
      // Printed currents parse back to the same function.
      const Expr phi = parse(to_string(cur.Phi));
      CHECK(zero(phi - cur.Phi));
    }
  }
}

TEST_CASE("report JSON") {
  const EquationSpec eq = eqn("a*ux/u^3", "a/u^2", {{"a", 1.0}});
  const std::string js = report_to_json(classify(eq, kPolicy), eq);
  for (const char* key : {"\"momentum\"", "\"h1\"", "\"grad_energy\"", "\"kind\": \"line\"",
                          "\"l2m\": true", "\"weighted_h2\": true", "\"fluxes\"", "\"direction\""})
    CHECK_MESSAGE(js.find(key) != std::string::npos, key);
  CHECK(report_to_json(classify(eq, kPolicy), eq) == js);
}

TEST_CASE("rational snapping") {
  CHECK(snap_rational(0.3333333333333) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(snap_rational(2.0 + 1e-12) == 2.0);
  CHECK(snap_rational(M_PI) == M_PI);
}
