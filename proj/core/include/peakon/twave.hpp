#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakon/eval.hpp"
#include "peakon/expr.hpp"

namespace peakon::twave {

class TwaveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sampled travelling wave U(xi), xi = x - c t, with the peak at xi = 0.
struct WaveProfile {
  std::string kind;  // "solitary" or "peakon"
  double c = 0.0;
  double b = 0.0;  // solitary shape parameter
  double a = 0.0;  // peakon amplitude
  int orientation = 1;
  double peak_height = 0.0;
  std::vector<double> xi;
  std::vector<double> U;
  std::vector<double> Uprime;
};

std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

// Solitary waves of m_t + u_x u^-3 m + (u^-2 m)_x = 0.

/// b sqrt(2 - b^2) / sqrt(c).
double solitary_peak_height(double b, double c);

/// |xi| at which the positive profile has height U, 0 < U <= peak.
double solitary_abs_xi(double U, double b, double c);

/// dU/dxi of the positive profile at height U on the side xi > 0 (<= 0).
double solitary_slope(double U, double b, double c);

/// Positive profile (times `orientation`) at the given xi, by bisection of
/// the implicit closed form in log U.
WaveProfile solitary_profile(double b, double c, std::span<const double> xi, int orientation = 1);

/// U at a single xi (positive orientation).
double solitary_height_at(double xi, double b, double c);

struct ResidualStats {
  double max = 0.0;
  double rms = 0.0;
  std::size_t count = 0;
};

/// Deviation of a first integral from its expected value along a profile.
struct IntegralStats {
  double expected = 0.0;
  double mean = 0.0;
  double max_rel_dev = 0.0;  // max |value - expected| / max(1, |expected|)
};

struct SolitaryResiduals {
  double spacing = 0.0;
  double excluded_radius = 0.0;
  ResidualStats ode1;  // U'^2 - U^2 B / A
  ResidualStats ode3;  // third-order travelling-wave ODE
  IntegralStats fi_l2;  // m^2 (1/U^2 - c) = c1
  IntegralStats fi_h1;  // -c(U^2 + U'^2) + 2cUU'' + 2m/U = c2
  double c1 = 0.0;
  double c2 = 0.0;
};

/// U'' and U''' come from 8th-order central differences of the closed-form
/// U' on the profile's uniform grid; stencils never straddle the ends.
/// Points with |xi| < `exclude_radius` are skipped for the third-order ODE.
SolitaryResiduals solitary_ode_residual(const WaveProfile& profile, double exclude_radius = 0.0);

struct QuadratureCheck {
  double max_discrepancy = 0.0;
  double start_offset = 0.0;  // xi where the integration started
  double start_rel_gap = 1e-6;
  std::vector<std::string> warnings;
};

/// Integrates dU/dxi = -U sqrt(B/A) from U = peak (1 - 1e-6) outward and
/// compares with the closed form on xi in [lo, hi].
QuadratureCheck quadrature_crosscheck(double b, double c, double lo = 0.1, double hi = 10.0,
                                      std::size_t n = 400);

/// u = a exp(-|xi|) with c = 1/a^2.
WaveProfile peakon(double a, std::span<const double> xi);
double peakon_speed(double a);

/// m_t + u_x f1(y) m + ((u f1(y) + g1(y)) m)_x = 0, y = u^2 - u_x^2, with
/// f1, g1 polynomials written in the variable u (standing for y).
class HamiltonianFamily {
 public:
  HamiltonianFamily(const Expr& f1, const Expr& g1, const ParamMap& params = {});

  double f1(double y) const;
  double g1(double y) const;
  /// Integrals from 0 to y, and the same divided by y.
  double F1(double y) const;
  double G1(double y) const;
  double F1_tilde(double y) const;
  double G1_tilde(double y) const;

  struct Values {
    double fi_mom = 0.0;  // -c m + F1/2 + m (U f1 + g1)
    double fi_h1 = 0.0;   // -c(U^2 + U'^2) + 2cUU'' - G1 + 2Um(U f1 + g1)
    double ode = 0.0;     // (U'^2 - U^2)(U F1~ + G1~ - c)
  };
  Values first_integrals(double U, double U1, double U2, double c) const;

  /// Verdict on smooth solitary waves from the decay conditions c1 = c2 = 0.
  struct SolitaryVerdict {
    bool arbitrary_speed = false;        // never true for this family
    std::optional<double> fixed_speed;   // g1(0) when nonzero
    std::string message;
  };
  SolitaryVerdict solitary_analysis() const;

  /// With c1 = c2 = 0, (U'^2 - U^2)(U F1~ + G1~ - c) = 0. Counts the samples
  /// where the second factor is bounded away from zero, which forces
  /// U'^2 = U^2 there, and reports the largest |U'^2 - U^2| among them.
  struct DegeneracyCheck {
    std::size_t forced = 0;
    std::size_t total = 0;
    double max_violation = 0.0;
  };
  DegeneracyCheck degeneracy(std::span<const double> U, std::span<const double> U1, double c,
                             double factor_tol = 1e-8) const;

 private:
  std::vector<double> f_;  // power-series coefficients in y
  std::vector<double> g_;
};

/// Smooth periodic travelling wave of the Hamiltonian family through the
/// crest (U_max, 0), from the second-order ODE obtained from the momentum
/// first integral with constant c1.
struct PeriodicWave {
  double c = 0.0;
  double c1 = 0.0;
  double period = 0.0;
  double U_max = 0.0;
  double U_min = 0.0;
  std::vector<double> xi;  // n uniform samples over one period, crest at 0
  std::vector<double> U;
  std::vector<double> Uprime;
};

PeriodicWave hamiltonian_periodic_wave(const HamiltonianFamily& fam, double c, double c1,
                                       double U_max, std::size_t n);

}  // namespace peakon::twave
