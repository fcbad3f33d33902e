#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "peakon/eval.hpp"
#include "peakon/expr.hpp"
#include "peakon/zero_test.hpp"

namespace peakon {

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One member m_t + f(u,u_x) m + (g(u,u_x) m)_x = 0 of the equation class.
class EquationSpec {
 public:
  /// Throws SpecError if f or g depend on anything but u, u_x, if a
  /// parameter is unbound, or if both are constant (linear equation).
  EquationSpec(Expr f, Expr g, ParamMap params = {});

  /// Parses f and g with the keys of `params` declared.
  static EquationSpec parse(std::string_view f, std::string_view g, ParamMap params = {});

  const Expr& f() const { return f_; }
  const Expr& g() const { return g_; }
  const ParamMap& params() const { return params_; }

  /// Same equation with f and g multiplied by `lambda` (a time rescaling).
  EquationSpec scaled(double lambda) const;

  /// Off-shell equation expression m_t + f m + D_x(g m).
  Expr upsilon() const;

 private:
  Expr f_;
  Expr g_;
  ParamMap params_;
};

/// Three-valued conservation verdict backed by a zero test.
struct LawVerdict {
  ZeroVerdict evidence;
  Expr residual;  // the expression that was zero-tested

  bool conserved() const { return evidence.zero(); }
  bool determinate() const { return evidence.status != ZeroStatus::Indeterminate; }
};

/// Momentum: E_u(f m) = 0.
LawVerdict check_momentum(const EquationSpec& eq, const SamplingPolicy& policy);

/// H^1 norm: E_u((u f - u_x g) m) = 0.
LawVerdict check_h1(const EquationSpec& eq, const SamplingPolicy& policy);

enum class SetKind { Empty, Point, Line, Plane, Indeterminate };

const char* to_string(SetKind k);

/// Solution set of R(mu, nu) = (mu-2) A + nu B + C = 0 over (mu, nu).
/// For a point, (mu, nu) is the solution; for a line, (mu, nu) is the point
/// of minimal |(mu-2, nu)| and `direction` a unit vector along it.
struct GradEnergySet {
  SetKind kind = SetKind::Indeterminate;
  double mu = 0.0;
  double nu = 0.0;
  std::array<double, 2> direction{0.0, 0.0};
  std::array<double, 2> singular_values{0.0, 0.0};
  double residual_max = 0.0;  // max normalized row residual at the solution
  std::optional<ZeroVerdict> cross_check;
  std::string note;
  Expr A, B, C;

  bool contains(double mu_q, double nu_q, double tol = 1e-7) const;
  /// True if some (mu != 2, nu = 0) lies in the set.
  bool has_weighted_h2() const;
};

GradEnergySet check_grad_energy(const EquationSpec& eq, const SamplingPolicy& policy);

/// Density, flux and multiplier of D_t T + D_x Phi = Q * upsilon.
struct ConservedCurrent {
  std::string name;
  Expr T;
  Expr Phi;
  Expr Q;
};

/// A current, or the reason it could not be written in closed form.
struct FluxResult {
  std::optional<ConservedCurrent> current;
  std::string reason;

  explicit operator bool() const { return current.has_value(); }
};

FluxResult flux_momentum(const EquationSpec& eq, const SamplingPolicy& policy);
FluxResult flux_h1(const EquationSpec& eq, const SamplingPolicy& policy);
FluxResult flux_grad_energy(const EquationSpec& eq, double mu, double nu,
                            const SamplingPolicy& policy);

/// D_t T + D_x Phi - Q * upsilon, off-shell.
Expr characteristic_residual(const ConservedCurrent& cur, const EquationSpec& eq);

LawVerdict characteristic_check(const ConservedCurrent& cur, const EquationSpec& eq,
                                const SamplingPolicy& policy);

/// (E_u(D_t T - Q upsilon), E_{u_t}(D_t T - Q upsilon)).
std::pair<Expr, Expr> multiplier_conditions(const Expr& T, const Expr& Q, const EquationSpec& eq);

/// Splitting k(u, u_x) = u_x k1(y) + k0 u / y with y = u^2 - u_x^2, the
/// general kernel element of E_u(k m) = 0.
struct PoleSplit {
  double k0 = 0.0;
  Expr k1;          // in terms of y, represented by the variable u
  Expr K1;          // antiderivative of k1 with K1(0) = 0 where defined
  std::string form;  // "polynomial" or "power"
};

/// Extracts k0 from the part of k even in u_x, then fits
/// k1 as a polynomial (degree <= 6) or a single power c y^p. Every fit is
/// confirmed with `is_zero`; returns nullopt if none matches.
std::optional<PoleSplit> split_pole_form(const Expr& k, const ParamMap& params,
                                         const SamplingPolicy& policy);

/// Antiderivative G(u) of a function g(u) that is polynomial or c (u + beta)^p.
std::optional<Expr> antiderivative_in_u(const Expr& g, const ParamMap& params,
                                        const SamplingPolicy& policy);

/// Tri-state summary used by reports.
enum class Answer { Yes, No, Indeterminate };

const char* to_string(Answer a);

struct ConservationReport {
  LawVerdict momentum;
  LawVerdict h1;
  GradEnergySet grad_energy;
  Answer l2m = Answer::Indeterminate;
  Answer weighted_h2 = Answer::Indeterminate;
  std::vector<ConservedCurrent> fluxes;
  std::vector<std::string> flux_notes;

  bool determinate() const;
};

ConservationReport classify(const EquationSpec& eq, const SamplingPolicy& policy,
                            bool build_fluxes = true);

/// JSON report with doubles printed to 17 significant digits.
std::string report_to_json(const ConservationReport& r, const EquationSpec& eq);

/// Nearest p/q with q <= max_den if within tol * max(1, |x|); else x.
double snap_rational(double x, long max_den = 720, double tol = 1e-9);

}  // namespace peakon
