#pragma once

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakon/conslaw.hpp"

namespace peakon::pde {

class PdeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform periodic grid x_j = j L / N.
struct Grid {
  double L = 2.0 * 3.14159265358979323846;
  std::size_t N = 256;

  Grid() = default;
  Grid(double L_, std::size_t N_);  // validates N >= 16, power of two, L > 0
  double dx() const { return L / static_cast<double>(N); }
  double x(std::size_t j) const { return dx() * static_cast<double>(j); }
  std::vector<double> nodes() const;
  /// Angular wavenumber of real-FFT mode j = 0..N/2.
  double k(std::size_t j) const;
};

/// FFT-based operators on one grid. Not shareable across threads; each
/// simulation owns one.
class SpectralOps {
 public:
  explicit SpectralOps(const Grid& g, bool dealias = true);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;

  const Grid& grid() const { return grid_; }
  bool dealias() const { return dealias_; }

  /// u and u_x from m by solving (1 - d_xx) u = m.
  void helmholtz(std::span<const double> m, std::vector<double>& u, std::vector<double>& ux);
  /// Spectral derivative (Nyquist mode dropped).
  void derivative(std::span<const double> v, std::vector<double>& out);
  /// Second derivative.
  void second_derivative(std::span<const double> v, std::vector<double>& out);
  /// m = u - u_xx.
  void momentum_of(std::span<const double> u, std::vector<double>& m);
  /// Zero the modes above the 2/3 cutoff in place (no-op when dealiasing is off).
  void filter(std::vector<double>& v);
  /// Convolution with a periodic Gaussian of standard deviation sigma.
  void smooth(std::vector<double>& v, double sigma);
  /// Trigonometric interpolant of v and its derivative at arbitrary x.
  struct Interpolant {
    std::vector<std::complex<double>> coeffs;  // normalized, modes 0..N/2
    double L;
    double value(double x) const;
    double derivative(double x) const;
  };
  Interpolant interpolant(std::span<const double> v);

 private:
  void forward(std::span<const double> v);
  void backward(std::vector<double>& out);

  Grid grid_;
  bool dealias_;
  std::size_t cutoff_;
  double* real_ = nullptr;
  std::complex<double>* spec_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
};

struct GridState {
  double t = 0.0;
  std::vector<double> m;
  std::vector<double> u;
  std::vector<double> ux;
};

GridState make_state(SpectralOps& ops, std::vector<double> m, double t = 0.0);

/// max |u - u_xx - m| / max(1, max |m|).
double helmholtz_residual(SpectralOps& ops, const GridState& s);

/// f and g compiled for nodal evaluation, plus whether they are singular at u = 0.
class NodalEquation {
 public:
  explicit NodalEquation(const EquationSpec& eq);
  const EquationSpec& spec() const { return eq_; }
  bool singular_at_zero() const { return singular_; }
  double f(double u, double ux) const;
  double g(double u, double ux) const;

 private:
  EquationSpec eq_;
  CompiledExpr f_, g_;
  bool singular_ = false;
};

/// Non-finite value of f or g at a node.
class SingularityError : public PdeError {
 public:
  SingularityError(const std::string& what, double x_at, double u_at)
      : PdeError(what), x(x_at), u(u_at) {}
  double x;
  double u;
};

/// -f m - D_x(g m), products filtered by the 2/3 rule when enabled.
/// Throws SingularityError on a non-finite nodal value.
/// With `u_floor` > 0, any |u| below it throws before f or g is evaluated.
void rhs(SpectralOps& ops, const NodalEquation& eq, std::span<const double> m, std::span<const double> u,
         std::span<const double> ux, std::vector<double>& out, double u_floor = 0.0);
std::vector<double> rhs(SpectralOps& ops, const NodalEquation& eq, const GridState& s,
                        double u_floor = 0.0);

/// One classical RK4 step; the returned state has fresh u, u_x caches.
GridState step_rk4(SpectralOps& ops, const NodalEquation& eq, const GridState& s, double dt,
                   double u_floor = 0.0);

/// dt max|g| N / L; values above 1 indicate an unresolved CFL condition.
double cfl_number(const NodalEquation& eq, const GridState& s, const Grid& grid, double dt);

struct Diagnostics {
  double t = 0.0;
  double M = 0.0;
  double H1sq = 0.0;
  double L2msq = 0.0;
  double E = 0.0;
  double sup_u = 0.0;
  double sup_ux = 0.0;
  double min_u = 0.0;
};

/// Trapezoid-rule integrals on the periodic grid.
Diagnostics diagnostics(const GridState& s, const Grid& grid, double mu, double nu);

struct ConservedSeries {
  double mu = 3.0;
  double nu = 0.0;
  std::vector<Diagnostics> rows;

  /// max_t |q(t) - q(0)| / max(|q(0)|, tiny) for q in {M, H1sq, L2msq, E}.
  double drift(double Diagnostics::*q) const;
};

struct InitialData {
  std::string kind = "gaussian";  // gaussian | cosine_offset | mollified_peakon | solitary_wave
  std::map<std::string, double> params;
};

/// Nodal m for the descriptor (u built first, then m = u - u_xx spectrally).
std::vector<double> initial_momentum(SpectralOps& ops, const InitialData& init);

struct SimConfig {
  double L = 40.0;
  std::size_t N = 512;
  double dt = 1e-3;
  double t_final = 10.0;
  bool dealias = true;
  std::string f = "ux";
  std::string g = "u";
  ParamMap params;
  InitialData initial;
  double series_interval = 0.1;  // rounded to a whole number of steps
  double mu = 3.0;               // energy E(mu, nu) recorded in the series
  double nu = 0.0;
  double blowup_threshold = 1e3;
  double min_u_floor = 1e-3;
  std::string series_path;
  std::vector<double> snapshot_times;
  std::string snapshot_path;

  EquationSpec equation() const;
};

/// Parses the JSON document; throws PdeError on schema violations.
SimConfig parse_sim_config(std::string_view json);
std::string sim_config_to_json(const SimConfig& cfg);

enum class RunStatus { Completed, WaveBreaking, SingularityGuard };
const char* to_string(RunStatus s);

struct Snapshot {
  double t = 0.0;
  std::vector<double> x, u, m;
};

struct RunResult {
  RunStatus status = RunStatus::Completed;
  std::string message;
  std::size_t steps = 0;
  double max_cfl = 0.0;
  ConservedSeries series;
  std::vector<Snapshot> snapshots;
  GridState final_state;
  std::vector<double> crest;  // crest position at each series row
  std::vector<std::string> warnings;
};

/// Optional per-step observer (called after every accepted step).
using StepObserver = std::function<void(const GridState&)>;

RunResult run(const SimConfig& cfg, const StepObserver& observer = {});

/// Position of the maximum of u (or of -u when `negative`), refined to a
/// root of the spectral interpolant of u_x.
double crest_position(SpectralOps& ops, const GridState& s, bool negative = false);

/// Least-squares slope of unwrapped crest positions against time.
double crest_speed(const std::vector<double>& t, const std::vector<double>& crest, double L);

enum class BoundStatus { Ok, Violated, NotApplicable, Degenerate };
const char* to_string(BoundStatus s);

struct BoundsReport {
  BoundStatus status = BoundStatus::NotApplicable;
  double h1_norm0 = 0.0;   // ||u0||_{H1}
  double l2m_norm0 = 0.0;  // ||m0||_{L2}
  double min_margin_u = 0.0;   // min over t of ||u0||_{H1}/sqrt2 - sup|u|
  double min_margin_ux = 0.0;  // min over t of ||m0||_{L2} - sup|u_x|
  double margin_norms = 0.0;   // ||m0|| - ||u0||_{H1}/sqrt2
  std::size_t violations = 0;
  std::string message;
};

/// sup|u| < ||u0||_{H1}/sqrt2 < ||m0||_{L2} and sup|u_x| < ||m0||_{L2} at
/// every row. Only meaningful when the equation conserves both the H1 norm
/// and ||m||_{L2}.
BoundsReport check_apriori_bounds(const ConservedSeries& series, bool conserves_l2m_and_h1);

/// CSV writers (17 significant digits).
std::string series_csv(const ConservedSeries& s);
std::string snapshot_csv(const Snapshot& s);

}  // namespace peakon::pde
