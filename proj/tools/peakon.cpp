#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "peakon/conslaw.hpp"
#include "peakon/parse.hpp"
#include "peakon/pde.hpp"
#include "peakon/twave.hpp"

#ifndef PEAKON_VERSION
#define PEAKON_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace peakon;

namespace {

// Stable exit-code contract.
constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotZero = 2;  // indeterminate classification, or a nonzero residual
constexpr int kWaveBreaking = 3;
constexpr int kSingularity = 4;

struct Globals {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out;
};

/// Input the user has to fix; reported with exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt17(double v) { return fmt::format("{:.17g}", v); }

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", p.string()));
  f << text;
}

/// Records what was run so the outputs can be regenerated.
class Manifest {
 public:
  Manifest(std::string subcommand, const Globals& g) : sub_(std::move(subcommand)), g_(g), started_(utc_now()) {}

  json config = json::object();

  void add_output(const fs::path& p) { outputs_.push_back(p.string()); }

  void write(const fs::path& dir) const {
    json j;
    j["subcommand"] = sub_;
    j["config"] = config;
    j["seed"] = g_.seed;
    j["threads"] = g_.threads;
    j["version"] = PEAKON_VERSION;
    j["started"] = started_;
    j["finished"] = utc_now();
    j["outputs"] = outputs_;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string sub_;
  Globals g_;
  std::string started_;
  std::vector<std::string> outputs_;
};

SamplingPolicy policy_from(const Globals& g) {
  SamplingPolicy p;
  p.seed = g.seed;
  p.threads = g.threads;
  return p;
}

ParamMap parse_params(const std::vector<std::string>& items) {
  ParamMap out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError(fmt::format("--param '{}' is not name=value", s));
    const std::string name = s.substr(0, eq), value = s.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw UsageError(fmt::format("--param {}: '{}' is not a number", name, value));
    out[name] = v;
  }
  return out;
}

std::set<std::string> keys(const ParamMap& p) {
  std::set<std::string> k;
  for (const auto& [name, v] : p) k.insert(name);
  return k;
}

/// Parses one flag value, turning a syntax error into a caret diagnostic.
Expr parse_flag(const char* flag, const std::string& src, const ParamMap& params) {
  try {
    return parse(src, keys(params));
  } catch (const ParseError& e) {
    throw UsageError(fmt::format("{}: {}", flag, format_parse_error(src, e)));
  }
}

EquationSpec equation_from(const std::string& f, const std::string& g, const ParamMap& params) {
  Expr fe = parse_flag("--f", f, params), ge = parse_flag("--g", g, params);
  try {
    return EquationSpec(fe, ge, params);
  } catch (const SpecError& e) {
    throw UsageError(e.what());
  }
}

json verdict_json(const LawVerdict& v) {
  json j;
  j["status"] = to_string(v.evidence.status);
  j["exact"] = v.evidence.exact;
  j["samples"] = v.evidence.samples;
  j["zero_samples"] = v.evidence.zero_samples;
  j["max_abs"] = v.evidence.max_abs;
  j["max_rel"] = v.evidence.max_rel;
  if (v.evidence.witness) {
    json w;
    for (const auto& [var, value] : v.evidence.witness->point.vars) w["point"][var.name()] = value;
    w["value"] = v.evidence.witness->value;
    w["scale"] = v.evidence.witness->scale;
    j["witness"] = w;
  }
  return j;
}

// ---------------------------------------------------------------------------

struct ClassifyArgs {
  std::string f, g;
  std::vector<std::string> params;
  bool no_fluxes = false;
};

int cmd_classify(const ClassifyArgs& a, const Globals& g) {
  const ParamMap params = parse_params(a.params);
  const EquationSpec eq = equation_from(a.f, a.g, params);
  const ConservationReport r = classify(eq, policy_from(g), !a.no_fluxes);
  const std::string js = report_to_json(r, eq);
  std::cout << js << "\n";
  if (!g.out.empty()) {
    Manifest m("classify", g);
    m.config = {{"f", a.f}, {"g", a.g}, {"params", params}, {"fluxes", !a.no_fluxes}};
    const fs::path out = fs::path(g.out) / "classify.json";
    write_text(out, js + "\n");
    m.add_output(out);
    m.write(g.out);
  }
  return r.determinate() ? kOk : kNotZero;
}

struct VerifyArgs {
  std::string T, Phi, Q, f, g;
  std::vector<std::string> params;
};

int cmd_verify(const VerifyArgs& a, const Globals& g) {
  const ParamMap params = parse_params(a.params);
  const EquationSpec eq = equation_from(a.f, a.g, params);
  ConservedCurrent cur;
  cur.name = "user";
  cur.T = parse_flag("--T", a.T, params);
  cur.Phi = parse_flag("--Phi", a.Phi, params);
  cur.Q = parse_flag("--Q", a.Q, params);
  const LawVerdict v = characteristic_check(cur, eq, policy_from(g));
  json j;
  j["verdict"] = v.conserved() ? "zero" : v.evidence.nonzero() ? "nonzero" : "indeterminate";
  j["evidence"] = verdict_json(v);
  j["residual"] = to_string(v.residual);
  const std::string js = j.dump(2);
  std::cout << js << "\n";
  if (!g.out.empty()) {
    Manifest m("verify", g);
    m.config = {{"T", a.T}, {"Phi", a.Phi}, {"Q", a.Q}, {"f", a.f}, {"g", a.g}, {"params", params}};
    const fs::path out = fs::path(g.out) / "verify.json";
    write_text(out, js + "\n");
    m.add_output(out);
    m.write(g.out);
  }
  return v.conserved() ? kOk : kNotZero;
}

// ---------------------------------------------------------------------------

fs::path resolve(const fs::path& dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : dir / path;
}

/// One file per snapshot time: name_000.csv, name_001.csv, ... when there are several.
fs::path snapshot_file(const fs::path& base, std::size_t index, std::size_t count) {
  if (count == 1) return base;
  fs::path p = base;
  p.replace_filename(fmt::format("{}_{:03d}{}", base.stem().string(), index, base.extension().string()));
  return p;
}

int cmd_simulate(const std::string& config_path, const Globals& g) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot read config '{}'", config_path));
  std::stringstream buf;
  buf << in.rdbuf();
  pde::SimConfig cfg;
  try {
    cfg = pde::parse_sim_config(buf.str());
  } catch (const pde::PdeError& e) {
    throw UsageError(fmt::format("{}: {}", config_path, e.what()));
  }

  pde::RunResult r;
  try {
    r = pde::run(cfg);
  } catch (const pde::PdeError& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  Manifest m("simulate", g);
  m.config = json::parse(pde::sim_config_to_json(cfg));
  m.config["config_path"] = config_path;

  const fs::path series = resolve(dir, cfg.series_path.empty() ? "series.csv" : cfg.series_path);
  write_text(series, pde::series_csv(r.series));
  m.add_output(series);
  const fs::path snap_base = resolve(dir, cfg.snapshot_path.empty() ? "snapshot.csv" : cfg.snapshot_path);
  for (std::size_t i = 0; i < r.snapshots.size(); ++i) {
    const fs::path p = snapshot_file(snap_base, i, r.snapshots.size());
    write_text(p, pde::snapshot_csv(r.snapshots[i]));
    m.add_output(p);
  }

  json summary;
  summary["status"] = pde::to_string(r.status);
  summary["message"] = r.message;
  summary["steps"] = r.steps;
  summary["t_end"] = r.series.rows.empty() ? 0.0 : r.series.rows.back().t;
  summary["max_cfl"] = r.max_cfl;
  if (r.series.rows.size() >= 2) {
    summary["drift"] = {{"M", r.series.drift(&pde::Diagnostics::M)},
                        {"H1sq", r.series.drift(&pde::Diagnostics::H1sq)},
                        {"L2msq", r.series.drift(&pde::Diagnostics::L2msq)},
                        {"E", r.series.drift(&pde::Diagnostics::E)}};
    std::vector<double> t;
    for (const auto& d : r.series.rows) t.push_back(d.t);
    summary["crest_speed"] = pde::crest_speed(t, r.crest, cfg.L);
    // The a priori bounds only hold when both norms are conserved.
    const ConservationReport cls = classify(cfg.equation(), policy_from(g));
    const bool both = cls.h1.conserved() && cls.l2m == Answer::Yes;
    const pde::BoundsReport b = pde::check_apriori_bounds(r.series, both);
    summary["apriori_bounds"] = {{"status", pde::to_string(b.status)}, {"message", b.message}};
    // A flux with an explicit x term is not periodic, so the integral drifts on the circle.
    for (const ConservedCurrent& c : cls.fluxes)
      if (variables(c.Phi).contains(JetVar::x()))
        r.warnings.push_back(c.name + " flux depends explicitly on x; its integral is not conserved on a periodic domain");
  }
  summary["warnings"] = r.warnings;
  std::cout << summary.dump(2) << "\n";
  m.write(dir);

  switch (r.status) {
    case pde::RunStatus::Completed: return kOk;
    case pde::RunStatus::WaveBreaking: return kWaveBreaking;
    case pde::RunStatus::SingularityGuard: return kSingularity;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

std::string profile_csv(const twave::WaveProfile& p) {
  std::string out = "xi,U,Uprime\n";
  for (std::size_t i = 0; i < p.xi.size(); ++i)
    out += fmt::format("{},{},{}\n", fmt17(p.xi[i]), fmt17(p.U[i]), fmt17(p.Uprime[i]));
  return out;
}

void emit_profile(const twave::WaveProfile& p, const json& sidecar, const json& config, const Globals& g) {
  std::cout << sidecar.dump(2) << "\n";
  if (g.out.empty()) return;
  Manifest m("twave", g);
  m.config = config;
  const fs::path dir(g.out), csv = dir / "profile.csv", side = dir / "profile.json";
  write_text(csv, profile_csv(p));
  write_text(side, sidecar.dump(2) + "\n");
  m.add_output(csv);
  m.add_output(side);
  m.write(dir);
}

std::size_t grid_points(double xi_max, double dxi) {
  if (!(xi_max > 0.0) || !(dxi > 0.0)) throw UsageError("--xi-max and --dxi must be positive");
  const double n = 2.0 * xi_max / dxi;
  if (n > 1e8) throw UsageError("grid too large");
  return static_cast<std::size_t>(std::llround(n)) + 1;
}

struct SolitaryArgs {
  double b = 0.5, c = 1.0, xi_max = 15.0, dxi = 1e-3;
  int orientation = 1;
};

int cmd_solitary(const SolitaryArgs& a, const Globals& g) {
  try {
    const auto xi = twave::uniform_grid(-a.xi_max, a.xi_max, grid_points(a.xi_max, a.dxi));
    const twave::WaveProfile p = twave::solitary_profile(a.b, a.c, xi, a.orientation);
    const twave::SolitaryResiduals r = twave::solitary_ode_residual(p);
    const twave::QuadratureCheck q = twave::quadrature_crosscheck(a.b, a.c);
    json s;
    s["kind"] = "solitary";
    s["b"] = a.b;
    s["c"] = a.c;
    s["orientation"] = a.orientation;
    s["peak_height"] = p.peak_height;
    s["c1"] = r.c1;
    s["c2"] = r.c2;
    s["residual_max_ode1"] = r.ode1.max;
    s["residual_rms_ode3"] = r.ode3.rms;
    s["residual_max_ode3"] = r.ode3.max;
    s["first_integral_l2_max_rel_dev"] = r.fi_l2.max_rel_dev;
    s["first_integral_h1_max_rel_dev"] = r.fi_h1.max_rel_dev;
    s["quadrature_max_discrepancy"] = q.max_discrepancy;
    s["warnings"] = q.warnings;
    emit_profile(p, s,
                 {{"wave", "solitary"}, {"b", a.b}, {"c", a.c}, {"orientation", a.orientation},
                  {"xi_max", a.xi_max}, {"dxi", a.dxi}},
                 g);
  } catch (const twave::TwaveError& e) {
    throw UsageError(e.what());
  }
  return kOk;
}

struct PeakonArgs {
  double a = 1.0, xi_max = 10.0, dxi = 1e-2;
};

int cmd_peakon(const PeakonArgs& a, const Globals& g) {
  try {
    const auto xi = twave::uniform_grid(-a.xi_max, a.xi_max, grid_points(a.xi_max, a.dxi));
    const twave::WaveProfile p = twave::peakon(a.a, xi);
    json s;
    s["kind"] = "peakon";
    s["a"] = a.a;
    s["c"] = p.c;
    s["peak_height"] = p.peak_height;
    emit_profile(p, s, {{"wave", "peakon"}, {"a", a.a}, {"xi_max", a.xi_max}, {"dxi", a.dxi}}, g);
  } catch (const twave::TwaveError& e) {
    throw UsageError(e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservation laws, simulations and travelling waves for peakon equations"};
  app.set_version_flag("--version", PEAKON_VERSION);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for randomized zero tests")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory (files and manifest.json)");

  ClassifyArgs ca;
  auto* classify_cmd = app.add_subcommand("classify", "Decide which conservation laws an equation has");
  classify_cmd->add_option("--f", ca.f, "f(u, ux)")->required();
  classify_cmd->add_option("--g", ca.g, "g(u, ux)")->required();
  classify_cmd->add_option("--param", ca.params, "name=value")->take_all();
  classify_cmd->add_flag("--no-fluxes", ca.no_fluxes, "Skip building closed-form fluxes");

  std::string config_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the pseudospectral solver from a JSON config");
  simulate_cmd->add_option("config", config_path, "Config file")->required();

  auto* twave_cmd = app.add_subcommand("twave", "Travelling-wave profiles");
  twave_cmd->require_subcommand(1);
  SolitaryArgs sa;
  auto* sol = twave_cmd->add_subcommand("solitary", "Smooth solitary wave of the u^-2 equation");
  sol->add_option("--b", sa.b, "Shape parameter in (0, 1)")->required();
  sol->add_option("--c", sa.c, "Wave speed > 0")->required();
  sol->add_option("--xi-max", sa.xi_max, "Sample on [-xi-max, xi-max]")->capture_default_str();
  sol->add_option("--dxi", sa.dxi, "Sample spacing")->capture_default_str();
  sol->add_option("--orientation", sa.orientation, "+1 for a positive wave, -1 for its mirror")->capture_default_str()->check(CLI::IsMember({-1, 1}));
  PeakonArgs pa;
  auto* pk = twave_cmd->add_subcommand("peakon", "Peakon a exp(-|xi|) with c = 1/a^2");
  pk->add_option("--a", pa.a, "Amplitude, nonzero")->required();
  pk->add_option("--xi-max", pa.xi_max, "Sample on [-xi-max, xi-max]")->capture_default_str();
  pk->add_option("--dxi", pa.dxi, "Sample spacing")->capture_default_str();

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Check D_t T + D_x Phi = Q (equation) off-shell");
  verify_cmd->add_option("--T", va.T, "Density")->required();
  verify_cmd->add_option("--Phi", va.Phi, "Flux")->required();
  verify_cmd->add_option("--Q", va.Q, "Multiplier")->required();
  verify_cmd->add_option("--f", va.f, "f(u, ux)")->required();
  verify_cmd->add_option("--g", va.g, "g(u, ux)")->required();
  verify_cmd->add_option("--param", va.params, "name=value")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*classify_cmd) return cmd_classify(ca, g);
    if (*verify_cmd) return cmd_verify(va, g);
    if (*simulate_cmd) return cmd_simulate(config_path, g);
    if (*sol) return cmd_solitary(sa, g);
    if (*pk) return cmd_peakon(pa, g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
