// nlslab command-line runner: configuration, orchestration, persistence and
// report generation for the desk-scale NLS experiments.
//
//   nlslab <subcommand> --config <path> [--seed N] [--out DIR]
//   nlslab report <run-dir>... [--out DIR]
//
// Exit codes: 0 ok, 2 config/schema violation, 3 numerical failure (manifest
// still written), 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nlslab/critical_norms.hpp"
#include "nlslab/evolution.hpp"
#include "nlslab/fit.hpp"
#include "nlslab/groundstate.hpp"
#include "nlslab/io.hpp"
#include "nlslab/littlewood_paley.hpp"
#include "nlslab/modulation.hpp"
#include "nlslab/operator_context.hpp"
#include "nlslab/randomization.hpp"
#include "nlslab/scattering.hpp"
#include "nlslab/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlslab;

namespace {

class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Schema: nested allowed-key sets; unknown keys are rejected by full path.
// ---------------------------------------------------------------------------

struct Schema {
  std::map<std::string, Schema> children;
  bool open = false;  // leaf value (any JSON scalar/array)
};

Schema leaf() { return Schema{{}, true}; }

Schema config_schema() {
  Schema grid{{{"L", leaf()}, {"n_points", leaf()}, {"d", leaf()}}};
  Schema potential{{{"kind", leaf()}, {"depth", leaf()}, {"width", leaf()}, {"values", leaf()}}};
  Schema initial{{{"type", leaf()},
                  {"z0", leaf()},
                  {"amplitude", leaf()},
                  {"center", leaf()},
                  {"width", leaf()},
                  {"momentum", leaf()},
                  {"k_lo", leaf()},
                  {"k_hi", leaf()},
                  {"seed", leaf()},
                  {"project", leaf()}}};
  Schema evolution{{{"dt", leaf()},
                    {"t_final", leaf()},
                    {"stride", leaf()},
                    {"mu", leaf()},
                    {"projection", leaf()},
                    {"dealias", leaf()}}};
  Schema randomization{{{"law", leaf()},
                        {"variance", leaf()},
                        {"epsilon", leaf()},
                        {"n_samples", leaf()},
                        {"seed", leaf()},
                        {"profile", initial},
                        {"functional", leaf()},
                        {"q", leaf()},
                        {"r", leaf()},
                        {"horizon", leaf()},
                        {"n_times", leaf()},
                        {"khinchin_p", leaf()}}};
  Schema branch{{{"z_min", leaf()},
                 {"z_max", leaf()},
                 {"n_samples", leaf()},
                 {"spacing", leaf()},
                 {"fd_audit", leaf()},
                 {"dump_fields", leaf()}}};
  Schema stability{{{"z0", leaf()},
                    {"bump_amplitude", leaf()},
                    {"bump_seed", leaf()},
                    {"variant", leaf()},
                    {"dyadic_fractions", leaf()}}};
  Schema bilinear{{{"N_list", leaf()},
                   {"M_list", leaf()},
                   {"samples", leaf()},
                   {"horizon_scale", leaf()},
                   {"envelope", leaf()},
                   {"flavor", leaf()},
                   {"n_times", leaf()},
                   {"expected_slope", leaf()},
                   {"slope_tolerance", leaf()}}};
  Schema strichartz{{{"q", leaf()},
                     {"r", leaf()},
                     {"horizon", leaf()},
                     {"samples", leaf()},
                     {"datum", initial}}};
  Schema smoothing{{{"eps", leaf()},
                    {"horizon", leaf()},
                    {"samples", leaf()},
                    {"n_times", leaf()},
                    {"datum", initial}}};
  Schema planewaves{{{"xi_list", leaf()}, {"n_xi", leaf()}, {"build_transform", leaf()}}};
  Schema norms{{{"trajectory_dir", leaf()}, {"q_list", leaf()}, {"s", leaf()}, {"weight_eps", leaf()}}};
  Schema tolerances{{{"spectral_gap", leaf()},
                     {"residual", leaf()},
                     {"mass_drift", leaf()},
                     {"soliton_amp", leaf()},
                     {"soliton_phase", leaf()},
                     {"slope_band", leaf()},
                     {"tail_slope_rel", leaf()},
                     {"fit_r2", leaf()}}};
  Schema output{{{"dir", leaf()}}};
  Schema root{{{"experiment", leaf()},
               {"grid", grid},
               {"potential", potential},
               {"initial", initial},
               {"evolution", evolution},
               {"randomization", randomization},
               {"branch", branch},
               {"stability", stability},
               {"bilinear", bilinear},
               {"strichartz", strichartz},
               {"smoothing", smoothing},
               {"plane_waves", planewaves},
               {"norms", norms},
               {"tolerances", tolerances},
               {"output", output}}};
  return root;
}

void validate_schema(const json& node, const Schema& schema, const std::string& path) {
  if (schema.open) return;
  if (!node.is_object()) {
    throw SchemaError("expected object at " + (path.empty() ? "/" : path));
  }
  for (const auto& [key, value] : node.items()) {
    const auto it = schema.children.find(key);
    if (it == schema.children.end()) {
      throw SchemaError("unknown config key: " + path + "/" + key);
    }
    validate_schema(value, it->second, path + "/" + key);
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

json get_or(const json& j, const std::string& key, json fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw SchemaError("missing required config key: " + path + "/" + key);
  return j.at(key);
}

// ---------------------------------------------------------------------------
// Builders from config blocks.
// ---------------------------------------------------------------------------

Grid1D<double> build_grid(const json& cfg) {
  const json& g = require(cfg, "grid", "");
  const double L = require(g, "L", "/grid").get<double>();
  const long n = require(g, "n_points", "/grid").get<long>();
  if (n < 8 || (n & (n - 1)) != 0) {
    throw SchemaError("/grid/n_points must be a power of two >= 8 (got " + std::to_string(n) + ")");
  }
  return Grid1D<double>(L, n);
}

PotentialSpec<double> build_potential(const json& cfg) {
  const json& p = require(cfg, "potential", "");
  PotentialSpec<double> spec;
  spec.kind = potential_kind_from_string(require(p, "kind", "/potential").get<std::string>());
  spec.depth = get_or(p, "depth", 0.0);
  spec.width = get_or(p, "width", 1.0);
  if (spec.kind == PotentialKind::kTable) {
    const auto vals = require(p, "values", "/potential").get<std::vector<double>>();
    spec.table = Eigen::Map<const RealVec<double>>(vals.data(), Eigen::Index(vals.size()));
  }
  return spec;
}

OperatorContext<double> build_context(const json& cfg) {
  const int d = get_or(require(cfg, "grid", ""), "d", 1);
  return build_operator(build_grid(cfg), build_potential(cfg), d);
}

// initial-condition recipes shared by evolve/stability/strichartz/smoothing
SpectralField<double> build_datum(const OperatorContext<double>& ctx, const json& ic,
                                  std::uint64_t default_seed) {
  const std::string type = get_or<std::string>(ic, "type", "packet");
  SpectralField<double> u;
  if (type == "groundstate") {
    const double z0 = require(ic, "z0", "/initial").get<double>();
    u = solve_ground_state(ctx, std::complex<double>(z0, 0)).Q;
  } else if (type == "packet") {
    u = gaussian_packet(ctx.grid, get_or(ic, "center", 0.0), get_or(ic, "width", 1.0),
                        get_or(ic, "momentum", 0.0));
    u *= get_or(ic, "amplitude", 1.0);
  } else if (type == "random") {
    const std::uint64_t seed = get_or<std::uint64_t>(ic, "seed", default_seed);
    Fft<double> fft;
    CounterRng rng(seed, 23, 0);
    u.resize(ctx.n());
    const double env = get_or(ic, "width", 5.0);
    for (Eigen::Index j = 0; j < ctx.n(); ++j) {
      const double xx = ctx.grid.x(j);
      u[j] = std::exp(-xx * xx / (2 * env * env)) *
             std::complex<double>(rng.normal(), rng.normal());
    }
    CplxVec<double> uh = fft.forward(u);
    const double klo = get_or(ic, "k_lo", 0.0), khi = get_or(ic, "k_hi", 1e300);
    for (Eigen::Index j = 0; j < ctx.n(); ++j) {
      const double ak = std::abs(ctx.grid.momentum(j));
      if (ak < klo || ak > khi) uh[j] = 0;
    }
    u = fft.inverse(uh);
    const double amp = get_or(ic, "amplitude", 1.0);
    u *= amp / ctx.grid.norm(u);
  } else {
    throw SchemaError("/initial/type must be groundstate|packet|random (got " + type + ")");
  }
  if (get_or(ic, "project", false)) u = projector_continuous(ctx, u);
  return u;
}

std::vector<double> branch_radii(const json& cfg) {
  const json& b = require(cfg, "branch", "");
  const double lo = require(b, "z_min", "/branch").get<double>();
  const double hi = require(b, "z_max", "/branch").get<double>();
  const int n = require(b, "n_samples", "/branch").get<int>();
  const std::string spacing = get_or<std::string>(b, "spacing", "log");
  std::vector<double> out;
  if (spacing == "log") {
    out = log_spaced(lo, hi, n);
  } else if (spacing == "linear") {
    for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * double(i) / double(n - 1));
  } else {
    throw SchemaError("/branch/spacing must be log|linear");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments.
// ---------------------------------------------------------------------------

struct RunContext {
  json cfg;
  fs::path out;
  std::uint64_t seed = 1;
  RunManifest manifest;
  std::vector<fs::path> artifacts;

  RunContext(const json& c, const fs::path& o, std::uint64_t s)
      : cfg(c), out(o), seed(s), manifest(c, kVersion) {}

  void note_artifact(const fs::path& p) { artifacts.push_back(p); }
};

void run_spectrum(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json tol = get_or(rc.cfg, "tolerances", json::object());
  const double gap = get_or(tol, "spectral_gap", 1e-3);

  dump_real_vector(rc.out / "eigenvalues.bin", ctx.eigenvalues);
  rc.note_artifact(rc.out / "eigenvalues.bin");
  dump_real_vector(rc.out / "potential.bin", ctx.potential);
  rc.note_artifact(rc.out / "potential.bin");
  {
    CsvWriter csv(rc.out / "spectrum.csv", {"k", "lambda"});
    for (Eigen::Index k = 0; k < ctx.n(); ++k) csv.row({double(k), ctx.eigenvalues[k]});
    rc.note_artifact(rc.out / "spectrum.csv");
  }

  rc.manifest.add_check("spectrum.hermiticity", ctx.hermiticity_error(), 0.0,
                        ctx.hermiticity_error() == 0.0);
  rc.manifest.add_check("spectrum.orthonormality", ctx.orthonormality_residual(), 1e-10,
                        ctx.orthonormality_residual() < 1e-10);
  double nearest_zero = 1e300;
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    nearest_zero = std::min(nearest_zero, std::abs(ctx.eigenvalues[k]));
  }
  rc.manifest.add_check("spectrum.zero_energy_gap", nearest_zero, gap, nearest_zero >= gap);
  if (ctx.has_negative_spectrum()) {
    rc.manifest.add_info("spectrum.e0", ctx.ground_energy());
    rc.manifest.add_info("spectrum.negative_count", double(ctx.negative_indices.size()));
  }
  const auto diag = potential_diagnostics(ctx.grid, ctx.potential);
  rc.manifest.add_check("potential.short_range", diag.decay_ratio, 1.0, diag.short_range_ok);
}

void run_groundstate(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json& b = require(rc.cfg, "branch", "");
  BranchBuildOptions opt;
  opt.fd_audit = get_or(b, "fd_audit", false);
  const auto radii = branch_radii(rc.cfg);
  const auto branch = build_branch<double>(ctx, radii, opt);

  const json tol = get_or(rc.cfg, "tolerances", json::object());
  const double band = get_or(tol, "slope_band", 0.15);
  const double res_tol = get_or(tol, "residual", 1e-10);

  json manifest_json;
  manifest_json["z"] = json::array();
  double worst_residual = 0;
  {
    CsvWriter csv(rc.out / "branch.csv",
                  {"r", "e", "de", "residual", "iterations", "q_h2", "xq_h2", "x2q_h2", "fd_check"});
    for (const auto& s : branch.samples()) {
      const SpectralField<double> qc = s.q.cast<std::complex<double>>();
      csv.row({s.r, s.e, s.de, s.residual, double(s.iterations),
               flat_sobolev_norm(ctx.grid, qc, 2.0), flat_sobolev_norm(ctx.grid, qc, 2.0, 1.0),
               flat_sobolev_norm(ctx.grid, qc, 2.0, 2.0), s.fd_check});
      manifest_json["z"].push_back(s.r);
      worst_residual = std::max(worst_residual, s.residual);
    }
    rc.note_artifact(rc.out / "branch.csv");
  }
  rc.manifest.add_check("groundstate.worst_residual", worst_residual, res_tol,
                        worst_residual <= res_tol);
  if (get_or(b, "dump_fields", false)) {
    for (std::size_t i = 0; i < branch.samples().size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "q_%03zu.bin", i);
      dump_real_vector(rc.out / name, branch.samples()[i].q);
      rc.note_artifact(rc.out / name);
    }
  }

  const auto rep = scaling_report(ctx, branch);
  const auto w1 = weighted_report(ctx, branch, 1);
  const auto w2 = weighted_report(ctx, branch, 2);
  json fits;
  auto record_fit = [&](const std::string& name, const LinearFit& f, double expect) {
    fits[name] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"expected", expect}};
    rc.manifest.add_check("groundstate.slope." + name, f.slope, band,
                          std::abs(f.slope - expect) <= band);
  };
  record_fit("q_h2", rep.q_h2, 3.0);
  record_fit("dq_h2", rep.dq_h2, 2.0);
  record_fit("e", rep.e_abs, 2.0);
  record_fit("de", rep.de_abs, 1.0);
  record_fit("xq_h2_k1", w1.q_weighted, 3.0);
  record_fit("xdq_h2_k1", w1.dq_weighted, 2.0);
  record_fit("xq_h2_k2", w2.q_weighted, 3.0);
  record_fit("xdq_h2_k2", w2.dq_weighted, 2.0);
  manifest_json["fits"] = fits;
  manifest_json["e0"] = branch.e0();
  std::ofstream(rc.out / "branch.json") << manifest_json.dump(2) << "\n";
  rc.note_artifact(rc.out / "branch.json");

  std::vector<double> lr, lq;
  for (const auto& s : branch.samples()) {
    lr.push_back(std::log10(s.r));
    lq.push_back(std::log10(
        flat_sobolev_norm(ctx.grid, SpectralField<double>(s.q.cast<std::complex<double>>()), 2.0)));
  }
  dump_dat(rc.out / "q_scaling.dat", lr, lq);
  rc.note_artifact(rc.out / "q_scaling.dat");
}

void run_plane_waves(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json pw = get_or(rc.cfg, "plane_waves", json::object());
  std::vector<double> xis;
  if (pw.contains("xi_list")) {
    xis = pw.at("xi_list").get<std::vector<double>>();
  } else {
    const int n_xi = get_or(pw, "n_xi", 8);
    for (int i = 1; i <= n_xi; ++i) xis.push_back(0.5 * i);
  }
  const json tol = get_or(rc.cfg, "tolerances", json::object());
  const double res_tol = get_or(tol, "residual", 1e-6);

  CplxMat<double> waves(ctx.n(), Eigen::Index(xis.size()));
  double worst = 0;
  {
    CsvWriter csv(rc.out / "plane_waves.csv", {"xi", "residual"});
    for (std::size_t i = 0; i < xis.size(); ++i) {
      const auto sol = solve_plane_wave(ctx, xis[i]);
      waves.col(Eigen::Index(i)) = sol.wave;
      csv.row({xis[i], sol.residual});
      worst = std::max(worst, sol.residual);
    }
    rc.note_artifact(rc.out / "plane_waves.csv");
  }
  rc.manifest.add_check("plane_wave.worst_residual", worst, res_tol, worst <= res_tol);
  dump_array(rc.out / "plane_waves.bin", waves.data(),
             sizeof(std::complex<double>) * std::size_t(waves.size()), "complex128",
             {std::size_t(waves.rows()), std::size_t(waves.cols())});
  rc.note_artifact(rc.out / "plane_waves.bin");

  if (get_or(pw, "build_transform", false)) {
    const auto tls = build_transform(ctx, TransformRoute::kLippmannSchwinger);
    double mism = 0;
    auto m = [](double xi) { return lp_phi(std::abs(xi) / 2.0); };
    for (std::uint64_t s = 0; s < 5; ++s) {
      CounterRng rng(rc.seed + s, 31, 0);
      SpectralField<double> u(ctx.n());
      for (Eigen::Index j = 0; j < ctx.n(); ++j) {
        const double xx = ctx.grid.x(j);
        u[j] = std::exp(-xx * xx / (2 * 64.0)) * std::complex<double>(rng.normal(), rng.normal());
      }
      u = flat_multiplier(ctx.grid, [](double k) { return std::abs(k) <= 6.0 ? 1.0 : 0.0; }, u);
      const auto a = transform_multiplier(tls, m, u);
      const auto bb = distorted_multiplier(ctx, m, u);
      mism = std::max(mism, ctx.grid.norm(SpectralField<double>(a - bb)) / ctx.grid.norm(u));
    }
    rc.manifest.add_check("plane_wave.cross_route_multiplier", mism, 1e-4, mism <= 1e-4);
  }
}

void run_randomize_mc(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json& r = require(rc.cfg, "randomization", "");
  CoefficientLaw law{law_from_string(get_or<std::string>(r, "law", "complex-gaussian")),
                     get_or(r, "variance", 1.0)};
  const int n_samples = get_or(r, "n_samples", 10000);
  const auto part = WienerPartition<double>::covering(ctx);
  rc.manifest.add_check("randomization.partition_residual", part.partition_residual(ctx), 1e-12,
                        part.partition_residual(ctx) < 1e-12);

  for (double p : get_or(r, "khinchin_p", std::vector<double>{2.0, 4.0, 6.0})) {
    std::vector<std::complex<double>> c = {{0.3, 0.1}, {-0.5, 0.2}, {0.1, -0.7}, {0.4, 0.0}};
    const auto rep = khinchin_check(law, c, p, n_samples, rc.seed + 11);
    rc.manifest.add_info("khinchin.raw_ratio_p" + format_number(p), rep.raw_ratio);
    rc.manifest.add_info("khinchin.normalized_p" + format_number(p), rep.normalized);
  }

  // single-coefficient oracle on an eigenvector datum
  Eigen::Index pick = 0;
  double bestdist = 1e300;
  for (Eigen::Index k = 0; k < ctx.n(); ++k) {
    const double kap = energy_coordinate(ctx.eigenvalues[k]);
    if (kap < 2.0 || kap > 6.0) continue;
    const double dist = std::abs(kap - std::round(kap));
    if (dist < bestdist) {
      bestdist = dist;
      pick = k;
    }
  }
  const double kappa = energy_coordinate(ctx.eigenvalues[pick]);
  double sig2 = 0;
  for (int c = 0; c < part.n_cubes; ++c) sig2 += std::pow(part.cube_value(c, kappa), 2.0);
  const SpectralField<double> u_single = ctx.eigenvectors.col(pick);
  auto l2 = make_data_l2_norm(ctx, part, u_single);
  const auto oracle = tail_probability_mc(l2, law, part.n_cubes, {}, n_samples, rc.seed);
  const double expected_slope = -1.0 / (sig2 * std::pow(ctx.grid.norm(u_single), 2.0));
  const json tol = get_or(rc.cfg, "tolerances", json::object());
  const double rel = get_or(tol, "tail_slope_rel", 0.05);
  rc.manifest.add_check("tail.single_cube_slope_rel_err",
                        std::abs(oracle.fit.slope - expected_slope) / std::abs(expected_slope), rel,
                        oracle.fit_valid && std::abs(oracle.fit.slope - expected_slope) <=
                                                rel * std::abs(expected_slope));

  const std::string functional = get_or<std::string>(r, "functional", "evolved-l4");
  const json prof = get_or(r, "profile", json::object());
  const auto u0 = projector_continuous(ctx, build_datum(ctx, prof, rc.seed + 3));
  EnsembleReport rep;
  if (functional == "data-l2") {
    rep = tail_probability_mc(make_data_l2_norm(ctx, part, u0), law, part.n_cubes, {}, n_samples,
                              rc.seed + 1);
  } else if (functional == "evolved-l4") {
    rep = tail_probability_mc(
        make_evolved_lqlr_norm(ctx, part, u0, get_or(r, "q", 4.0), get_or(r, "r", 4.0),
                               get_or(r, "horizon", 1.0), get_or(r, "n_times", 24)),
        law, part.n_cubes, {}, n_samples, rc.seed + 1);
  } else {
    throw SchemaError("/randomization/functional must be data-l2|evolved-l4");
  }
  {
    CsvWriter csv(rc.out / "tail.csv", {"lambda", "p_empirical", "n_samples"});
    for (std::size_t i = 0; i < rep.lambda_grid.size(); ++i) {
      csv.row({rep.lambda_grid[i], rep.tail_probability[i], double(rep.n_samples)});
    }
    rc.note_artifact(rc.out / "tail.csv");
  }
  json fitj = {{"slope", rep.fit.slope},     {"intercept", rep.fit.intercept},
               {"r2", rep.fit.r2},           {"n_samples", rep.n_samples},
               {"seed", rep.seed},           {"functional", functional},
               {"pass", rep.pass}};
  std::ofstream(rc.out / "tail_fit.json") << fitj.dump(2) << "\n";
  rc.note_artifact(rc.out / "tail_fit.json");
  const double r2min = get_or(tol, "fit_r2", 0.9);
  rc.manifest.add_check("tail.multi_cube_slope_negative", rep.fit.slope, 0.0,
                        rep.fit_valid && rep.fit.slope < 0);
  rc.manifest.add_check("tail.multi_cube_r2", rep.fit.r2, r2min, rep.fit.r2 >= r2min);
}

void run_evolve(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json& e = require(rc.cfg, "evolution", "");
  EvolutionConfig<double> cfg;
  cfg.dt = require(e, "dt", "/evolution").get<double>();
  cfg.t_final = require(e, "t_final", "/evolution").get<double>();
  cfg.stride = get_or(e, "stride", 1);
  cfg.mu = get_or(e, "mu", 1.0);
  cfg.dealias = get_or(e, "dealias", false);
  const std::string proj = get_or<std::string>(e, "projection", "full");
  cfg.projection =
      (proj == "continuous-projected") ? ProjectionMode::kContinuousProjected : ProjectionMode::kFull;

  const json& ic = require(rc.cfg, "initial", "");
  const auto psi0 = build_datum(ctx, ic, rc.seed);
  const auto traj = nls_evolve(ctx, psi0, cfg);

  {
    CsvWriter csv(rc.out / "trajectory.csv", {"t", "mass", "energy", "sup"});
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      csv.row({traj.times[i], traj.mass[i], traj.energy[i], traj.sup_norm[i]});
    }
    rc.note_artifact(rc.out / "trajectory.csv");
  }
  json man;
  man["times"] = traj.times;
  man["scheme"] = traj.scheme;
  man["wraparound_margin"] = traj.wraparound_margin;
  man["fields"] = json::array();
  for (std::size_t i = 0; i < traj.fields.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "field_%05zu.bin", i);
    dump_complex_field(rc.out / name, traj.fields[i]);
    rc.note_artifact(rc.out / name);
    man["fields"].push_back(name);
  }
  std::ofstream(rc.out / "trajectory.json") << man.dump(2) << "\n";
  rc.note_artifact(rc.out / "trajectory.json");

  const json tol = get_or(rc.cfg, "tolerances", json::object());
  double drift = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    drift = std::max(drift, std::abs(traj.mass[i] - traj.mass[0]) /
                                (traj.mass[0] * (1.0 + traj.times[i])));
  }
  const double drift_tol = get_or(tol, "mass_drift", 1e-10);
  rc.manifest.add_check("evolve.mass_drift_per_unit_time", drift, drift_tol, drift <= drift_tol);
  rc.manifest.add_info("evolve.wraparound_margin", traj.wraparound_margin);

  if (get_or<std::string>(ic, "type", "") == "groundstate") {
    const double z0 = ic.at("z0").get<double>();
    const auto gs = solve_ground_state(ctx, std::complex<double>(z0, 0));
    double amp = 0, phase = 0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      for (Eigen::Index j = 0; j < ctx.n(); ++j) {
        amp = std::max(amp, std::abs(std::abs(traj.fields[i][j]) - std::abs(gs.Q[j])));
      }
      std::complex<double> ov = ctx.grid.inner(gs.Q, traj.fields[i]);
      ov /= std::abs(ov);
      phase = std::max(phase,
                       std::abs(ov - std::exp(std::complex<double>(0, -gs.E * traj.times[i]))));
    }
    rc.manifest.add_check("evolve.soliton_amp_error", amp, get_or(tol, "soliton_amp", 1e-6),
                          amp <= get_or(tol, "soliton_amp", 1e-6));
    rc.manifest.add_check("evolve.soliton_phase_error", phase, get_or(tol, "soliton_phase", 1e-5),
                          phase <= get_or(tol, "soliton_phase", 1e-5));
  }
}

void run_stability(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json& st = require(rc.cfg, "stability", "");
  const json& e = require(rc.cfg, "evolution", "");
  const json rnd = get_or(rc.cfg, "randomization", json::object());

  const double z0 = require(st, "z0", "/stability").get<double>();
  // dense uniform branch bracketing z0 for the per-record decompositions
  std::vector<double> radii;
  {
    const double lo = std::max(z0 * 0.4, 1e-4), hi = z0 * 1.8;
    const int n = 121;
    for (int i = 0; i < n; ++i) radii.push_back(lo + (hi - lo) * double(i) / double(n - 1));
  }
  const auto branch = build_branch<double>(ctx, radii);

  StabilityRecipe<double> recipe;
  recipe.z0 = std::complex<double>(z0, 0);
  const double bump_amp = get_or(st, "bump_amplitude", 0.0);
  if (bump_amp != 0.0) {
    json bump_ic = {{"type", "random"},
                    {"seed", get_or<std::uint64_t>(st, "bump_seed", rc.seed + 1000)},
                    {"amplitude", bump_amp},
                    {"width", 4.0},
                    {"k_lo", 0.3},
                    {"k_hi", 4.0},
                    {"project", true}};
    recipe.deterministic_bump = build_datum(ctx, bump_ic, rc.seed);
  }
  recipe.epsilon = get_or(rnd, "epsilon", 0.0);
  if (recipe.epsilon != 0.0) {
    recipe.law = CoefficientLaw{law_from_string(get_or<std::string>(rnd, "law", "complex-gaussian")),
                                get_or(rnd, "variance", 1.0)};
    recipe.seed = rc.seed;
    const json prof = get_or(rnd, "profile",
                             json::object({{"type", "random"},
                                           {"width", 4.0},
                                           {"k_lo", 0.3},
                                           {"k_hi", 4.0},
                                           {"amplitude", 1.0},
                                           {"project", true}}));
    recipe.random_profile = build_datum(ctx, prof, rc.seed + 2000);
  }

  StabilityConfig<double> cfg;
  cfg.dt = require(e, "dt", "/evolution").get<double>();
  cfg.t_final = require(e, "t_final", "/evolution").get<double>();
  cfg.stride = get_or(e, "stride", 100);
  const std::string variant = get_or<std::string>(st, "variant", "exact");
  cfg.variant = (variant == "projected")   ? RhsVariant::kProjectedRemainder
                : (variant == "displayed") ? RhsVariant::kPaperDisplayed
                                           : RhsVariant::kExactBracket;
  if (st.contains("dyadic_fractions")) {
    cfg.dyadic_fractions = st.at("dyadic_fractions").get<std::vector<double>>();
  }

  const auto rec = stability_experiment(ctx, branch, recipe, cfg);

  {
    CsvWriter csv(rc.out / "modulation.csv",
                  {"t", "re_z", "im_z", "re_m", "im_m", "mdot_fd", "mdot_ode", "nu_h12",
                   "eta_weighted", "pp_eta"});
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
      csv.row({rec.t[i], rec.z[i].real(), rec.z[i].imag(), rec.m[i].real(), rec.m[i].imag(),
               rec.mdot_fd[i], std::abs(rec.mdot_ode[i]), rec.nu_h12[i], rec.eta_weighted[i],
               rec.pp_eta[i]});
    }
    rc.note_artifact(rc.out / "modulation.csv");
  }

  // tail variation of m over the last 20% of the run
  double tail_var = 0;
  {
    const double T = 0.8 * cfg.t_final;
    std::complex<double> mT(0, 0);
    bool found = false;
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
      if (rec.t[i] >= T) {
        if (!found) {
          mT = rec.m[i];
          found = true;
        }
        tail_var = std::max(tail_var, std::abs(rec.m[i] - mT));
      }
    }
  }
  bool increments_decreasing = true;
  for (std::size_t i = 1; i < rec.scattering_increments.size(); ++i) {
    increments_decreasing =
        increments_decreasing && rec.scattering_increments[i] < rec.scattering_increments[i - 1];
  }
  const auto pp = radiation_discrete_part(rec);
  double mdot_consistency = 0;
  for (std::size_t i = 1; i + 1 < rec.t.size(); ++i) {
    mdot_consistency = std::max(mdot_consistency, std::abs(rec.mdot_fd_c[i] - rec.mdot_ode[i]));
  }

  json summary;
  summary["z_plus"] = {rec.z_plus.real(), rec.z_plus.imag()};
  summary["tail_variation"] = tail_var;
  summary["mdot_l1"] = rec.mdot_integral.empty() ? 0.0 : rec.mdot_integral.back();
  summary["weighted_accumulation"] = rec.weighted_accumulation;
  summary["scattering_increments"] = rec.scattering_increments;
  summary["dyadic_times"] = rec.dyadic_times;
  summary["increments_decreasing"] = increments_decreasing;
  summary["pp_final_over_max"] = (pp.running_max > 0) ? pp.final_value / pp.running_max : 0.0;
  summary["mdot_consistency"] = mdot_consistency;
  summary["truncated"] = rec.truncated;
  if (rec.truncated) summary["truncation_reason"] = rec.truncation_reason;
  std::ofstream(rc.out / "stability.json") << summary.dump(2) << "\n";
  rc.note_artifact(rc.out / "stability.json");

  rc.manifest.add_check("stability.completed", rec.truncated ? 1.0 : 0.0, 0.0, !rec.truncated);
  rc.manifest.add_info("stability.tail_variation", tail_var);
  rc.manifest.add_info("stability.mdot_consistency", mdot_consistency);
  rc.manifest.add_check("stability.increments_decreasing", increments_decreasing ? 1.0 : 0.0, 1.0,
                        increments_decreasing);
}

void run_bilinear(RunContext& rc) {
  const json& b = require(rc.cfg, "bilinear", "");
  const auto N_list = require(b, "N_list", "/bilinear").get<std::vector<long>>();
  const auto M_list = require(b, "M_list", "/bilinear").get<std::vector<long>>();
  const int samples = get_or(b, "samples", 10);
  const double hs = get_or(b, "horizon_scale", 6.0);
  const double env = get_or(b, "envelope", 1.5);
  const int n_times = get_or(b, "n_times", 96);
  const std::string flavor = get_or<std::string>(b, "flavor", "flat");

  BilinearTable table;
  if (flavor == "flat") {
    table = free_bilinear_sweep(build_grid(rc.cfg), N_list, M_list, samples, hs, env, rc.seed,
                                n_times, get_or(require(rc.cfg, "grid", ""), "d", 1));
  } else if (flavor == "distorted") {
    const auto ctx = build_context(rc.cfg);
    table =
        bilinear_sweep(ctx, N_list, M_list, samples, hs, Flavor::kDistorted, env, rc.seed, n_times);
  } else {
    throw SchemaError("/bilinear/flavor must be flat|distorted");
  }

  {
    CsvWriter csv(rc.out / "bilinear.csv",
                  {"N", "M", "horizon", "mean_norm", "mean_ratio", "max_ratio", "resampled"});
    for (const auto& e : table.entries) {
      csv.row({double(e.N), double(e.M), e.horizon, e.mean_norm, e.mean_ratio, e.max_ratio,
               double(e.resampled)});
    }
    rc.note_artifact(rc.out / "bilinear.csv");
  }
  json out;
  out["flavor"] = flavor;
  for (long N : N_list) {
    std::vector<double> lm, ln;
    for (const auto& e : table.entries) {
      if (e.N == N && e.M > e.N) {
        lm.push_back(std::log10(double(e.M)));
        ln.push_back(std::log10(e.mean_norm));
      }
    }
    if (lm.size() >= 2) {
      const auto fit = bilinear_slope(table, N);
      out["slope_N" + std::to_string(N)] = fit.slope;
      dump_dat(rc.out / ("bilinear_N" + std::to_string(N) + ".dat"), lm, ln);
      rc.note_artifact(rc.out / ("bilinear_N" + std::to_string(N) + ".dat"));
      if (b.contains("expected_slope")) {
        const double expect = b.at("expected_slope").get<double>();
        const double band = get_or(b, "slope_tolerance", 0.1);
        rc.manifest.add_check("bilinear.slope_N" + std::to_string(N), fit.slope, band,
                              std::abs(fit.slope - expect) <= band);
      } else {
        rc.manifest.add_info("bilinear.slope_N" + std::to_string(N), fit.slope);
      }
    }
  }
  double worst = 0;
  for (const auto& e : table.entries) worst = std::max(worst, e.max_ratio);
  rc.manifest.add_info("bilinear.max_normalized_ratio", worst);
  std::ofstream(rc.out / "bilinear.json") << out.dump(2) << "\n";
  rc.note_artifact(rc.out / "bilinear.json");
}

void run_strichartz(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json& s = require(rc.cfg, "strichartz", "");
  const double q = require(s, "q", "/strichartz").get<double>();
  const double r = require(s, "r", "/strichartz").get<double>();
  const double horizon = get_or(s, "horizon", 8.0);
  const int samples = get_or(s, "samples", 12);
  const json datum = get_or(s, "datum",
                            json::object({{"type", "random"},
                                          {"width", 5.0},
                                          {"k_lo", 0.0},
                                          {"k_hi", 1.5},
                                          {"project", true}}));
  double worst = 0, worst2 = 0;
  CsvWriter csv(rc.out / "strichartz.csv", {"sample", "ratio", "ratio_doubled"});
  for (int i = 0; i < samples; ++i) {
    json d = datum;
    d["seed"] = rc.seed + std::uint64_t(i);
    const auto u = build_datum(ctx, d, rc.seed + std::uint64_t(i));
    const double a = strichartz_ratio(ctx, u, q, r, horizon);
    const double bb = strichartz_ratio(ctx, u, q, r, 2 * horizon);
    worst = std::max(worst, a);
    worst2 = std::max(worst2, bb);
    csv.row({double(i), a, bb});
  }
  rc.note_artifact(rc.out / "strichartz.csv");
  rc.manifest.add_info("strichartz.constant", worst);
  rc.manifest.add_check("strichartz.horizon_doubling", worst2 / worst, 1.1, worst2 <= 1.1 * worst);
}

void run_local_smoothing(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json sm = get_or(rc.cfg, "smoothing", json::object());
  const double eps = get_or(sm, "eps", 0.1);
  const double horizon = get_or(sm, "horizon", 8.0);
  const int samples = get_or(sm, "samples", 10);
  const int n_times = get_or(sm, "n_times", 200);
  const json datum = get_or(sm, "datum",
                            json::object({{"type", "random"},
                                          {"width", 3.0},
                                          {"k_lo", 1.0},
                                          {"k_hi", 4.0},
                                          {"project", true}}));
  double worst = 0, worst2 = 0;
  CsvWriter csv(rc.out / "local_smoothing.csv", {"sample", "ratio", "ratio_doubled"});
  for (int i = 0; i < samples; ++i) {
    json d = datum;
    d["seed"] = rc.seed + std::uint64_t(i);
    const auto u = build_datum(ctx, d, rc.seed + std::uint64_t(i));
    const double a = local_smoothing_ratio(ctx, u, {}, horizon, eps, n_times).ratio;
    const double bb = local_smoothing_ratio(ctx, u, {}, 2 * horizon, eps, n_times).ratio;
    worst = std::max(worst, a);
    worst2 = std::max(worst2, bb);
    csv.row({double(i), a, bb});
  }
  rc.note_artifact(rc.out / "local_smoothing.csv");
  rc.manifest.add_info("local_smoothing.constant", worst);
  rc.manifest.add_check("local_smoothing.horizon_doubling", worst2 / worst, 1.3,
                        worst2 <= 1.3 * worst);
}

void run_norms(RunContext& rc) {
  const auto ctx = build_context(rc.cfg);
  const json& n = require(rc.cfg, "norms", "");
  const fs::path dir = require(n, "trajectory_dir", "/norms").get<std::string>();
  std::ifstream in(dir / "trajectory.json");
  if (!in) throw IoError("cannot read trajectory manifest: " + (dir / "trajectory.json").string());
  json man = json::parse(in);

  DiscretePath<double> path;
  path.zero_prefix = true;
  const auto times = man.at("times").get<std::vector<double>>();
  const auto files = man.at("fields").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < files.size(); ++i) {
    path.times.push_back(times[i]);
    path.values.push_back(load_complex_field<double>(dir / files[i]));
  }

  const double s = get_or(n, "s", 0.5);
  const double weps = get_or(n, "weight_eps", 0.1);
  json out;
  for (double q : get_or(n, "q_list", std::vector<double>{2.0})) {
    out["grid_vq"][format_number(q)] = q_variation(path, q);
    out["adapted_vq"][format_number(q)] = adapted_norm(ctx, path, q, Generator::kPerturbed, s);
  }
  out["x_norm"] = x_norm(ctx, path);
  std::vector<SpectralField<double>> fields(path.values.begin(), path.values.end());
  out["weighted_spacetime"] = weighted_spacetime_norm(ctx, path.times, fields, -0.5 - weps);
  out["parameters"] = {{"s", s}, {"weight_eps", weps}};
  std::ofstream(rc.out / "norms.json") << out.dump(2) << "\n";
  rc.note_artifact(rc.out / "norms.json");
  rc.manifest.add_info("norms.x_norm", out["x_norm"].get<double>());
}

// ---------------------------------------------------------------------------
// report: aggregate manifests across runs.
// ---------------------------------------------------------------------------

int run_report(const std::vector<std::string>& dirs, const fs::path& outdir) {
  fs::create_directories(outdir);
  json agg;
  agg["runs"] = json::array();
  std::ofstream csv(outdir / "report.csv");
  csv << "run,experiment,check,measured,tolerance,pass\n";
  std::vector<double> bilinear_slopes;
  int run_idx = 0;
  for (const auto& d : dirs) {
    const fs::path mf = fs::path(d) / "run_manifest.json";
    std::ifstream in(mf);
    if (!in) throw IoError("missing or unreadable manifest: " + mf.string());
    json man;
    try {
      man = json::parse(in);
    } catch (const std::exception& e) {
      throw IoError("corrupt manifest " + mf.string() + ": " + std::string(e.what()));
    }
    for (const auto& art : man.at("artifacts")) {
      const fs::path f = fs::path(d) / art.at("file").get<std::string>();
      if (!fs::exists(f)) throw IoError("missing artifact: " + f.string());
      const std::string sum = RunManifest::format_hex(file_checksum(f));
      if (sum != art.at("fnv1a64").get<std::string>()) {
        throw IoError("checksum mismatch for " + f.string());
      }
    }
    const std::string experiment = man.at("config").value("experiment", "");
    json entry;
    entry["dir"] = d;
    entry["experiment"] = experiment;
    for (const auto& c : man.at("checks")) {
      const bool info = c.value("info_only", false);
      const std::string name = c.at("name").get<std::string>();
      csv << run_idx << "," << experiment << "," << name << ","
          << format_number(c.value("measured", 0.0)) << ","
          << format_number(c.value("tolerance", 0.0)) << ","
          << (info ? "info" : (c.value("pass", false) ? "1" : "0")) << "\n";
      if (name.rfind("bilinear.slope", 0) == 0) {
        bilinear_slopes.push_back(c.at("measured").get<double>());
      }
    }
    if (man.contains("failure")) entry["failure"] = man.at("failure");
    entry["checks"] = man.at("checks");
    agg["runs"].push_back(entry);
    ++run_idx;
  }
  if (!bilinear_slopes.empty()) {
    agg["bilinear_slope_mean"] = pairwise_sum(bilinear_slopes) / double(bilinear_slopes.size());
  }
  std::ofstream(outdir / "report.json") << agg.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlslab: desk-scale experiments for NLS with a short-range potential"};
  app.require_subcommand(1);

  const std::vector<std::string> experiments = {
      "spectrum",  "groundstate", "plane-waves", "randomize-mc",    "evolve",
      "stability", "bilinear",    "strichartz",  "local-smoothing", "norms"};

  std::string config_path, out_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<CLI::App*> subs;
  for (const auto& name : experiments) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config")->required();
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) {
      seed = s;
      seed_set = true;
    });
    sub->add_option("--out", out_override, "output directory override");
    subs.push_back(sub);
  }
  auto* rep = app.add_subcommand("report");
  std::vector<std::string> report_dirs;
  rep->add_option("dirs", report_dirs, "run directories");
  rep->add_option("--out", out_override, "output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rep->parsed()) {
      return run_report(report_dirs, out_override.empty() ? fs::path(".") : fs::path(out_override));
    }

    std::string experiment;
    for (std::size_t i = 0; i < experiments.size(); ++i) {
      if (subs[i]->parsed()) experiment = experiments[i];
    }

    json cfg;
    {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "cannot read config: " << config_path << "\n";
        return 4;
      }
      try {
        cfg = json::parse(in);
      } catch (const std::exception& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return 2;
      }
    }
    try {
      validate_schema(cfg, config_schema(), "");
      const std::string declared = require(cfg, "experiment", "").get<std::string>();
      if (declared != experiment) {
        throw SchemaError("config experiment '" + declared + "' does not match subcommand '" +
                          experiment + "'");
      }
      build_grid(cfg);  // surfaces grid violations as schema errors up front
    } catch (const SchemaError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }

    const fs::path outdir =
        !out_override.empty()
            ? fs::path(out_override)
            : fs::path(get_or(get_or(cfg, "output", json::object()), "dir", std::string("out")));
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) {
      std::cerr << "cannot create output dir: " << outdir << "\n";
      return 4;
    }

    if (seed_set) cfg["randomization"]["seed"] = seed;
    const std::uint64_t run_seed =
        seed_set ? seed
                 : get_or(get_or(cfg, "randomization", json::object()), "seed", std::uint64_t(1));

    RunContext rc(cfg, outdir, run_seed);
    const auto t0 = std::chrono::steady_clock::now();
    int exit_code = 0;
    try {
      if (experiment == "spectrum") run_spectrum(rc);
      else if (experiment == "groundstate") run_groundstate(rc);
      else if (experiment == "plane-waves") run_plane_waves(rc);
      else if (experiment == "randomize-mc") run_randomize_mc(rc);
      else if (experiment == "evolve") run_evolve(rc);
      else if (experiment == "stability") run_stability(rc);
      else if (experiment == "bilinear") run_bilinear(rc);
      else if (experiment == "strichartz") run_strichartz(rc);
      else if (experiment == "local-smoothing") run_local_smoothing(rc);
      else if (experiment == "norms") run_norms(rc);
    } catch (const SchemaError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const NumericalError& e) {
      rc.manifest.set_failure(e.what());
      std::cerr << "numerical failure: " << e.what() << "\n";
      exit_code = 3;
    }
    const auto t1 = std::chrono::steady_clock::now();
    rc.manifest.set_wall_time(std::chrono::duration<double>(t1 - t0).count());
    for (const auto& a : rc.artifacts) rc.manifest.add_artifact(a);
    rc.manifest.write(outdir / "run_manifest.json");
    if (exit_code == 0 && !rc.manifest.all_pass()) {
      std::cerr << "one or more checks failed; see " << (outdir / "run_manifest.json") << "\n";
    }
    return exit_code;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
