// SPDX-License-Identifier: Apache-2.0
// agwire: command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "agwire/config.hpp"
#include "agwire/errors.hpp"
#include "agwire/hash.hpp"
#include "agwire/photon_stats.hpp"
#include "agwire/sweeps.hpp"
#include "agwire/validation.hpp"
#include "agwire/wire_mode.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace agwire;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitUnconverged = 3;
constexpr int kExitOracle = 4;

struct Overrides {
  std::string config;
  std::optional<double> grid_nm;
  std::optional<std::string> out;
  std::optional<std::string> preset;
  int workers = 0;
};

RunConfig load(const Overrides& o) {
  json doc = read_config_document(o.config);
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  if (o.grid_nm) doc["grid"]["spacing_nm"] = *o.grid_nm;
  if (o.out) doc["output"]["dir"] = *o.out;
  if (o.preset) doc["sweep"]["preset"] = *o.preset;
  return parse_config(doc);
}

json provenance(const std::string& config_hash) {
  return {{"tool_version", kToolVersion}, {"config_hash", config_hash}};
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("output.dir", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void report_progress(const CellResult& c, std::size_t done, std::size_t total) {
  std::fprintf(stderr, "[%zu/%zu] (%g, %g, %g) %s P=%.6g %s%s\n", done, total, c.position.x,
               c.position.y, c.position.z, c.orientation.c_str(), c.power.power,
               c.failed ? "failed" : (c.report.converged ? "converged" : "unconverged"),
               c.from_cache ? " (cached)" : "");
}

int cmd_simulate(const Overrides& o) {
  const RunConfig cfg = load(o);
  const CellSpec cell = cell_spec(cfg);
  SweepSpec spec;
  spec.scene = cell.scene;
  spec.positions = {cell.position};
  spec.orientations = {cell.orientation};
  spec.wavelength_nm = cell.wavelength_nm;
  spec.spacing_nm = cell.spacing_nm;
  spec.monitor_half_nm = cell.monitor_half_nm;
  spec.solver = cell.solver;
  spec.beta = cell.beta;
  spec.materials = cell.materials;
  spec.cache_dir = cfg.cache_dir;
  spec.workers = o.workers > 0 ? o.workers : 1;
  const EnhancementMap map = run_sweep(spec, report_progress);
  const CellResult& c = map.cells.front();
  const CellResult& ref = map.references.at(cell.orientation);

  EnhancementResult result;
  result.p = c.power.power;
  result.p0 = ref.power.power;
  result.gamma_ratio = c.gamma_ratio;
  if (c.beta) {
    result.beta_left = c.beta->beta_left;
    result.beta_right = c.beta->beta_right;
    result.beta_total = c.beta->beta_total;
  }
  const bool converged = c.report.converged && ref.report.converged;
  json doc = provenance(cfg.hash);
  doc["config"] = cfg.document;
  doc["scene_hash"] = scene_hash(build_scene(cell.scene, cell.materials));
  doc["spacing_nm"] = cell.spacing_nm;
  doc["position_nm"] = {cell.position.x, cell.position.y, cell.position.z};
  doc["orientation"] = cell.orientation;
  doc["result"] = to_json(result);
  doc["converged"] = converged;
  doc["cell"] = to_json(c);
  doc["reference"] = to_json(ref);
  write_json(cfg.output_dir / "result.json", doc);

  std::ofstream csv(cfg.output_dir / "result.csv");
  csv << "# " << kToolVersion << " config_hash=" << cfg.hash << '\n'
      << "x_nm,y_nm,z_nm,orientation,P,P0,gamma_ratio,beta_left,beta_right,converged\n"
      << num(cell.position.x) << ',' << num(cell.position.y) << ',' << num(cell.position.z) << ','
      << cell.orientation << ',' << num(result.p) << ',' << num(result.p0) << ','
      << num(result.gamma_ratio) << ',' << (result.beta_left ? num(*result.beta_left) : "") << ','
      << (result.beta_right ? num(*result.beta_right) : "") << ',' << (converged ? "true" : "false")
      << '\n';

  std::printf("gamma_ratio %.6g  (P = %.6g, P0 = %.6g)\n", result.gamma_ratio, result.p, result.p0);
  if (result.beta_left)
    std::printf("beta_left %.4f  beta_right %.4f  beta_total %.4f\n", *result.beta_left,
                *result.beta_right, *result.beta_total);
  std::printf("wrote %s\n", (cfg.output_dir / "result.json").c_str());
  return converged ? kExitOk : kExitUnconverged;
}

int cmd_sweep(const Overrides& o) {
  const RunConfig cfg = load(o);
  if (!cfg.sweep) throw ConfigError("sweep", "section is required for the sweep subcommand");
  const SweepSpec spec = sweep_spec(cfg, o.workers);
  std::fprintf(stderr, "sweep %s: %zu positions x %zu orientations at %.3g nm\n",
               spec_hash(spec).c_str(), spec.positions.size(), spec.orientations.size(), spec.spacing_nm);
  bool converged = true;
  if (cfg.sweep->kind == SweepKind::Beta) {
    const BetaCurve curve = beta_curve(spec, report_progress);
    write_beta_csv(std::cout, curve);
    for (const auto& p : curve.points) converged = converged && p.converged;
  } else {
    const EnhancementMap map = run_sweep(spec, report_progress);
    write_map_csv(std::cout, map);
    converged = map.failed_cells == 0 && map.unconverged_cells == 0;
  }
  std::fprintf(stderr, "wrote %s\n", spec.output_dir.c_str());
  return converged ? kExitOk : kExitUnconverged;
}

struct ModeArgs {
  double radius_nm = 25.0;
  double wavelength_nm = 700.0;
  double cladding_eps = 1.0;
  std::string out = "out";
};

int cmd_modes(const ModeArgs& a) {
  if (!(a.radius_nm > 0.0)) throw ConfigError("--radius-nm", "must be positive");
  if (!(a.cladding_eps > 0.0)) throw ConfigError("--cladding-eps", "must be positive");
  if (a.wavelength_nm < 500.0 || a.wavelength_nm > 900.0)
    throw ConfigError("--wavelength-nm", "lies outside the fitted silver band 500-900 nm");
  const json inputs{{"radius_nm", a.radius_nm}, {"wavelength_nm", a.wavelength_nm}, {"cladding_eps", a.cladding_eps}};
  const std::string hash = content_hash(inputs.dump());
  const cplx eps = permittivity(default_materials().silver, a.wavelength_nm);
  const GuidedMode mode = solve_fundamental_mode(a.radius_nm, eps, a.cladding_eps, a.wavelength_nm);
  const cplx flat = flat_interface_kz(eps, a.cladding_eps, a.wavelength_nm) / mode.k0();

  json doc = provenance(hash);
  doc["inputs"] = inputs;
  doc["mode"] = to_json(mode);
  doc["flat_interface_n_eff"] = {flat.real(), flat.imag()};
  const fs::path dir(a.out);
  write_json(dir / "mode.json", doc);
  std::ofstream csv(dir / "mode.csv");
  csv << "# " << kToolVersion << " config_hash=" << hash << '\n';
  write_mode_csv(csv, mode);

  std::printf("radius %.6g nm, wavelength %.6g nm, eps_metal %.6g%+.6gi\n", a.radius_nm,
              a.wavelength_nm, eps.real(), eps.imag());
  std::printf("n_eff %.6f%+.6fi   L_p %.1f nm   residual %.2e\n", mode.n_eff().real(),
              mode.n_eff().imag(), mode.propagation_length_nm(), mode.residual);
  std::printf("flat-interface n_eff %.6f   relative difference %.3e\n", flat.real(),
              std::abs(mode.n_eff().real() - flat.real()) / flat.real());
  return kExitOk;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read input file " + path);
  return in;
}

int cmd_fit_g2(const std::string& path, bool background, const std::string& out) {
  std::ifstream in = open_input(path);
  const G2Histogram hist = parse_g2_csv(in);
  G2FitOptions options;
  options.background_correction = background;
  const ThreeLevelFit fit = fit_g2(hist, options);
  std::printf("a = %.4f  tau1 = %.4f ns  tau2 = %.4f ns  g2(0) = %.4f\n", fit.a, fit.tau1_ns,
              fit.tau2_ns, fit.g2_at_zero);
  std::printf("classification: %s (g2(0) %s 0.5)\n",
              fit.single_emitter ? "single emitter" : "not a single emitter",
              fit.single_emitter ? "<" : ">=");
  if (!out.empty()) {
    json doc = provenance(content_hash(json{{"input", path}, {"background_correction", background}}.dump()));
    doc["fit"] = to_json(fit);
    write_json(fs::path(out) / "g2_fit.json", doc);
  }
  return kExitOk;
}

struct LifetimeArgs {
  std::string trace;
  std::string reference;
  double start_ns = 0.0;
  std::optional<double> end_ns;
  std::string out;
};

LifetimeFit fit_trace(const std::string& path, const LifetimeArgs& a) {
  std::ifstream in = open_input(path);
  const TimeTrace trace = parse_trace_csv(in);
  LifetimeWindow w;
  w.start_ns = a.start_ns;
  w.end_ns = a.end_ns ? *a.end_ns : std::min(trace.t_ns.back(), w.pulse_period_ns);
  return fit_lifetime_biexp(trace, w);
}

void print_lifetime(const char* label, const LifetimeFit& f) {
  std::printf("%s: tau_fast = %.4f ns (A %.4g)  tau_slow = %.4f +- %.4f ns (A %.4g)  B = %.4g%s%s\n",
              label, f.tau_fast_ns, f.amplitude_fast, f.tau_slow_ns, f.tau_slow_sigma(),
              f.amplitude_slow, f.background, f.fast_is_wire ? "  [fast component: wire]" : "",
              f.short_window ? "  [warning: window shorter than 3 lifetimes]" : "");
}

int cmd_fit_lifetime(const LifetimeArgs& a) {
  const LifetimeFit fit = fit_trace(a.trace, a);
  print_lifetime("trace", fit);
  json doc = provenance(content_hash(json{{"trace", a.trace}, {"reference", a.reference},
                                          {"start_ns", a.start_ns}, {"end_ns", a.end_ns ? json(*a.end_ns) : json()}}
                                         .dump()));
  doc["fit"] = to_json(fit);
  if (!a.reference.empty()) {
    const LifetimeFit ref = fit_trace(a.reference, a);
    print_lifetime("reference", ref);
    const EnhancementRatio r = enhancement_from_lifetimes(ref, fit);
    std::printf("decay-rate enhancement = %.4f +- %.4f\n", r.ratio, r.sigma);
    doc["reference_fit"] = to_json(ref);
    doc["enhancement"] = {{"ratio", r.ratio}, {"sigma", r.sigma}};
  }
  if (!a.out.empty()) write_json(fs::path(a.out) / "lifetime_fit.json", doc);
  return fit.converged ? kExitOk : kExitUnconverged;
}

struct ValidateArgs {
  double grid_nm = 2.5;
  bool quick = false;
  std::string cache;
  std::string out;
};

int cmd_validate(const ValidateArgs& a) {
  if (!(a.grid_nm > 0.0)) throw ConfigError("--grid-nm", "must be positive");
  ValidationOptions o;
  o.spacing_nm = a.grid_nm;
  if (a.quick) {
    o.mirror = false;
    o.propagation = false;
  }
  if (!a.cache.empty()) o.cache = ResultCache(fs::path(a.cache));
  const auto checks = run_validation(o, [](const std::string& s) { std::fprintf(stderr, "running %s\n", s.c_str()); });
  bool ok = true;
  std::printf("%-52s %14s %14s %10s %10s  %s\n", "oracle", "measured", "reference", "error", "tolerance", "result");
  for (const auto& c : checks) {
    std::printf("%-52s %14.6g %14.6g %10.3e %10.3e  %s\n", c.name.c_str(), c.measured, c.reference,
                c.error, c.tolerance, c.passed ? "PASS" : "FAIL");
    ok = ok && c.passed;
  }
  if (!a.out.empty()) {
    json doc = provenance(content_hash(json{{"grid_nm", a.grid_nm}, {"quick", a.quick}}.dump()));
    doc["checks"] = json::array();
    for (const auto& c : checks) doc["checks"].push_back(to_json(c));
    write_json(fs::path(a.out) / "validation.json", doc);
  }
  return ok ? kExitOk : kExitOracle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emitter and silver-nanowire coupling simulations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Overrides sim_o, sweep_o;
  auto add_common = [](CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--grid-nm", o.grid_nm, "override grid.spacing_nm");
    cmd->add_option("--out", o.out, "override output.dir");
    cmd->add_option("--workers", o.workers, "concurrent simulations (default: available cores)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "one scene plus its reference run");
  add_common(simulate, sim_o);
  auto* sweep = app.add_subcommand("sweep", "position x orientation map or beta curve");
  add_common(sweep, sweep_o);
  sweep->add_option("--preset", sweep_o.preset, "lattice preset")->check(CLI::IsMember({"desk", "production"}));

  ModeArgs mode_a;
  auto* modes = app.add_subcommand("modes", "fundamental bound mode of a silver wire");
  modes->add_option("--radius-nm", mode_a.radius_nm, "wire radius")->required();
  modes->add_option("--wavelength-nm", mode_a.wavelength_nm, "vacuum wavelength");
  modes->add_option("--cladding-eps", mode_a.cladding_eps, "cladding permittivity");
  modes->add_option("--out", mode_a.out, "output directory");

  std::string g2_path, g2_out;
  bool g2_background = false;
  auto* fit_g2_cmd = app.add_subcommand("fit-g2", "three-level fit of a g2 histogram");
  fit_g2_cmd->add_option("histogram", g2_path, "CSV with header tau_<unit>,counts")->required()->check(CLI::ExistingFile);
  fit_g2_cmd->add_flag("--background-correction", g2_background, "fit an uncorrelated-background contrast");
  fit_g2_cmd->add_option("--out", g2_out, "write g2_fit.json into this directory");

  LifetimeArgs life_a;
  auto* fit_life = app.add_subcommand("fit-lifetime", "biexponential fit of a decay trace");
  fit_life->add_option("trace", life_a.trace, "CSV with header t_<unit>,counts")->required()->check(CLI::ExistingFile);
  fit_life->add_option("--reference", life_a.reference, "reference trace for the enhancement ratio")->check(CLI::ExistingFile);
  fit_life->add_option("--start-ns", life_a.start_ns, "first time after the instrument response");
  fit_life->add_option("--end-ns", life_a.end_ns, "end of the fit window");
  fit_life->add_option("--out", life_a.out, "write lifetime_fit.json into this directory");

  ValidateArgs val_a;
  auto* validate_cmd = app.add_subcommand("validate", "analytic oracle suite");
  validate_cmd->add_option("--grid-nm", val_a.grid_nm, "grid spacing");
  validate_cmd->add_flag("--quick", val_a.quick, "vacuum and mode checks only");
  validate_cmd->add_option("--cache", val_a.cache, "result cache directory");
  validate_cmd->add_option("--out", val_a.out, "write validation.json into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(sim_o);
    if (*sweep) return cmd_sweep(sweep_o);
    if (*modes) return cmd_modes(mode_a);
    if (*fit_g2_cmd) return cmd_fit_g2(g2_path, g2_background, g2_out);
    if (*fit_life) return cmd_fit_lifetime(life_a);
    if (*validate_cmd) return cmd_validate(val_a);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const GeometryError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const DegenerateDataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const FitError& e) {
    std::fprintf(stderr, "fit failed: %s\n", e.what());
    return kExitUnconverged;
  } catch (const InstabilityError& e) {
    std::fprintf(stderr, "numerical instability: %s\n", e.what());
    return kExitUnconverged;
  } catch (const NoBoundModeError& e) {
    std::fprintf(stderr, "mode solver: %s\n", e.what());
    return kExitUnconverged;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUnconverged;
  }
  return kExitInput;
}
