// SPDX-License-Identifier: Apache-2.0
#include "agwire/sweeps.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "agwire/cache.hpp"
#include "agwire/errors.hpp"
#include "agwire/hash.hpp"
#include "agwire/wire_mode.hpp"

namespace agwire {

// Bumped whenever a numerical change invalidates cached cells.
static constexpr int kCellFormat = 3;

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::SingleWire: return "single-wire";
    case SceneKind::TwoWire: return "two-wire";
    case SceneKind::Reference: return "reference";
  }
  return "?";
}

SceneKind scene_kind_from_string(const std::string& id) {
  if (id == "single-wire") return SceneKind::SingleWire;
  if (id == "two-wire") return SceneKind::TwoWire;
  if (id == "reference") return SceneKind::Reference;
  throw ConfigError("scene.builder", "unknown scene builder '" + id + "'");
}

Scene build_scene(const SceneParams& p, const MaterialSet& materials) {
  Scene scene;
  switch (p.kind) {
    case SceneKind::SingleWire:
      scene = build_single_wire_scene(p.wire_radius_nm, p.wire_length_nm, p.nd_radius_nm,
                                      p.nd_center_to_wire_edge_nm, materials);
      break;
    case SceneKind::TwoWire:
      scene = build_two_wire_scene(p.wire_radius_nm, p.wire_length_nm, p.nd_radius_nm, p.gap_nm,
                                   materials);
      break;
    case SceneKind::Reference:
      return build_reference_scene(p.nd_radius_nm, materials);
  }
  if (p.kept_length_nm > 0.0) scene = truncate_wires(std::move(scene), p.kept_length_nm);
  return scene;
}

SceneParams reference_params(const SceneParams& p) {
  SceneParams r;
  r.kind = SceneKind::Reference;
  r.nd_radius_nm = p.nd_radius_nm;
  return r;
}

Vec3 orientation_vector(const std::string& name) {
  if (name == "x") return {1, 0, 0};
  if (name == "y") return {0, 1, 0};
  if (name == "z") return {0, 0, 1};
  throw ConfigError("orientations", "unknown orientation '" + name + "' (expected x, y or z)");
}

namespace {

nlohmann::json vec_json(Vec3 v) { return {v.x, v.y, v.z}; }
Vec3 vec_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

// JSON has no NaN; failed cells store null.
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
double num_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

nlohmann::json scene_params_json(const SceneParams& p) {
  nlohmann::json j{{"builder", to_string(p.kind)}, {"nd_radius_nm", p.nd_radius_nm}};
  if (p.kind != SceneKind::Reference) {
    j["wire_radius_nm"] = p.wire_radius_nm;
    j["wire_length_nm"] = p.wire_length_nm;
    j["kept_length_nm"] = p.kept_length_nm;
    if (p.kind == SceneKind::SingleWire)
      j["nd_center_to_wire_edge_nm"] = p.nd_center_to_wire_edge_nm;
    else
      j["gap_nm"] = p.gap_nm;
  }
  return j;
}

nlohmann::json beta_json(const BetaSettings& b) {
  if (!b.enabled) return nullptr;
  return {{"plane_offset_nm", b.plane_offset_nm},
          {"window_radius_nm", b.window_radius_nm},
          {"annulus_outer_nm", b.annulus_outer_nm},
          {"cladding_eps", b.cladding_eps}};
}

Vec3 snapped_node(Vec3 p, const GridSpec& g) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    const double idx = std::round(p[a] / g.spacing_nm - g.origin[a]);
    out[a] = (idx + g.origin[a]) * g.spacing_nm;
  }
  return out;
}

/// Inner tip, outward direction and axis of every y-directed wire, left (negative y) first.
struct WireEnd {
  Vec3 tip;
  Vec3 direction;
};

std::vector<WireEnd> wire_ends(const Scene& scene) {
  std::vector<WireEnd> ends;
  for (const auto& s : scene.shapes) {
    const auto* c = std::get_if<Capsule>(&s.geometry);
    if (!c) continue;
    const bool negative = c->end.y < c->start.y;
    const double inner = negative ? std::max(c->start.y, c->end.y) + c->radius
                                  : std::min(c->start.y, c->end.y) - c->radius;
    ends.push_back({{c->start.x, inner, c->start.z}, {0.0, negative ? -1.0 : 1.0, 0.0}});
  }
  std::sort(ends.begin(), ends.end(), [](const WireEnd& a, const WireEnd& b) { return a.tip.y < b.tip.y; });
  return ends;
}

}  // namespace

nlohmann::json to_json(const CellResult& r) {
  nlohmann::json j{{"position_nm", vec_json(r.position)},
                   {"orientation", r.orientation},
                   {"P", num(r.power.power)},
                   {"spacing_nm", r.power.spacing_nm},
                   {"box_extent_nm", vec_json(r.power.box_extent_nm)},
                   {"report", to_json(r.report)},
                   {"gamma_ratio", num(r.gamma_ratio)},
                   {"failed", r.failed},
                   {"error", r.error},
                   {"key", r.key}};
  if (r.beta) {
    j["beta"] = {{"beta_left", num(r.beta->beta_left)},
                 {"beta_right", num(r.beta->beta_right)},
                 {"beta_total", num(r.beta->beta_total)},
                 {"guided_left", num(r.beta->guided_left)},
                 {"guided_right", num(r.beta->guided_right)},
                 {"raw_guided_left", num(r.raw_guided_left.value_or(NAN))},
                 {"raw_guided_right", num(r.raw_guided_right.value_or(NAN))}};
  }
  return j;
}

CellResult cell_result_from_json(const nlohmann::json& j) {
  CellResult r;
  r.position = vec_from(j.at("position_nm"));
  r.orientation = j.at("orientation").get<std::string>();
  r.power.power = num_from(j.at("P"));
  r.power.spacing_nm = j.at("spacing_nm").get<double>();
  r.power.box_extent_nm = vec_from(j.at("box_extent_nm"));
  r.report = run_report_from_json(j.at("report"));
  r.gamma_ratio = num_from(j.at("gamma_ratio"));
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.key = j.at("key").get<std::string>();
  if (j.contains("beta")) {
    const auto& b = j["beta"];
    r.beta = BetaFactors{num_from(b.at("beta_left")), num_from(b.at("beta_right")),
                         num_from(b.at("beta_total")), num_from(b.at("guided_left")),
                         num_from(b.at("guided_right"))};
    if (const double v = num_from(b.at("raw_guided_left")); std::isfinite(v)) r.raw_guided_left = v;
    if (const double v = num_from(b.at("raw_guided_right")); std::isfinite(v)) r.raw_guided_right = v;
  }
  return r;
}

std::string cell_key(const CellSpec& spec) {
  auto solver = to_json(spec.solver);
  nlohmann::json j{{"format", kCellFormat},
                   {"tool", kToolVersion},
                   {"scene", scene_hash(build_scene(spec.scene, spec.materials))},
                   {"scene_params", scene_params_json(spec.scene)},
                   {"position_nm", vec_json(spec.position)},
                   {"orientation", spec.orientation},
                   {"wavelength_nm", spec.wavelength_nm},
                   {"spacing_nm", spec.spacing_nm},
                   {"monitor_half_nm", spec.monitor_half_nm},
                   {"solver", solver},
                   {"beta", beta_json(spec.beta)}};
  return content_hash(j.dump());
}

CellResult simulate_cell(const CellSpec& spec, int threads) {
  CellResult out;
  out.position = spec.position;
  out.orientation = spec.orientation;
  out.key = cell_key(spec);

  const Scene scene = build_scene(spec.scene, spec.materials);
  const GridSpec grid = make_grid(scene.bounding_box, spec.spacing_nm);
  DipoleSource source;
  source.position = spec.position;
  source.orientation = orientation_vector(spec.orientation);
  source.wavelength_nm = spec.wavelength_nm;
  SolverSettings settings = spec.solver;
  settings.threads = threads;

  Simulation sim(scene, grid, source, settings);
  const Vec3 centre = snapped_node(spec.position, grid);
  const double half = spec.monitor_half_nm;
  sim.add_monitor(BoxMonitorSpec{"box", {centre - Vec3{half, half, half}, centre + Vec3{half, half, half}}});

  std::vector<WireEnd> ends;
  const bool beta = spec.beta.enabled && spec.scene.kind == SceneKind::TwoWire;
  if (beta) {
    ends = wire_ends(scene);
    const double reach = spec.beta.annulus_outer_nm + spec.spacing_nm;
    for (std::size_t w = 0; w < ends.size(); ++w) {
      const Vec3 c = ends[w].tip + spec.beta.plane_offset_nm * ends[w].direction;
      PlaneMonitorSpec plane;
      plane.name = w == 0 ? "left" : "right";
      plane.axis = 1;
      plane.position_nm = c.y;
      plane.direction = ends[w].direction.y > 0 ? 1 : -1;
      plane.window_nm = {c - Vec3{reach, reach, reach}, c + Vec3{reach, reach, reach}};
      sim.add_monitor(plane);
    }
  }

  out.report = sim.run_cw();
  out.power = emitted_power(sim.monitor("box"));

  if (beta) {
    const GuidedMode mode = solve_fundamental_mode(
        spec.scene.wire_radius_nm, permittivity(spec.materials.silver, spec.wavelength_nm),
        spec.beta.cladding_eps, spec.wavelength_nm);
    std::array<CrossSection, 2> cs;
    for (int w = 0; w < 2; ++w) {
      const PhasorMonitor& plane = sim.monitor(w == 0 ? "left" : "right");
      // The plane snaps to a node; the offset follows the snapped position.
      const double y = sim.grid().coord2(1, 2L * plane.lo[1]);
      cs[w] = CrossSection{&plane,
                           &sim.grid(),
                           {ends[w].tip.x, y, ends[w].tip.z},
                           ends[w].direction,
                           std::abs(y - ends[w].tip.y),
                           spec.scene.wire_radius_nm,
                           spec.wavelength_nm};
    }
    out.beta = beta_factors(cs[0], cs[1], mode, out.power.power);
    out.raw_guided_left = raw_flux_guided_power(cs[0], mode, spec.beta.window_radius_nm,
                                                spec.beta.annulus_outer_nm);
    out.raw_guided_right = raw_flux_guided_power(cs[1], mode, spec.beta.window_radius_nm,
                                                 spec.beta.annulus_outer_nm);
  }
  return out;
}

void validate(const SweepSpec& spec) {
  if (spec.positions.empty()) throw ConfigError("sweep.positions", "at least one position is required");
  if (spec.orientations.empty())
    throw ConfigError("sweep.orientations", "at least one orientation is required");
  for (const auto& o : spec.orientations) orientation_vector(o);
  if (!(spec.spacing_nm > 0.0)) throw ConfigError("grid.spacing_nm", "must be positive");
  if (!(spec.wavelength_nm > 0.0)) throw ConfigError("source.wavelength_nm", "must be positive");
  if (!(spec.monitor_half_nm > 0.0)) throw ConfigError("monitors.box_half_nm", "must be positive");
  for (std::size_t i = 0; i < spec.positions.size(); ++i) {
    if (!(norm(spec.positions[i]) < spec.scene.nd_radius_nm))
      throw ConfigError("sweep.positions[" + std::to_string(i) + "]",
                        "position must lie strictly inside the nanodiamond");
  }
}

nlohmann::json to_json(const SweepSpec& spec) {
  nlohmann::json positions = nlohmann::json::array();
  for (Vec3 p : spec.positions) positions.push_back(vec_json(p));
  return {{"scene", scene_params_json(spec.scene)},
          {"positions_nm", positions},
          {"orientations", spec.orientations},
          {"wavelength_nm", spec.wavelength_nm},
          {"spacing_nm", spec.spacing_nm},
          {"monitor_half_nm", spec.monitor_half_nm},
          {"solver", to_json(spec.solver)},
          {"beta", beta_json(spec.beta)}};
}

std::string spec_hash(const SweepSpec& spec) {
  nlohmann::json j = to_json(spec);
  j["format"] = kCellFormat;
  j["tool"] = kToolVersion;
  j["scene_hash"] = scene_hash(build_scene(spec.scene, spec.materials));
  return content_hash(j.dump());
}

std::vector<Vec3> square_lattice(double half_span_nm, int n) {
  if (n < 1) throw ConfigError("lattice", "needs at least one point per axis");
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = n == 1 ? 0.0 : -half_span_nm + 2.0 * half_span_nm * i / (n - 1);
      const double y = n == 1 ? 0.0 : -half_span_nm + 2.0 * half_span_nm * j / (n - 1);
      out.push_back({x, y, 0.0});
    }
  }
  return out;
}

namespace {

int resolve_workers(int requested, std::size_t tasks) {
  int w = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::min<std::size_t>(w, tasks));
}

/// Runs every task on `workers` threads. Results land at their task index.
std::vector<CellResult> run_cells(const std::vector<CellSpec>& tasks, const SweepSpec& spec,
                                  const SweepProgress& progress) {
  std::vector<CellResult> results(tasks.size());
  const int workers = resolve_workers(spec.workers, tasks.size());
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int threads = spec.solver.threads > 0 ? spec.solver.threads : std::max(1, hw / workers);
  const ResultCache cache(spec.cache_dir);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const CellSpec& t = tasks[i];
      CellResult r;
      const std::string key = cell_key(t);
      std::optional<nlohmann::json> cached = cache.get(key);
      if (cached) {
        r = cell_result_from_json(*cached);
        r.from_cache = true;
      } else {
        try {
          r = simulate_cell(t, threads);
        } catch (const std::exception& e) {
          r = CellResult{};
          r.position = t.position;
          r.orientation = t.orientation;
          r.power.power = std::numeric_limits<double>::quiet_NaN();
          r.failed = true;
          r.error = e.what();
          r.key = key;
        }
        if (!r.failed) cache.put(key, to_json(r));
      }
      results[i] = std::move(r);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(results[i], finished, tasks.size());
      }
    }
  };

  std::vector<std::jthread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  return results;
}

CellSpec make_cell(const SweepSpec& spec, const SceneParams& scene, Vec3 position,
                   const std::string& orientation, bool beta) {
  CellSpec c;
  c.scene = scene;
  c.position = position;
  c.orientation = orientation;
  c.wavelength_nm = spec.wavelength_nm;
  c.spacing_nm = spec.spacing_nm;
  c.monitor_half_nm = spec.monitor_half_nm;
  c.solver = spec.solver;
  c.materials = spec.materials;
  if (beta) c.beta = spec.beta;
  return c;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EnhancementMap run_sweep(const SweepSpec& spec, const SweepProgress& progress) {
  validate(spec);
  const SceneParams ref_scene = reference_params(spec.scene);
  const bool beta = spec.beta.enabled && spec.scene.kind == SceneKind::TwoWire;

  std::vector<CellSpec> tasks;
  for (const auto& o : spec.orientations) tasks.push_back(make_cell(spec, ref_scene, {0, 0, 0}, o, false));
  for (Vec3 p : spec.positions)
    for (const auto& o : spec.orientations) tasks.push_back(make_cell(spec, spec.scene, p, o, beta));

  std::vector<CellResult> results = run_cells(tasks, spec, progress);

  EnhancementMap map;
  map.spec_hash = spec_hash(spec);
  const std::size_t n_ref = spec.orientations.size();
  for (std::size_t i = 0; i < n_ref; ++i) map.references[spec.orientations[i]] = results[i];
  for (std::size_t i = n_ref; i < results.size(); ++i) {
    CellResult c = std::move(results[i]);
    const CellResult& ref = map.references.at(c.orientation);
    if (!c.failed && ref.failed) {
      c.failed = true;
      c.error = "reference run failed: " + ref.error;
    }
    if (!c.failed) {
      try {
        c.gamma_ratio = decay_rate_enhancement(c.power, ref.power);
      } catch (const std::exception& e) {
        c.failed = true;
        c.error = e.what();
      }
    }
    if (c.failed) c.gamma_ratio = std::numeric_limits<double>::quiet_NaN();
    if (c.failed) ++map.failed_cells;
    if (!c.failed && !(c.report.converged && ref.report.converged)) ++map.unconverged_cells;
    map.cells.push_back(std::move(c));
  }
  if (map.failed_cells == static_cast<int>(map.cells.size())) {
    throw SweepError("every cell of the sweep failed; first error: " + map.cells.front().error);
  }
  if (!spec.output_dir.empty()) write_map(map, spec);
  return map;
}

void write_map_csv(std::ostream& out, const EnhancementMap& map) {
  out << "x_nm,y_nm,z_nm,orientation,gamma_ratio,beta_left,beta_right,converged\n";
  for (const auto& c : map.cells) {
    const bool converged = !c.failed && c.report.converged && map.references.at(c.orientation).report.converged;
    out << fmt(c.position.x) << ',' << fmt(c.position.y) << ',' << fmt(c.position.z) << ','
        << c.orientation << ',' << fmt(c.gamma_ratio) << ','
        << (c.beta ? fmt(c.beta->beta_left) : "") << ',' << (c.beta ? fmt(c.beta->beta_right) : "")
        << ',' << (converged ? "true" : "false") << '\n';
  }
}

nlohmann::json map_sidecar(const EnhancementMap& map, const SweepSpec& spec) {
  nlohmann::json refs = nlohmann::json::object();
  for (const auto& [o, r] : map.references) refs[o] = to_json(r);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : map.cells) cells.push_back(to_json(c));
  return {{"tool_version", kToolVersion},
          {"spec_hash", map.spec_hash},
          {"config_hash", map.spec_hash},
          {"spec", to_json(spec)},
          {"references", refs},
          {"cells", cells},
          {"failed_cells", map.failed_cells},
          {"unconverged_cells", map.unconverged_cells}};
}

void write_map(const EnhancementMap& map, const SweepSpec& spec) {
  std::filesystem::create_directories(spec.output_dir);
  std::ofstream csv(spec.output_dir / "map.csv");
  csv << "# " << kToolVersion << " spec_hash=" << map.spec_hash << '\n';
  write_map_csv(csv, map);
  std::ofstream js(spec.output_dir / "map.json");
  js << map_sidecar(map, spec).dump(2) << '\n';
}

BetaCurve beta_curve(const SweepSpec& spec, const SweepProgress& progress) {
  if (spec.scene.kind != SceneKind::TwoWire) throw ConfigError("scene.builder", "beta curves need the two-wire scene");
  SweepSpec s = spec;
  s.orientations = {"y"};
  s.beta.enabled = true;
  s.output_dir.clear();
  const EnhancementMap map = run_sweep(s, progress);
  BetaCurve curve;
  curve.spec_hash = map.spec_hash;
  for (const auto& c : map.cells) {
    BetaPoint p;
    p.position = c.position;
    p.gamma_ratio = c.gamma_ratio;
    p.converged = !c.failed && c.report.converged;
    if (c.beta && !c.failed) {
      p.beta_left = c.beta->beta_left;
      p.beta_right = c.beta->beta_right;
      p.beta_total = c.beta->beta_total;
      p.raw_beta_left = c.raw_guided_left.value_or(NAN) / c.power.power;
      p.raw_beta_right = c.raw_guided_right.value_or(NAN) / c.power.power;
    } else {
      p.beta_left = p.beta_right = p.beta_total = p.raw_beta_left = p.raw_beta_right = NAN;
    }
    curve.points.push_back(p);
  }
  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(spec.output_dir);
    std::ofstream csv(spec.output_dir / "beta.csv");
    csv << "# " << kToolVersion << " spec_hash=" << curve.spec_hash << '\n';
    write_beta_csv(csv, curve);
    std::ofstream js(spec.output_dir / "beta.json");
    js << map_sidecar(map, s).dump(2) << '\n';
  }
  return curve;
}

void write_beta_csv(std::ostream& out, const BetaCurve& curve) {
  out << "x_nm,y_nm,z_nm,beta_left,beta_right,beta_total,raw_beta_left,raw_beta_right,gamma_ratio,converged\n";
  for (const auto& p : curve.points) {
    out << fmt(p.position.x) << ',' << fmt(p.position.y) << ',' << fmt(p.position.z) << ','
        << fmt(p.beta_left) << ',' << fmt(p.beta_right) << ',' << fmt(p.beta_total) << ','
        << fmt(p.raw_beta_left) << ',' << fmt(p.raw_beta_right) << ',' << fmt(p.gamma_ratio)
        << ',' << (p.converged ? "true" : "false") << '\n';
  }
}

Preset preset_from_string(const std::string& name) {
  if (name == "desk") return Preset::Desk;
  if (name == "production") return Preset::Production;
  throw ConfigError("preset", "unknown preset '" + name + "' (expected desk or production)");
}

SweepSpec map_preset(Preset preset, SceneParams scene) {
  SweepSpec s;
  s.scene = scene;
  if (preset == Preset::Desk) {
    s.positions = square_lattice(10.0, 5);
    s.spacing_nm = 5.0;
  } else {
    // 11 x 11 points at 2.5 nm pitch, clipped to the sphere.
    for (Vec3 p : square_lattice(12.5, 11))
      if (norm(p) < scene.nd_radius_nm - 1.0) s.positions.push_back(p);
    s.spacing_nm = 2.5;
    s.scene.kept_length_nm = std::max(scene.kept_length_nm, 500.0);
  }
  return s;
}

SweepSpec beta_preset(Preset preset) {
  SweepSpec s;
  s.scene.kind = SceneKind::TwoWire;
  s.scene.wire_radius_nm = 12.5;
  s.scene.nd_radius_nm = 15.0;
  s.scene.gap_nm = 34.0;
  s.scene.kept_length_nm = 350.0;
  s.orientations = {"y"};
  s.beta.enabled = true;
  s.spacing_nm = 2.5;
  s.monitor_half_nm = 5.0;
  const int n = preset == Preset::Desk ? 5 : 9;
  for (int i = 0; i < n; ++i) s.positions.push_back({0.0, -10.0 + 20.0 * i / (n - 1), 0.0});
  return s;
}

}  // namespace agwire
