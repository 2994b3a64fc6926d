// SPDX-License-Identifier: Apache-2.0
#include "agwire/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "agwire/errors.hpp"
#include "agwire/hash.hpp"

namespace agwire {
namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be an object");
    for (const auto& [key, value] : j_.items()) {
      if (!allowed.contains(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& at(const std::string& key) const { return j_.at(key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    return v.get<double>();
  }
  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
  }
  int integer(const std::string& key, int fallback, int lo, int hi) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "must be an integer");
    const long long i = v.get<long long>();
    if (i < lo || i > hi)
      throw ConfigError(field(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(i);
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "must be a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v.get<bool>();
  }

 private:
  const json& j_;
  std::string path_;
};

Vec3 vector3(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(field, "must be an array of three numbers");
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    if (!v[a].is_number()) throw ConfigError(field, "must be an array of three numbers");
    out[a] = v[a].get<double>();
  }
  return out;
}

const json& section_or_empty(const json& doc, const char* key) {
  static const json empty = json::object();
  return doc.contains(key) ? doc.at(key) : empty;
}

MaterialSet parse_materials(const json& j) {
  Section s(j, "materials", {"silver_band_nm", "silver_poles", "diamond_index", "silica_index"});
  MaterialSet set = default_materials();
  if (s.has("silver_band_nm") || s.has("silver_poles")) {
    std::pair<double, double> band{500.0, 900.0};
    if (s.has("silver_band_nm")) {
      const json& b = s.at("silver_band_nm");
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number() ||
          !(b[0].get<double>() > 0.0) || !(b[1].get<double>() > b[0].get<double>()))
        throw ConfigError("materials.silver_band_nm", "must be [lo, hi] with 0 < lo < hi");
      band = {b[0].get<double>(), b[1].get<double>()};
    }
    const int poles = s.integer("silver_poles", 2, 1, 4);
    try {
      const auto table = load_optics_csv(data_directory() / "silver_johnson_christy.csv");
      set.silver = fit_pole_model(table, poles, band, "silver").model;
    } catch (const DomainError& e) {
      throw ConfigError("materials.silver_band_nm", e.what());
    }
  }
  const double nd = s.positive("diamond_index", 2.41);
  const double ns = s.positive("silica_index", 1.46);
  set.diamond = MaterialModel::constant_index("diamond", nd);
  set.silica = MaterialModel::constant_index("silica", ns);
  return set;
}

SceneParams parse_scene(const json& doc) {
  if (!doc.contains("scene")) throw ConfigError("scene", "section is required");
  Section s(doc.at("scene"), "scene",
            {"builder", "wire_radius_nm", "wire_length_nm", "nd_radius_nm",
             "nd_center_to_wire_edge_nm", "gap_nm", "kept_length_nm"});
  if (!s.has("builder")) throw ConfigError("scene.builder", "is required");
  SceneParams p;
  p.kind = scene_kind_from_string(s.string("builder", ""));
  p.wire_radius_nm = s.positive("wire_radius_nm", p.wire_radius_nm);
  p.wire_length_nm = s.positive("wire_length_nm", p.wire_length_nm);
  p.nd_radius_nm = s.positive("nd_radius_nm", p.nd_radius_nm);
  p.nd_center_to_wire_edge_nm = s.positive("nd_center_to_wire_edge_nm", p.nd_center_to_wire_edge_nm);
  p.gap_nm = s.positive("gap_nm", p.kind == SceneKind::TwoWire ? 2.0 * p.nd_radius_nm : p.gap_nm);
  p.kept_length_nm = s.number("kept_length_nm", p.kept_length_nm);
  if (p.kept_length_nm < 0.0) throw ConfigError("scene.kept_length_nm", "must be nonnegative");
  return p;
}

SolverSettings parse_solver(const json& j) {
  Section s(j, "solver", {"courant", "ramp_periods", "max_periods", "threshold", "window_periods"});
  SolverSettings out;
  out.courant = s.positive("courant", out.courant);
  if (out.courant > 0.5) throw ConfigError("solver.courant", "must not exceed 0.5 of the 3-D limit");
  out.ramp_periods = s.integer("ramp_periods", out.ramp_periods, 1, 10000);
  out.max_periods = s.integer("max_periods", out.max_periods, 1, 100000);
  if (out.max_periods <= out.ramp_periods)
    throw ConfigError("solver.max_periods", "must exceed solver.ramp_periods");
  out.convergence.threshold = s.positive("threshold", out.convergence.threshold);
  out.convergence.window_periods = s.integer("window_periods", out.convergence.window_periods, 1, 1000);
  return out;
}

BetaSettings parse_beta(const json& j) {
  Section s(j, "monitors.beta",
            {"enabled", "plane_offset_nm", "window_radius_nm", "annulus_outer_nm", "cladding_eps"});
  BetaSettings b;
  b.enabled = s.boolean("enabled", true);
  b.plane_offset_nm = s.positive("plane_offset_nm", b.plane_offset_nm);
  b.window_radius_nm = s.positive("window_radius_nm", b.window_radius_nm);
  b.annulus_outer_nm = s.positive("annulus_outer_nm", b.annulus_outer_nm);
  if (b.annulus_outer_nm <= b.window_radius_nm)
    throw ConfigError("monitors.beta.annulus_outer_nm", "must exceed window_radius_nm");
  b.cladding_eps = s.positive("cladding_eps", b.cladding_eps);
  return b;
}

SweepSection parse_sweep(const json& j) {
  Section s(j, "sweep", {"kind", "preset", "positions_nm", "lattice", "orientations"});
  SweepSection out;
  const std::string kind = s.string("kind", "map");
  if (kind == "map") out.kind = SweepKind::Map;
  else if (kind == "beta") out.kind = SweepKind::Beta;
  else throw ConfigError("sweep.kind", "must be \"map\" or \"beta\"");
  if (s.has("preset")) {
    try {
      out.preset = preset_from_string(s.string("preset", ""));
    } catch (const ConfigError&) {
      throw ConfigError("sweep.preset", "must be \"desk\" or \"production\"");
    }
  }
  if (s.has("positions_nm") && s.has("lattice"))
    throw ConfigError("sweep", "give either positions_nm or lattice, not both");
  if (s.has("positions_nm")) {
    const json& p = s.at("positions_nm");
    if (!p.is_array() || p.empty()) throw ConfigError("sweep.positions_nm", "must be a nonempty array");
    for (std::size_t i = 0; i < p.size(); ++i)
      out.positions.push_back(vector3(p[i], "sweep.positions_nm[" + std::to_string(i) + "]"));
  }
  if (s.has("lattice")) {
    Section l(s.at("lattice"), "sweep.lattice", {"half_span_nm", "points"});
    out.positions = square_lattice(l.positive("half_span_nm", 10.0), l.integer("points", 5, 1, 101));
  }
  if (s.has("orientations")) {
    const json& o = s.at("orientations");
    if (!o.is_array() || o.empty()) throw ConfigError("sweep.orientations", "must be a nonempty array");
    out.orientations.clear();
    for (const auto& v : o) {
      if (!v.is_string()) throw ConfigError("sweep.orientations", "entries must be \"x\", \"y\" or \"z\"");
      orientation_vector(v.get<std::string>());
      out.orientations.push_back(v.get<std::string>());
    }
  }
  if (out.kind == SweepKind::Beta) out.orientations = {"y"};
  if (out.positions.empty() && !out.preset)
    throw ConfigError("sweep.positions_nm", "positions_nm, lattice or preset is required");
  return out;
}

}  // namespace

std::string config_hash(const nlohmann::json& document) {
  nlohmann::json inputs = document;
  if (inputs.is_object()) inputs.erase("output");
  return content_hash(inputs.dump());
}

RunConfig parse_config(const nlohmann::json& doc) {
  Section top(doc, "", {"materials", "scene", "grid", "source", "monitors", "solver", "sweep", "output"});
  RunConfig c;
  c.document = doc;
  c.hash = config_hash(doc);
  c.materials = parse_materials(section_or_empty(doc, "materials"));
  c.scene = parse_scene(doc);

  Section grid(section_or_empty(doc, "grid"), "grid", {"spacing_nm"});
  c.spacing_nm = grid.positive("spacing_nm", c.spacing_nm);

  Section source(section_or_empty(doc, "source"), "source", {"position_nm", "orientation", "wavelength_nm"});
  if (source.has("position_nm")) c.position = vector3(source.at("position_nm"), "source.position_nm");
  c.orientation = source.string("orientation", c.orientation);
  try {
    orientation_vector(c.orientation);
  } catch (const ConfigError&) {
    throw ConfigError("source.orientation", "must be \"x\", \"y\" or \"z\"");
  }
  c.wavelength_nm = source.positive("wavelength_nm", c.wavelength_nm);
  if (c.wavelength_nm < 500.0 || c.wavelength_nm > 900.0) {
    if (!doc.contains("materials") || !doc["materials"].contains("silver_band_nm"))
      throw ConfigError("source.wavelength_nm", "lies outside the fitted silver band 500-900 nm");
    const auto& band = doc["materials"]["silver_band_nm"];
    if (c.wavelength_nm < band[0].get<double>() || c.wavelength_nm > band[1].get<double>())
      throw ConfigError("source.wavelength_nm", "lies outside materials.silver_band_nm");
  }

  Section monitors(section_or_empty(doc, "monitors"), "monitors", {"box_half_nm", "beta"});
  c.monitor_half_nm = monitors.positive("box_half_nm", c.monitor_half_nm);
  if (monitors.has("beta")) c.beta = parse_beta(monitors.at("beta"));

  c.solver = parse_solver(section_or_empty(doc, "solver"));
  if (doc.contains("sweep")) c.sweep = parse_sweep(doc.at("sweep"));

  Section output(section_or_empty(doc, "output"), "output", {"dir", "cache_dir"});
  c.output_dir = output.string("dir", "out");
  if (output.has("cache_dir")) c.cache_dir = output.string("cache_dir", "");

  if (c.scene.kind != SceneKind::Reference && !doc.contains("sweep")) {
    if (!(norm(c.position) < c.scene.nd_radius_nm))
      throw ConfigError("source.position_nm", "must lie strictly inside the nanodiamond");
  }
  // Builders check geometric consistency (overlaps, gap >= diameter).
  try {
    build_scene(c.scene, c.materials);
  } catch (const GeometryError& e) {
    throw ConfigError("scene", e.what());
  }
  return c;
}

nlohmann::json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("", path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                              ": invalid JSON");
  }
}

CellSpec cell_spec(const RunConfig& c) {
  CellSpec s;
  s.scene = c.scene;
  s.position = c.position;
  s.orientation = c.orientation;
  s.wavelength_nm = c.wavelength_nm;
  s.spacing_nm = c.spacing_nm;
  s.monitor_half_nm = c.monitor_half_nm;
  s.solver = c.solver;
  s.beta = c.beta;
  s.materials = c.materials;
  return s;
}

SweepSpec sweep_spec(const RunConfig& c, int workers) {
  if (!c.sweep) throw ConfigError("sweep", "section is required for sweeps");
  const SweepSection& sw = *c.sweep;
  SweepSpec s;
  if (sw.preset) {
    s = sw.kind == SweepKind::Beta ? beta_preset(*sw.preset) : map_preset(*sw.preset, c.scene);
    const json& scene = c.document.at("scene");
    auto given = [&](const char* key) { return scene.contains(key); };
    s.scene.kind = c.scene.kind;
    if (given("wire_radius_nm")) s.scene.wire_radius_nm = c.scene.wire_radius_nm;
    if (given("wire_length_nm")) s.scene.wire_length_nm = c.scene.wire_length_nm;
    if (given("nd_radius_nm")) s.scene.nd_radius_nm = c.scene.nd_radius_nm;
    if (given("nd_center_to_wire_edge_nm")) s.scene.nd_center_to_wire_edge_nm = c.scene.nd_center_to_wire_edge_nm;
    if (given("gap_nm")) s.scene.gap_nm = c.scene.gap_nm;
    if (given("kept_length_nm")) s.scene.kept_length_nm = c.scene.kept_length_nm;
  } else {
    s.scene = c.scene;
  }
  if (!sw.positions.empty()) s.positions = sw.positions;
  s.orientations = sw.orientations;
  if (!sw.preset || (c.document.contains("grid") && c.document["grid"].contains("spacing_nm")))
    s.spacing_nm = c.spacing_nm;
  if (!sw.preset || (c.document.contains("monitors") && c.document["monitors"].contains("box_half_nm")))
    s.monitor_half_nm = c.monitor_half_nm;
  s.wavelength_nm = c.wavelength_nm;
  s.solver = c.solver;
  if (sw.kind == SweepKind::Beta) {
    if (c.document.contains("monitors") && c.document["monitors"].contains("beta")) s.beta = c.beta;
    s.beta.enabled = true;
  } else {
    s.beta = c.beta;
  }
  s.materials = c.materials;
  s.output_dir = c.output_dir;
  s.cache_dir = c.cache_dir;
  s.workers = workers;
  validate(s);
  return s;
}

}  // namespace agwire
