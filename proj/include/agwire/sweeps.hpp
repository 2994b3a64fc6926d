// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agwire/geometry.hpp"
#include "agwire/observables.hpp"
#include "agwire/solver.hpp"

namespace agwire {

enum class SceneKind { SingleWire, TwoWire, Reference };

std::string to_string(SceneKind kind);
/// Accepts "single-wire", "two-wire" and "reference"; throws ConfigError otherwise.
SceneKind scene_kind_from_string(const std::string& id);

/// Builder id plus parameters for the built-in scenes. Wires are cut `kept_length_nm` past
/// their inner tips and continue into the absorber (0 keeps the whole wire in the box).
struct SceneParams {
  SceneKind kind = SceneKind::SingleWire;
  double wire_radius_nm = 25.0;
  double wire_length_nm = 2000.0;
  double nd_radius_nm = 15.0;
  double nd_center_to_wire_edge_nm = 15.0;  ///< single wire
  double gap_nm = 30.0;                     ///< two wires
  double kept_length_nm = 300.0;

  friend bool operator==(const SceneParams&, const SceneParams&) = default;
};

Scene build_scene(const SceneParams& params, const MaterialSet& materials = default_materials());
/// The nanodiamond-on-glass scene that normalises every map built from `params`.
SceneParams reference_params(const SceneParams& params);

/// Guided power through planes on either side of a two-wire scene.
struct BetaSettings {
  bool enabled = false;
  double plane_offset_nm = 150.0;    ///< distance from each inner tip to its plane
  double window_radius_nm = 60.0;    ///< raw-flux estimator disc
  double annulus_outer_nm = 100.0;   ///< raw-flux estimator radiation annulus
  double cladding_eps = 1.0;         ///< homogeneous cladding assumed by the mode projection

  friend bool operator==(const BetaSettings&, const BetaSettings&) = default;
};

/// Unit vector for "x", "y" or "z"; ConfigError otherwise.
Vec3 orientation_vector(const std::string& name);

/// One solver run.
struct CellSpec {
  SceneParams scene;
  Vec3 position;
  std::string orientation = "y";
  double wavelength_nm = 700.0;
  double spacing_nm = 5.0;
  double monitor_half_nm = 5.0;
  SolverSettings solver;
  BetaSettings beta;
  MaterialSet materials = default_materials();
};

struct CellResult {
  Vec3 position;
  std::string orientation;
  PowerRecord power;
  RunReport report;
  std::optional<BetaFactors> beta;          ///< mode-overlap estimator
  std::optional<double> raw_guided_left;    ///< raw-flux estimator, at the tips
  std::optional<double> raw_guided_right;
  double gamma_ratio = 0.0;                 ///< filled in by the sweep
  bool failed = false;
  std::string error;
  std::string key;
  bool from_cache = false;
};

nlohmann::json to_json(const CellResult& r);
CellResult cell_result_from_json(const nlohmann::json& j);

/// Content address of a cell: scene, grid, source, monitors and numerics, plus the tool
/// version. Thread counts and kernel variant are excluded since they do not change results.
std::string cell_key(const CellSpec& spec);

/// Runs one cell. The monitor box is centred on the grid node nearest the dipole so that
/// every cell of a sweep, and its reference, share the same box extent.
CellResult simulate_cell(const CellSpec& spec, int threads = 0);

struct SweepSpec {
  SceneParams scene;
  std::vector<Vec3> positions;
  std::vector<std::string> orientations{"x", "y", "z"};
  double wavelength_nm = 700.0;
  double spacing_nm = 5.0;
  double monitor_half_nm = 5.0;
  SolverSettings solver;
  BetaSettings beta;
  MaterialSet materials = default_materials();
  std::filesystem::path output_dir;              ///< empty: nothing written
  std::optional<std::filesystem::path> cache_dir;
  int workers = 0;                                ///< 0 = available parallelism
};

/// Throws ConfigError unless every position lies strictly inside the nanodiamond and every
/// orientation is one of x, y, z.
void validate(const SweepSpec& spec);
/// Hash over everything that affects results (not paths or worker count).
std::string spec_hash(const SweepSpec& spec);
nlohmann::json to_json(const SweepSpec& spec);

/// n x n points spanning [-half_span, half_span] in x and y at z = 0.
std::vector<Vec3> square_lattice(double half_span_nm, int n);

struct EnhancementMap {
  std::string spec_hash;
  std::vector<CellResult> cells;                  ///< position-major, orientation-minor
  std::map<std::string, CellResult> references;   ///< one per orientation
  int failed_cells = 0;
  int unconverged_cells = 0;
};

using SweepProgress = std::function<void(const CellResult&, std::size_t done, std::size_t total)>;

/// Runs the reference and every (position, orientation) cell on a bounded worker pool.
/// Failed cells are kept and flagged; throws SweepError only when every cell failed.
EnhancementMap run_sweep(const SweepSpec& spec, const SweepProgress& progress = {});

/// CSV columns x_nm, y_nm, z_nm, orientation, gamma_ratio, beta_left, beta_right, converged.
void write_map_csv(std::ostream& out, const EnhancementMap& map);
nlohmann::json map_sidecar(const EnhancementMap& map, const SweepSpec& spec);
/// Writes map.csv and map.json into spec.output_dir.
void write_map(const EnhancementMap& map, const SweepSpec& spec);

struct BetaPoint {
  Vec3 position;
  double beta_left = 0.0;
  double beta_right = 0.0;
  double beta_total = 0.0;
  double raw_beta_left = 0.0;
  double raw_beta_right = 0.0;
  double gamma_ratio = 0.0;
  bool converged = false;
};

struct BetaCurve {
  std::string spec_hash;
  std::vector<BetaPoint> points;
};

/// y-dipole sweep along a line through the gap of a two-wire scene with beta extraction.
BetaCurve beta_curve(const SweepSpec& spec, const SweepProgress& progress = {});
/// CSV columns x_nm, y_nm, z_nm, beta_left, beta_right, beta_total, raw_beta_left,
/// raw_beta_right, gamma_ratio, converged.
void write_beta_csv(std::ostream& out, const BetaCurve& curve);

enum class Preset { Desk, Production };
Preset preset_from_string(const std::string& name);

/// Position lattice and grid for a map sweep of `scene`.
SweepSpec map_preset(Preset preset, SceneParams scene);
/// The diameter-25 nm, gap-34 nm two-wire line through the gap.
SweepSpec beta_preset(Preset preset);

}  // namespace agwire
