// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agwire/sweeps.hpp"

namespace agwire {

enum class SweepKind { Map, Beta };

struct SweepSection {
  SweepKind kind = SweepKind::Map;
  std::optional<Preset> preset;
  std::vector<Vec3> positions;
  std::vector<std::string> orientations{"x", "y", "z"};
};

/// A validated run configuration. Every section is optional except `scene`.
///
///   materials  silver_band_nm [lo, hi], silver_poles, diamond_index, silica_index
///   scene      builder, wire_radius_nm, wire_length_nm, nd_radius_nm,
///              nd_center_to_wire_edge_nm, gap_nm, kept_length_nm
///   grid       spacing_nm
///   source     position_nm [x, y, z], orientation (x | y | z), wavelength_nm
///   monitors   box_half_nm, beta {enabled, plane_offset_nm, window_radius_nm,
///              annulus_outer_nm, cladding_eps}
///   solver     courant, ramp_periods, max_periods, threshold, window_periods
///   sweep      kind (map | beta), preset (desk | production), positions_nm,
///              lattice {half_span_nm, points}, orientations
///   output     dir, cache_dir
struct RunConfig {
  nlohmann::json document;
  std::string hash;
  MaterialSet materials;
  SceneParams scene;
  double spacing_nm = 5.0;
  Vec3 position;
  std::string orientation = "y";
  double wavelength_nm = 700.0;
  double monitor_half_nm = 5.0;
  BetaSettings beta;
  SolverSettings solver;
  std::optional<SweepSection> sweep;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
};

/// Validates `document` against the schema above. Unknown keys, wrong types and values out
/// of range raise ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& document);

/// Reads and parses a JSON file; syntax errors raise ConfigError with line and column.
nlohmann::json read_config_document(const std::filesystem::path& path);

/// Hash of the canonical dump of a config document, leaving out the output section.
std::string config_hash(const nlohmann::json& document);

CellSpec cell_spec(const RunConfig& config);
/// Sweep spec from the sweep section (and preset, when given). Throws ConfigError if the
/// config has no sweep section.
SweepSpec sweep_spec(const RunConfig& config, int workers = 0);

}  // namespace agwire
