// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agwire/cache.hpp"
#include "agwire/solver.hpp"

namespace agwire {

/// One row of the oracle table.
struct OracleCheck {
  std::string name;
  double measured = 0.0;
  double reference = 0.0;
  double error = 0.0;      ///< relative unless noted in `note`
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

nlohmann::json to_json(const OracleCheck& c);
OracleCheck make_check(std::string name, double measured, double reference, double tolerance,
                       std::string note = {});

/// A y-dipole at the origin of an empty vacuum domain, with three monitors: a box two cells
/// around the source, a box two cells inside the absorber and a box beside the source that
/// encloses nothing.
struct VacuumDipoleResult {
  double spacing_nm = 0.0;
  double inner_power = 0.0;
  double outer_power = 0.0;
  double empty_box_power = 0.0;
  double source_power = 0.0;
  double larmor_power = 0.0;
  Vec3 inner_extent_nm;
  RunReport report;
};

VacuumDipoleResult vacuum_dipole(double spacing_nm, const SolverSettings& settings = {},
                                 const ResultCache& cache = {});

/// Classical decay rate of a dipole a distance d above a perfect mirror, relative to free
/// space (image-dipole closed form).
double mirror_dipole_closed_form(double distance_nm, double wavelength_nm, bool perpendicular);

struct MirrorResult {
  double distance_nm = 0.0;
  bool perpendicular = false;
  double power = 0.0;
  double ratio = 0.0;        ///< power over the vacuum inner-box power at the same spacing
  double closed_form = 0.0;
  RunReport report;
};

/// Dipole above a perfect-conductor half-space filling z <= 0. `vacuum` supplies the
/// free-space power measured with the same box.
MirrorResult mirror_dipole(double distance_nm, bool perpendicular, const VacuumDipoleResult& vacuum,
                           const SolverSettings& settings = {}, const ResultCache& cache = {});

struct PropagationResult {
  double wire_radius_nm = 0.0;
  double spacing_nm = 0.0;
  std::vector<std::pair<double, double>> samples;  ///< (distance from tip, guided power)
  double measured_attenuation = 0.0;               ///< 1/nm, power
  double expected_attenuation = 0.0;               ///< 2 Im kz
  RunReport report;
};

struct PropagationSetup {
  double wire_radius_nm = 25.0;
  double spacing_nm = 5.0;
  double transverse_half_nm = 300.0;
  double first_plane_nm = 300.0;
  double last_plane_nm = 1500.0;
  double plane_step_nm = 100.0;
};

/// A silver wire in vacuum running from a tip into the absorber, excited by an axial dipole
/// just beyond the tip. The forward modal amplitude is projected at planes along the wire
/// and an exponential is fitted to the guided power.
PropagationResult wire_propagation(const PropagationSetup& setup, const SolverSettings& settings = {},
                                   const ResultCache& cache = {});

/// Effective index of a thick wire against the flat-interface plasmon index.
OracleCheck flat_interface_check(double radius_nm = 5000.0, double wavelength_nm = 700.0);

struct ValidationOptions {
  double spacing_nm = 2.5;
  std::vector<double> mirror_distances_nm{40.0, 100.0, 200.0};
  bool mirror = true;
  bool propagation = true;
  PropagationSetup propagation_setup;
  SolverSettings solver;
  ResultCache cache;
};

/// Larmor and nested-box checks at the chosen spacing (5% tolerance at 2.5 nm or finer,
/// 12% above), the empty box, the mirror dipole, the flat-interface limit and the wire
/// attenuation.
std::vector<OracleCheck> run_validation(const ValidationOptions& options,
                                        const std::function<void(const std::string&)>& log = {});

}  // namespace agwire
