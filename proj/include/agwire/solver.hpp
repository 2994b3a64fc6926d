// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "agwire/geometry.hpp"
#include "agwire/grid.hpp"
#include "agwire/kernels.hpp"
#include "agwire/monitors.hpp"

namespace agwire {

// Solver units: lengths in nm, c = eps0 = mu0 = 1, so time is measured in nm / c and the
// angular frequency of a vacuum wavelength lambda is 2 pi / lambda.

/// Oscillating point current element. The dipole moment p relates to the current moment by
/// I l = -i w p; `amplitude` is the current moment in solver units.
struct DipoleSource {
  Vec3 position;
  Vec3 orientation{0.0, 1.0, 0.0};
  double wavelength_nm = 700.0;
  double amplitude = 1.0;
};

/// Throws DomainError for a non-unit orientation or nonpositive wavelength or amplitude < 0.
void validate(const DipoleSource& source);

struct PmlSettings {
  int order = 3;
  double sigma_scale = 1.0;   ///< multiplies the usual optimum 0.8 (m + 1) / h
  double kappa_max = 1.0;
  double alpha_scale = 0.2;   ///< alpha_max in units of the source angular frequency
};

struct ConvergenceSettings {
  int window_periods = 1;
  double threshold = 0.005;
};

struct SolverSettings {
  double courant = 0.5;  ///< fraction of the 3-D stability limit
  int ramp_periods = 20;
  int max_periods = 100;  ///< step cap, counted in optical periods including the ramp
  ConvergenceSettings convergence;
  PmlSettings pml;
  int threads = 0;  ///< 0 = all available
  KernelVariant kernel = KernelVariant::Parallel;
};

nlohmann::json to_json(const SolverSettings& s);

/// Mutable simulation state.
struct FieldState {
  Lattice lattice;
  std::array<std::vector<float>, 3> e;
  std::array<std::vector<float>, 3> h;
  std::vector<double> polarization;       ///< [pole][slot], auxiliary dispersion state
  std::vector<double> polarization_prev;
  std::vector<PmlSlab> pml;
  std::vector<PhasorMonitor> monitors;
  long step = 0;

  bool finite() const;
};

struct RunReport {
  long steps = 0;
  int steps_per_period = 0;
  std::vector<double> metric_history;  ///< relative monitored-power change per period
  bool converged = false;
  double wall_seconds = 0.0;

  double final_metric() const { return metric_history.empty() ? 1.0 : metric_history.back(); }
};

nlohmann::json to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);

/// One time-domain run of a single scene with a single dipole.
class Simulation {
 public:
  Simulation(const Scene& scene, const GridSpec& grid, const DipoleSource& source,
             const SolverSettings& settings = {});
  Simulation(RasterGrid raster, const DipoleSource& source, const SolverSettings& settings = {});

  /// Registers a monitor; must be called before the first step.
  const PhasorMonitor& add_monitor(const MonitorSpec& spec);
  const PhasorMonitor& monitor(const std::string& name) const;

  /// Advances the fields by one time step.
  void step();
  /// Ramps the source and runs until the monitored powers settle or the step cap is hit.
  RunReport run_cw();

  const FieldState& state() const { return state_; }
  FieldState& state() { return state_; }
  const RasterGrid& raster() const { return raster_; }
  const GridSpec& grid() const { return raster_.grid; }
  const DipoleSource& source() const { return source_; }
  const SolverSettings& settings() const { return settings_; }
  double dt() const { return dt_; }
  double omega() const { return omega_; }
  int steps_per_period() const { return steps_per_period_; }

  /// -1/2 Re sum J* . E dV over the source edges for the last complete period.
  double source_power() const;
  /// Power of a current element in an unbounded medium of index n in solver units.
  static double free_space_power(double amplitude, double wavelength_nm, double index = 1.0);

  /// Raw little-endian float32 dump of E then H (x, y, z each) plus a JSON sidecar.
  void write_checkpoint(const std::filesystem::path& stem) const;

 private:
  struct SourceEdge {
    int comp;
    std::size_t index;
    double weight;
    float coefficient;  ///< dt / eps * amplitude * weight / h^3
  };

  void setup();
  void build_profiles();
  void build_source();
  void accumulate(bool electric, double t);
  void close_period();
  KernelContext context();

  RasterGrid raster_;
  DipoleSource source_;
  SolverSettings settings_;
  FieldState state_;
  double dt_ = 0.0;
  double omega_ = 0.0;
  int steps_per_period_ = 0;
  int threads_ = 1;
  std::array<std::vector<float>, 3> ce_;
  std::array<PmlProfile, 3> profiles_;
  std::vector<DispersiveGroup> dispersive_;
  std::vector<SourceEdge> source_edges_;
  std::size_t source_monitor_ = 0;
  std::size_t pol_stride_ = 0;
};

}  // namespace agwire
