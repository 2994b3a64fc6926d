// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "agwire/grid.hpp"
#include "agwire/vec3.hpp"

namespace agwire {

using cplx = std::complex<double>;

/// Closed box around a source, in nm. Snapped outward to grid nodes.
struct BoxMonitorSpec {
  std::string name;
  Box3 box_nm;
};

/// Plane normal to `axis` at `position_nm` (snapped to the nearest node plane) with flux
/// counted along `direction` (+1 or -1). `window_nm` limits the two transverse axes and is
/// clipped to the absorber-free interior; its extent along `axis` is ignored.
struct PlaneMonitorSpec {
  std::string name;
  int axis = 1;
  double position_nm = 0.0;
  int direction = 1;
  Box3 window_nm{{-1e9, -1e9, -1e9}, {1e9, 1e9, 1e9}};
};

using MonitorSpec = std::variant<BoxMonitorSpec, PlaneMonitorSpec>;

struct FieldSample {
  std::uint8_t comp = 0;
  std::array<int, 3> node{};
  std::size_t index = 0;
};

/// E sample `e` and H sample `h` adjacent across the monitor surface. The discrete
/// outward flux is 1/2 h^2 Re sum sign E H*.
struct FluxPair {
  std::uint32_t e = 0;
  std::uint32_t h = 0;
  std::int8_t sign = 0;
};

enum class MonitorKind { Box, Plane, Points };

/// Single-frequency phasors of the field components on a surface. Phasors of the last
/// complete optical period are in e_phasor / h_phasor (field = Re(phasor e^{-i w t})).
struct PhasorMonitor {
  std::string name;
  MonitorKind kind = MonitorKind::Box;
  int axis = -1;
  int direction = 0;
  std::array<int, 3> lo{};  ///< node box; lo[axis] == hi[axis] for planes
  std::array<int, 3> hi{};
  double spacing_nm = 0.0;
  std::vector<FieldSample> e_samples, h_samples;
  std::vector<FluxPair> pairs;
  std::vector<cplx> e_phasor, h_phasor;
  std::vector<cplx> e_acc, h_acc;

  /// Time-averaged power through the surface in the outward (box) or `direction` (plane)
  /// sense, in solver units.
  double flux() const;
  /// Extent of the snapped box in nm.
  Vec3 extent_nm() const;
};

/// Builds the pair list of a closed box. Throws MonitorPlacementError if the box reaches
/// into the absorber or any enclosed E edge is metallic.
PhasorMonitor make_box_monitor(const BoxMonitorSpec& spec, const RasterGrid& raster);
/// Builds the pair list of a plane. Throws MonitorPlacementError if the plane lies in the
/// absorber or the window is empty.
PhasorMonitor make_plane_monitor(const PlaneMonitorSpec& spec, const RasterGrid& raster);
/// E samples only, no pairs; used for the source-work diagnostic.
PhasorMonitor make_point_monitor(std::string name, std::vector<FieldSample> samples,
                                 double spacing_nm);

}  // namespace agwire
