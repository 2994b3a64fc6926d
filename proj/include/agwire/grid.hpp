// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "agwire/geometry.hpp"

namespace agwire {

/// Uniform staggered grid. Node (i, j, k) sits at ((i + origin[0]) h, (j + origin[1]) h,
/// (k + origin[2]) h); integer node offsets keep the grid exactly mirror-symmetric about
/// any node plane. E_a lives at node + h/2 e_a, H_a at node + h/2 (e_b + e_c).
struct GridSpec {
  double spacing_nm = 5.0;
  std::array<int, 3> cells{};  ///< including absorber
  int absorber_cells = 10;
  std::array<int, 3> origin{};

  /// Coordinate in nm of a doubled index along `axis` (even = node, odd = half node).
  double coord2(int axis, long twice_index) const {
    return static_cast<double>(twice_index + 2L * origin[axis]) * spacing_nm * 0.5;
  }
  Vec3 node(int i, int j, int k) const { return {coord2(0, 2 * i), coord2(1, 2 * j), coord2(2, 2 * k)}; }
  /// Interior region (absorber excluded) in nm.
  Box3 interior() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Smallest grid whose interior covers `interior_nm`, aligned so that the origin is a node.
GridSpec make_grid(const Box3& interior_nm, double spacing_nm, int absorber_cells = 10);
/// Throws GeometryError unless spacing > 0 and every axis has >= 2 * absorber + 20 cells.
void validate(const GridSpec& grid);

/// Flat indexing over (nx+1)(ny+1)(nz+1) nodes, z fastest. Every field component uses it.
struct Lattice {
  int nx = 0, ny = 0, nz = 0;

  explicit Lattice(const GridSpec& g) : nx(g.cells[0]), ny(g.cells[1]), nz(g.cells[2]) {}
  Lattice() = default;

  std::size_t size() const { return std::size_t(nx + 1) * (ny + 1) * (nz + 1); }
  std::size_t index(int i, int j, int k) const {
    return (std::size_t(i) * (ny + 1) + j) * (nz + 1) + k;
  }
  std::ptrdiff_t stride(int axis) const {
    return axis == 0 ? std::ptrdiff_t(ny + 1) * (nz + 1) : (axis == 1 ? nz + 1 : 1);
  }
  int cells(int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
};

/// Position (nm) of E component `comp` at node (i, j, k).
Vec3 e_position(const GridSpec& g, int comp, int i, int j, int k);
/// Position (nm) of H component `comp` at node (i, j, k).
Vec3 h_position(const GridSpec& g, int comp, int i, int j, int k);

inline constexpr std::uint8_t kAveragedMaterial = 255;

/// Per-edge material assignment. `material[c][idx]` indexes `models`, or is
/// kAveragedMaterial for a dielectric-dielectric boundary edge whose permittivity is the
/// volume-weighted average stored in `eps[c][idx]`. `eps` holds the real permittivity of
/// every non-dispersive edge; it is unused for dispersive and perfect-conductor edges.
struct RasterGrid {
  GridSpec grid;
  std::vector<MaterialModel> models;
  std::array<std::vector<std::uint8_t>, 3> material;
  std::array<std::vector<float>, 3> eps;

  int material_id(const std::string& name) const;
  /// Number of E edges of component `comp` assigned to `name`.
  std::size_t count(int comp, const std::string& name) const;
};

/// Samples per axis used to average dielectric boundary edges.
inline constexpr int kAverageSamples = 4;

/// Assigns every E edge a material. Dielectric interfaces are volume averaged; anything
/// touching a metal is assigned by the edge midpoint. Parallel over x slabs; the result does
/// not depend on `threads`.
RasterGrid rasterize(const Scene& scene, const GridSpec& grid, double wavelength_nm,
                     int threads = 0);

}  // namespace agwire
