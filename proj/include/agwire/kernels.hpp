// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "agwire/grid.hpp"

namespace agwire {

constexpr int next_axis(int a) { return (a + 1) % 3; }
constexpr int prev_axis(int a) { return (a + 2) % 3; }

/// Inclusive index ranges [lo, hi] per axis.
struct IndexRange {
  std::array<int, 3> lo{};
  std::array<int, 3> hi{};
};

/// Nodes whose E_comp is time stepped (tangential E on the outer walls stays zero).
IndexRange e_update_range(const Lattice& lat, int comp);
/// Nodes whose H_comp is time stepped.
IndexRange h_update_range(const Lattice& lat, int comp);

/// One-dimensional absorber coefficients along an axis, at integer (E-normal) positions
/// and at half-integer positions u + 1/2.
struct PmlProfile {
  std::vector<float> b_int, c_int, kinv_int;     ///< size n + 1
  std::vector<float> b_half, c_half, kinv_half;  ///< size n
};

/// Auxiliary convolution state of one absorber slab: the stretched-coordinate derivative
/// along `axis` for u in [u_lo, u_hi] of that axis. psi_e[0] belongs to E_prev(axis),
/// psi_e[1] to E_next(axis); likewise psi_h for H.
struct PmlSlab {
  int axis = 0;
  int u_lo = 0;
  int u_hi = 0;
  std::array<std::size_t, 3> stride{};  ///< psi strides; the slab spans all nodes across
  std::array<std::vector<float>, 2> psi_e;
  std::array<std::vector<float>, 2> psi_h;

  PmlSlab() = default;
  PmlSlab(const Lattice& lat, int axis, int u_lo, int u_hi);

  std::size_t psi_index(int i, int j, int k) const {
    std::array<int, 3> t{i, j, k};
    t[axis] -= u_lo;
    return t[0] * stride[0] + t[1] * stride[1] + t[2] * stride[2];
  }
};

/// Precomputed second-order recursion for one Drude-Lorentz pole:
/// P+ = a_now P + a_prev P- + a_field E.
struct PoleUpdate {
  double a_now = 0.0;
  double a_prev = 0.0;
  double a_field = 0.0;
};

/// Dispersive edges grouped by material.
struct DispersiveGroup {
  std::vector<PoleUpdate> poles;
  double inv_eps_inf = 1.0;
  std::array<std::vector<std::uint32_t>, 3> edges;  ///< flat lattice indices per component
  std::size_t slot_offset = 0;                      ///< first slot in the polarisation arrays
  std::size_t slot_count() const { return edges[0].size() + edges[1].size() + edges[2].size(); }
};

/// Everything a time step touches. Fields are single precision; the polarisation state is
/// double because a Drude term integrates the field over the whole run.
struct KernelContext {
  Lattice lat;
  float ch = 0.0f;                          ///< dt / h
  std::array<const float*, 3> ce{};         ///< dt / (eps h) per E edge
  std::array<float*, 3> e{};
  std::array<float*, 3> h{};
  const std::array<PmlProfile, 3>* profiles = nullptr;
  std::vector<PmlSlab>* slabs = nullptr;
  const std::vector<DispersiveGroup>* dispersive = nullptr;
  double* pol = nullptr;       ///< [pole][slot]
  double* pol_prev = nullptr;  ///< [pole][slot]
  std::size_t pol_stride = 0;  ///< slots per pole
  int threads = 1;
};

enum class KernelVariant { Serial, Parallel };

namespace kernels {

/// Straightforward reference implementation, one component and one node at a time.
namespace serial {
void advance_h(KernelContext& ctx);
void advance_e(KernelContext& ctx);
}  // namespace serial

/// OpenMP implementation with fused rows. Bit-identical to the serial reference.
namespace parallel {
void advance_h(KernelContext& ctx);
void advance_e(KernelContext& ctx);
}  // namespace parallel

}  // namespace kernels
}  // namespace agwire
