// SPDX-License-Identifier: Apache-2.0
// Reference update loops. Every component is handled separately with plain index
// arithmetic so that the parallel kernels have something simple to be compared against.
#include <algorithm>

#include "agwire/kernels.hpp"

namespace agwire::kernels::serial {
namespace {

void main_h(KernelContext& c, int a) {
  const int b = next_axis(a), cc = prev_axis(a);
  const std::ptrdiff_t sb = c.lat.stride(b), sc = c.lat.stride(cc);
  const float* ec = c.e[cc];
  const float* eb = c.e[b];
  float* h = c.h[a];
  const IndexRange r = h_update_range(c.lat, a);
  for (int i = r.lo[0]; i <= r.hi[0]; ++i)
    for (int j = r.lo[1]; j <= r.hi[1]; ++j)
      for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
        const std::size_t n = c.lat.index(i, j, k);
        h[n] -= c.ch * ((ec[n + sb] - ec[n]) - (eb[n + sc] - eb[n]));
      }
}

void main_e(KernelContext& c, int a) {
  const int b = next_axis(a), cc = prev_axis(a);
  const std::ptrdiff_t sb = c.lat.stride(b), sc = c.lat.stride(cc);
  const float* hc = c.h[cc];
  const float* hb = c.h[b];
  const float* ce = c.ce[a];
  float* e = c.e[a];
  const IndexRange r = e_update_range(c.lat, a);
  for (int i = r.lo[0]; i <= r.hi[0]; ++i)
    for (int j = r.lo[1]; j <= r.hi[1]; ++j)
      for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
        const std::size_t n = c.lat.index(i, j, k);
        e[n] += ce[n] * ((hc[n] - hc[n - sb]) - (hb[n] - hb[n - sc]));
      }
}

IndexRange clip(IndexRange r, int axis, int lo, int hi) {
  r.lo[axis] = std::max(r.lo[axis], lo);
  r.hi[axis] = std::min(r.hi[axis], hi);
  return r;
}

void pml_h(KernelContext& c, PmlSlab& slab) {
  const int d = slab.axis;
  const PmlProfile& p = (*c.profiles)[d];
  const std::ptrdiff_t sd = c.lat.stride(d);
  for (int slot = 0; slot < 2; ++slot) {
    const int target = slot == 0 ? prev_axis(d) : next_axis(d);
    const int source = slot == 0 ? next_axis(d) : prev_axis(d);
    const float sign = slot == 0 ? 1.0f : -1.0f;
    const IndexRange r = clip(h_update_range(c.lat, target), d, slab.u_lo, slab.u_hi);
    float* h = c.h[target];
    const float* e = c.e[source];
    float* psi = slab.psi_h[slot].data();
    for (int i = r.lo[0]; i <= r.hi[0]; ++i)
      for (int j = r.lo[1]; j <= r.hi[1]; ++j)
        for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
          const int u = d == 0 ? i : (d == 1 ? j : k);
          const std::size_t n = c.lat.index(i, j, k);
          const std::size_t q = slab.psi_index(i, j, k);
          const float diff = e[n + sd] - e[n];
          psi[q] = p.b_half[u] * psi[q] + p.c_half[u] * diff;
          h[n] -= sign * (c.ch * (p.kinv_half[u] * diff + psi[q]));
        }
  }
}

void pml_e(KernelContext& c, PmlSlab& slab) {
  const int d = slab.axis;
  const PmlProfile& p = (*c.profiles)[d];
  const std::ptrdiff_t sd = c.lat.stride(d);
  for (int slot = 0; slot < 2; ++slot) {
    const int target = slot == 0 ? prev_axis(d) : next_axis(d);
    const int source = slot == 0 ? next_axis(d) : prev_axis(d);
    const float sign = slot == 0 ? 1.0f : -1.0f;
    const IndexRange r = clip(e_update_range(c.lat, target), d, slab.u_lo, slab.u_hi);
    float* e = c.e[target];
    const float* ce = c.ce[target];
    const float* h = c.h[source];
    float* psi = slab.psi_e[slot].data();
    for (int i = r.lo[0]; i <= r.hi[0]; ++i)
      for (int j = r.lo[1]; j <= r.hi[1]; ++j)
        for (int k = r.lo[2]; k <= r.hi[2]; ++k) {
          const int u = d == 0 ? i : (d == 1 ? j : k);
          const std::size_t n = c.lat.index(i, j, k);
          const std::size_t q = slab.psi_index(i, j, k);
          const float diff = h[n] - h[n - sd];
          psi[q] = p.b_int[u] * psi[q] + p.c_int[u] * diff;
          e[n] += sign * (ce[n] * (p.kinv_int[u] * diff + psi[q]));
        }
  }
}

void dispersive(KernelContext& c) {
  for (const DispersiveGroup& g : *c.dispersive) {
    std::size_t slot = g.slot_offset;
    for (int a = 0; a < 3; ++a) {
      float* e = c.e[a];
      for (std::uint32_t n : g.edges[a]) {
        double change = 0.0;
        for (std::size_t p = 0; p < g.poles.size(); ++p) {
          double& now = c.pol[p * c.pol_stride + slot];
          double& prev = c.pol_prev[p * c.pol_stride + slot];
          const PoleUpdate& u = g.poles[p];
          const double next = u.a_now * now + u.a_prev * prev + u.a_field * double(e[n]);
          change += next - now;
          prev = now;
          now = next;
        }
        e[n] -= float(change * g.inv_eps_inf);
        ++slot;
      }
    }
  }
}

}  // namespace

void advance_h(KernelContext& c) {
  for (int a = 0; a < 3; ++a) main_h(c, a);
  for (PmlSlab& s : *c.slabs) pml_h(c, s);
}

void advance_e(KernelContext& c) {
  if (c.dispersive) dispersive(c);
  for (int a = 0; a < 3; ++a) main_e(c, a);
  for (PmlSlab& s : *c.slabs) pml_e(c, s);
}

}  // namespace agwire::kernels::serial
