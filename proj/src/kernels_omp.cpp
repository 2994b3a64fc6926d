// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "agwire/kernels.hpp"

namespace agwire::kernels::parallel {
namespace {

// Parallel slabs along x; each (i, j) row of all three components is updated together so a
// row of the source fields is reused from cache. The per-element expressions match the
// serial reference exactly.
void main_h(KernelContext& c) {
  const Lattice L = c.lat;
  const std::ptrdiff_t sx = L.stride(0), sy = L.stride(1);
  float *hx = c.h[0], *hy = c.h[1], *hz = c.h[2];
  const float *ex = c.e[0], *ey = c.e[1], *ez = c.e[2];
  const float ch = c.ch;
#pragma omp parallel for schedule(static) num_threads(c.threads)
  for (int i = 0; i <= L.nx; ++i) {
    for (int j = 0; j <= L.ny; ++j) {
      const std::size_t base = L.index(i, j, 0);
      if (j < L.ny) {
#pragma omp simd
        for (int k = 0; k < L.nz; ++k) {
          const std::size_t n = base + k;
          hx[n] -= ch * ((ez[n + sy] - ez[n]) - (ey[n + 1] - ey[n]));
        }
      }
      if (i < L.nx) {
#pragma omp simd
        for (int k = 0; k < L.nz; ++k) {
          const std::size_t n = base + k;
          hy[n] -= ch * ((ex[n + 1] - ex[n]) - (ez[n + sx] - ez[n]));
        }
        if (j < L.ny) {
#pragma omp simd
          for (int k = 0; k <= L.nz; ++k) {
            const std::size_t n = base + k;
            hz[n] -= ch * ((ey[n + sx] - ey[n]) - (ex[n + sy] - ex[n]));
          }
        }
      }
    }
  }
}

void main_e(KernelContext& c) {
  const Lattice L = c.lat;
  const std::ptrdiff_t sx = L.stride(0), sy = L.stride(1);
  float *ex = c.e[0], *ey = c.e[1], *ez = c.e[2];
  const float *hx = c.h[0], *hy = c.h[1], *hz = c.h[2];
  const float *cx = c.ce[0], *cy = c.ce[1], *cz = c.ce[2];
#pragma omp parallel for schedule(static) num_threads(c.threads)
  for (int i = 0; i < L.nx; ++i) {
    for (int j = 0; j < L.ny; ++j) {
      const std::size_t base = L.index(i, j, 0);
      if (j >= 1) {
#pragma omp simd
        for (int k = 1; k < L.nz; ++k) {
          const std::size_t n = base + k;
          ex[n] += cx[n] * ((hz[n] - hz[n - sy]) - (hy[n] - hy[n - 1]));
        }
      }
      if (i >= 1) {
#pragma omp simd
        for (int k = 1; k < L.nz; ++k) {
          const std::size_t n = base + k;
          ey[n] += cy[n] * ((hx[n] - hx[n - 1]) - (hz[n] - hz[n - sx]));
        }
        if (j >= 1) {
#pragma omp simd
          for (int k = 0; k < L.nz; ++k) {
            const std::size_t n = base + k;
            ez[n] += cz[n] * ((hy[n] - hy[n - sx]) - (hx[n] - hx[n - sy]));
          }
        }
      }
    }
  }
}

IndexRange clip(IndexRange r, int axis, int lo, int hi) {
  r.lo[axis] = std::max(r.lo[axis], lo);
  r.hi[axis] = std::min(r.hi[axis], hi);
  return r;
}

// One k row of an absorber correction. Coefficients are indexed by k when `step` is 1 and
// are constant along the row when it is 0.
template <bool IsE>
inline void row(float* __restrict out, const float* __restrict in, float* __restrict psi,
                const float* __restrict ce, float ch, float sign, std::ptrdiff_t sd, int k0,
                int k1, const float* __restrict b, const float* __restrict cf,
                const float* __restrict kinv, int step) {
#pragma omp simd
  for (int k = k0; k <= k1; ++k) {
    const int u = k * step;
    if constexpr (IsE) {
      const float diff = in[k] - in[k - sd];
      psi[k] = b[u] * psi[k] + cf[u] * diff;
      out[k] += sign * (ce[k] * (kinv[u] * diff + psi[k]));
    } else {
      const float diff = in[k + sd] - in[k];
      psi[k] = b[u] * psi[k] + cf[u] * diff;
      out[k] -= sign * (ch * (kinv[u] * diff + psi[k]));
    }
  }
}

template <bool IsE>
void pml(KernelContext& c, PmlSlab& slab) {
  const int d = slab.axis;
  const PmlProfile& p = (*c.profiles)[d];
  const Lattice L = c.lat;
  const std::ptrdiff_t sd = L.stride(d);
  const float* b = IsE ? p.b_int.data() : p.b_half.data();
  const float* cf = IsE ? p.c_int.data() : p.c_half.data();
  const float* kinv = IsE ? p.kinv_int.data() : p.kinv_half.data();
  for (int slot = 0; slot < 2; ++slot) {
    const int target = slot == 0 ? prev_axis(d) : next_axis(d);
    const int source = slot == 0 ? next_axis(d) : prev_axis(d);
    const float sign = slot == 0 ? 1.0f : -1.0f;
    const IndexRange r = clip(IsE ? e_update_range(L, target) : h_update_range(L, target), d,
                              slab.u_lo, slab.u_hi);
    float* dst = IsE ? c.e[target] : c.h[target];
    const float* src = IsE ? c.h[source] : c.e[source];
    const float* ce = IsE ? c.ce[target] : nullptr;
    const float ch = c.ch;
    float* psi = (IsE ? slab.psi_e : slab.psi_h)[slot].data();
#pragma omp parallel for collapse(2) schedule(static) num_threads(c.threads)
    for (int i = r.lo[0]; i <= r.hi[0]; ++i)
      for (int j = r.lo[1]; j <= r.hi[1]; ++j) {
        const std::size_t n0 = L.index(i, j, 0);
        const std::size_t q0 = slab.psi_index(i, j, r.lo[2]) - std::size_t(r.lo[2]);
        float* __restrict out = dst + n0;
        const float* __restrict in = src + n0;
        float* __restrict ps = psi + q0;
        if (d == 2) {
          row<IsE>(out, in, ps, IsE ? ce + n0 : nullptr, ch, sign, sd, r.lo[2], r.hi[2], b, cf,
                   kinv, 1);
        } else {
          const int u = d == 0 ? i : j;
          row<IsE>(out, in, ps, IsE ? ce + n0 : nullptr, ch, sign, sd, r.lo[2], r.hi[2], b + u,
                   cf + u, kinv + u, 0);
        }
      }
  }
}

void dispersive(KernelContext& c) {
  for (const DispersiveGroup& g : *c.dispersive) {
    std::size_t offset = g.slot_offset;
    const std::size_t np = g.poles.size();
    for (int a = 0; a < 3; ++a) {
      float* e = c.e[a];
      const std::uint32_t* edges = g.edges[a].data();
      const std::ptrdiff_t count = std::ptrdiff_t(g.edges[a].size());
#pragma omp parallel for schedule(static) num_threads(c.threads)
      for (std::ptrdiff_t m = 0; m < count; ++m) {
        const std::size_t slot = offset + std::size_t(m);
        const std::uint32_t n = edges[m];
        double change = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
          double& now = c.pol[p * c.pol_stride + slot];
          double& prev = c.pol_prev[p * c.pol_stride + slot];
          const PoleUpdate& u = g.poles[p];
          const double next = u.a_now * now + u.a_prev * prev + u.a_field * double(e[n]);
          change += next - now;
          prev = now;
          now = next;
        }
        e[n] -= float(change * g.inv_eps_inf);
      }
      offset += std::size_t(count);
    }
  }
}

}  // namespace

void advance_h(KernelContext& c) {
  main_h(c);
  for (PmlSlab& s : *c.slabs) pml<false>(c, s);
}

void advance_e(KernelContext& c) {
  if (c.dispersive) dispersive(c);
  main_e(c);
  for (PmlSlab& s : *c.slabs) pml<true>(c, s);
}

}  // namespace agwire::kernels::parallel
