// SPDX-License-Identifier: Apache-2.0
#include "agwire/kernels.hpp"

namespace agwire {

IndexRange e_update_range(const Lattice& lat, int comp) {
  IndexRange r;
  for (int a = 0; a < 3; ++a) {
    if (a == comp) {
      r.lo[a] = 0;
      r.hi[a] = lat.cells(a) - 1;
    } else {
      r.lo[a] = 1;
      r.hi[a] = lat.cells(a) - 1;
    }
  }
  return r;
}

IndexRange h_update_range(const Lattice& lat, int comp) {
  IndexRange r;
  for (int a = 0; a < 3; ++a) {
    r.lo[a] = 0;
    r.hi[a] = a == comp ? lat.cells(a) : lat.cells(a) - 1;
  }
  return r;
}

PmlSlab::PmlSlab(const Lattice& lat, int axis_, int lo, int hi) : axis(axis_), u_lo(lo), u_hi(hi) {
  std::array<std::size_t, 3> dims{std::size_t(lat.nx) + 1, std::size_t(lat.ny) + 1,
                                  std::size_t(lat.nz) + 1};
  dims[axis] = std::size_t(hi - lo + 1);
  stride = {dims[1] * dims[2], dims[2], 1};
  const std::size_t n = dims[0] * dims[1] * dims[2];
  for (auto* v : {&psi_e[0], &psi_e[1], &psi_h[0], &psi_h[1]}) v->assign(n, 0.0f);
}

}  // namespace agwire
