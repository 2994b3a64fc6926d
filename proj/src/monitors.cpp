// SPDX-License-Identifier: Apache-2.0
#include "agwire/monitors.hpp"

#include <cmath>
#include <unordered_map>

#include "agwire/errors.hpp"
#include "agwire/kernels.hpp"

namespace agwire {
namespace {

using Node = std::array<int, 3>;

class SampleTable {
 public:
  SampleTable(const Lattice& lat, std::vector<FieldSample>& out) : lat_(lat), out_(out) {}

  std::uint32_t get(int comp, Node n) {
    const std::size_t idx = lat_.index(n[0], n[1], n[2]);
    const std::size_t key = idx * 3 + std::size_t(comp);
    auto [it, inserted] = slots_.try_emplace(key, std::uint32_t(out_.size()));
    if (inserted) out_.push_back({std::uint8_t(comp), n, idx});
    return it->second;
  }

 private:
  Lattice lat_;
  std::vector<FieldSample>& out_;
  std::unordered_map<std::size_t, std::uint32_t> slots_;
};

int snap_down(const GridSpec& g, int axis, double x) {
  return int(std::floor(x / g.spacing_nm - g.origin[axis] + 1e-9));
}
int snap_up(const GridSpec& g, int axis, double x) {
  return int(std::ceil(x / g.spacing_nm - g.origin[axis] - 1e-9));
}

bool inside_h(int comp, const Node& m, const Node& lo, const Node& hi) {
  for (int a = 0; a < 3; ++a) {
    const int t = 2 * m[a] + (a == comp ? 0 : 1);
    if (t < 2 * lo[a] || t > 2 * hi[a]) return false;
  }
  return true;
}

void finish(PhasorMonitor& m) {
  m.e_phasor.assign(m.e_samples.size(), cplx{});
  m.h_phasor.assign(m.h_samples.size(), cplx{});
  m.e_acc.assign(m.e_samples.size(), cplx{});
  m.h_acc.assign(m.h_samples.size(), cplx{});
}

}  // namespace

double PhasorMonitor::flux() const {
  double sum = 0.0;
  for (const FluxPair& p : pairs)
    sum += double(p.sign) * (e_phasor[p.e] * std::conj(h_phasor[p.h])).real();
  return 0.5 * spacing_nm * spacing_nm * sum;
}

Vec3 PhasorMonitor::extent_nm() const {
  return {(hi[0] - lo[0]) * spacing_nm, (hi[1] - lo[1]) * spacing_nm, (hi[2] - lo[2]) * spacing_nm};
}

PhasorMonitor make_box_monitor(const BoxMonitorSpec& spec, const RasterGrid& raster) {
  const GridSpec& g = raster.grid;
  const Lattice lat(g);
  PhasorMonitor m;
  m.name = spec.name;
  m.kind = MonitorKind::Box;
  m.spacing_nm = g.spacing_nm;
  for (int a = 0; a < 3; ++a) {
    m.lo[a] = snap_down(g, a, spec.box_nm.min[a]);
    m.hi[a] = snap_up(g, a, spec.box_nm.max[a]);
    if (m.hi[a] <= m.lo[a])
      throw MonitorPlacementError("monitor '" + spec.name + "' is degenerate");
    if (m.lo[a] < g.absorber_cells + 1 || m.hi[a] > g.cells[a] - g.absorber_cells - 1)
      throw MonitorPlacementError("monitor '" + spec.name + "' reaches into the absorber");
  }
  SampleTable es(lat, m.e_samples), hs(lat, m.h_samples);
  for (int a = 0; a < 3; ++a) {
    const int b = next_axis(a), c = prev_axis(a);
    Node lo = m.lo, hi = m.hi;
    hi[a] -= 1;
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) {
          const Node n{i, j, k};
          const std::size_t idx = lat.index(i, j, k);
          const std::uint8_t id = raster.material[a][idx];
          if (id != kAveragedMaterial && raster.models[id].metallic())
            throw MonitorPlacementError("monitor '" + spec.name + "' intersects metal at " +
                                        raster.models[id].name + " edge");
          Node nb = n, nc = n;
          nb[b] -= 1;
          nc[c] -= 1;
          const struct {
            int comp;
            Node node;
            int sign;
          } neighbours[4] = {{c, n, -1}, {c, nb, 1}, {b, n, 1}, {b, nc, -1}};
          for (const auto& h : neighbours) {
            if (inside_h(h.comp, h.node, m.lo, m.hi)) continue;
            m.pairs.push_back({es.get(a, n), hs.get(h.comp, h.node), std::int8_t(h.sign)});
          }
        }
  }
  finish(m);
  return m;
}

PhasorMonitor make_plane_monitor(const PlaneMonitorSpec& spec, const RasterGrid& raster) {
  const GridSpec& g = raster.grid;
  const Lattice lat(g);
  const int a = spec.axis;
  if (a < 0 || a > 2 || (spec.direction != 1 && spec.direction != -1))
    throw MonitorPlacementError("monitor '" + spec.name + "' has an invalid axis or direction");
  PhasorMonitor m;
  m.name = spec.name;
  m.kind = MonitorKind::Plane;
  m.axis = a;
  m.direction = spec.direction;
  m.spacing_nm = g.spacing_nm;
  const int A = g.absorber_cells;
  const int u = int(std::lround(spec.position_nm / g.spacing_nm - g.origin[a]));
  if (u < A + 1 || u > g.cells[a] - A - 1)
    throw MonitorPlacementError("monitor '" + spec.name + "' lies in the absorber");
  for (int t = 0; t < 3; ++t) {
    if (t == a) {
      m.lo[t] = m.hi[t] = u;
      continue;
    }
    m.lo[t] = std::max(snap_down(g, t, spec.window_nm.min[t]), A);
    m.hi[t] = std::min(snap_up(g, t, spec.window_nm.max[t]), g.cells[t] - A);
    if (m.hi[t] <= m.lo[t])
      throw MonitorPlacementError("monitor '" + spec.name + "' has an empty window");
  }
  SampleTable es(lat, m.e_samples), hs(lat, m.h_samples);
  const int b = next_axis(a), c = prev_axis(a);
  const int s = spec.direction;
  for (int tangential : {b, c}) {
    const int other = tangential == b ? c : b;
    const int sign = tangential == b ? s : -s;
    Node lo = m.lo, hi = m.hi;
    hi[tangential] -= 1;
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) {
          const Node n{i, j, k};
          Node hn = n;
          if (s < 0) hn[a] -= 1;
          m.pairs.push_back({es.get(tangential, n), hs.get(other, hn), std::int8_t(sign)});
        }
  }
  finish(m);
  return m;
}

PhasorMonitor make_point_monitor(std::string name, std::vector<FieldSample> samples,
                                 double spacing_nm) {
  PhasorMonitor m;
  m.name = std::move(name);
  m.kind = MonitorKind::Points;
  m.spacing_nm = spacing_nm;
  m.e_samples = std::move(samples);
  finish(m);
  return m;
}

}  // namespace agwire
