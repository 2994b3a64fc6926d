// SPDX-License-Identifier: Apache-2.0
#include "agwire/grid.hpp"

#include <cmath>

#include <omp.h>

#include "agwire/errors.hpp"

namespace agwire {

Box3 GridSpec::interior() const {
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    b.min[a] = coord2(a, 2L * absorber_cells);
    b.max[a] = coord2(a, 2L * (cells[a] - absorber_cells));
  }
  return b;
}

GridSpec make_grid(const Box3& interior_nm, double spacing_nm, int absorber_cells) {
  if (!(spacing_nm > 0.0)) throw GeometryError("grid spacing must be positive");
  if (absorber_cells < 0) throw GeometryError("absorber thickness must be nonnegative");
  GridSpec g;
  g.spacing_nm = spacing_nm;
  g.absorber_cells = absorber_cells;
  for (int a = 0; a < 3; ++a) {
    // Small tolerance so that bounds which are exact multiples of h are not padded.
    const long lo = static_cast<long>(std::floor(interior_nm.min[a] / spacing_nm + 1e-9));
    const long hi = static_cast<long>(std::ceil(interior_nm.max[a] / spacing_nm - 1e-9));
    g.origin[a] = static_cast<int>(lo - absorber_cells);
    g.cells[a] = static_cast<int>(hi - lo) + 2 * absorber_cells;
  }
  validate(g);
  return g;
}

void validate(const GridSpec& grid) {
  if (!(grid.spacing_nm > 0.0)) throw GeometryError("grid spacing must be positive");
  for (int a = 0; a < 3; ++a) {
    if (grid.cells[a] < 2 * grid.absorber_cells + 20) {
      throw GeometryError("grid axis " + std::to_string(a) + " has " +
                          std::to_string(grid.cells[a]) + " cells; need >= 2*absorber + 20");
    }
  }
}

Vec3 e_position(const GridSpec& g, int comp, int i, int j, int k) {
  long t[3] = {2L * i, 2L * j, 2L * k};
  t[comp] += 1;
  return {g.coord2(0, t[0]), g.coord2(1, t[1]), g.coord2(2, t[2])};
}

Vec3 h_position(const GridSpec& g, int comp, int i, int j, int k) {
  long t[3] = {2L * i + 1, 2L * j + 1, 2L * k + 1};
  t[comp] -= 1;
  return {g.coord2(0, t[0]), g.coord2(1, t[1]), g.coord2(2, t[2])};
}

int RasterGrid::material_id(const std::string& name) const {
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::size_t RasterGrid::count(int comp, const std::string& name) const {
  const int id = material_id(name);
  if (id < 0) return 0;
  std::size_t n = 0;
  for (auto m : material[comp]) n += (m == id);
  return n;
}

namespace {

// Material lookup by id with bounding-box rejection; same precedence as Scene::material_at.
struct Resolver {
  struct Entry {
    ShapeGeometry geometry;
    Box3 box;
    int id;
  };
  std::vector<Entry> shapes;  // reverse order: first match wins
  bool has_substrate = false;
  double substrate_top = 0.0;
  int substrate_id = 0;
  int background_id = 0;

  int at(Vec3 p) const {
    for (const auto& e : shapes) {
      if (e.box.contains(p) && contains(e.geometry, p)) return e.id;
    }
    if (has_substrate && p.z <= substrate_top) return substrate_id;
    return background_id;
  }
};

}  // namespace

RasterGrid rasterize(const Scene& scene, const GridSpec& grid, double wavelength_nm,
                     int threads) {
  validate(grid);
  RasterGrid out;
  out.grid = grid;
  std::map<std::string, int> ids;
  for (const auto& [name, model] : scene.materials) {
    ids[name] = static_cast<int>(out.models.size());
    out.models.push_back(model);
  }
  if (out.models.size() >= kAveragedMaterial) throw GeometryError("too many materials");
  std::vector<double> eps_of(out.models.size(), 0.0);
  std::vector<bool> metal(out.models.size(), false);
  for (std::size_t m = 0; m < out.models.size(); ++m) {
    metal[m] = out.models[m].metallic();
    if (!metal[m]) eps_of[m] = permittivity(out.models[m], wavelength_nm).real();
  }

  Resolver resolve;
  for (auto it = scene.shapes.rbegin(); it != scene.shapes.rend(); ++it) {
    resolve.shapes.push_back({it->geometry, bounds(it->geometry), ids.at(it->material)});
  }
  if (scene.substrate) {
    resolve.has_substrate = true;
    resolve.substrate_top = std::get<HalfSpace>(scene.substrate->geometry).z_top;
    resolve.substrate_id = ids.at(scene.substrate->material);
  }
  resolve.background_id = ids.at(scene.background);

  const Lattice lat(grid);
  for (int c = 0; c < 3; ++c) {
    out.material[c].assign(lat.size(), static_cast<std::uint8_t>(ids.at(scene.background)));
    out.eps[c].assign(lat.size(), static_cast<float>(eps_of[ids.at(scene.background)]));
  }

  // Sub-sample offsets in units of h / (2 S), symmetric about the edge midpoint so that
  // mirrored edges see mirrored samples.
  constexpr int S = kAverageSamples;
  const double unit = grid.spacing_nm / (2.0 * S);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();

  for (int c = 0; c < 3; ++c) {
    auto& mat = out.material[c];
    auto& eps = out.eps[c];
#pragma omp parallel for schedule(static) num_threads(nthreads)
    for (int i = 0; i <= lat.nx; ++i) {
      std::vector<int> counts(out.models.size());
      for (int j = 0; j <= lat.ny; ++j) {
        for (int k = 0; k <= lat.nz; ++k) {
          long t[3] = {2L * i, 2L * j, 2L * k};
          t[c] += 1;
          // Absolute doubled indices, scaled to sub-sample units.
          long base[3];
          for (int a = 0; a < 3; ++a) base[a] = (t[a] + 2L * grid.origin[a]) * S;
          auto sample = [&](long dx, long dy, long dz) {
            const Vec3 p{static_cast<double>(base[0] + dx) * unit,
                         static_cast<double>(base[1] + dy) * unit,
                         static_cast<double>(base[2] + dz) * unit};
            return resolve.at(p);
          };
          const int centre = sample(0, 0, 0);
          const std::size_t idx = lat.index(i, j, k);
          mat[idx] = static_cast<std::uint8_t>(centre);
          eps[idx] = static_cast<float>(eps_of[centre]);
          if (metal[centre]) continue;
          bool uniform = true;
          for (int corner = 0; corner < 8 && uniform; ++corner) {
            const long dx = (corner & 1) ? S : -S;
            const long dy = (corner & 2) ? S : -S;
            const long dz = (corner & 4) ? S : -S;
            uniform = sample(dx, dy, dz) == centre;
          }
          if (uniform) continue;
          std::fill(counts.begin(), counts.end(), 0);
          for (int a = 0; a < S; ++a) {
            for (int b = 0; b < S; ++b) {
              for (int d = 0; d < S; ++d) {
                ++counts[sample(2 * a + 1 - S, 2 * b + 1 - S, 2 * d + 1 - S)];
              }
            }
          }
          bool touches_metal = false;
          int distinct = 0;
          for (std::size_t m = 0; m < counts.size(); ++m) {
            if (counts[m] == 0) continue;
            ++distinct;
            touches_metal = touches_metal || metal[m];
          }
          if (touches_metal || distinct < 2) continue;
          double sum = 0.0;
          for (std::size_t m = 0; m < counts.size(); ++m) sum += counts[m] * eps_of[m];
          mat[idx] = kAveragedMaterial;
          eps[idx] = static_cast<float>(sum / (S * S * S));
        }
      }
    }
  }
  return out;
}

}  // namespace agwire
