#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "agwire/solver.hpp"

using namespace agwire;

namespace {

Scene mixed_scene() {
  Scene s;
  s.materials["vacuum"] = vacuum();
  s.materials["silver"] = silver();
  s.materials["diamond"] = diamond();
  s.shapes.push_back({Sphere{{0, 20, 0}, 12}, "silver"});
  s.shapes.push_back({Sphere{{0, -18, 3}, 10}, "diamond"});
  s.bounding_box = {{-120, -130, -120}, {120, 130, 120}};
  return s;
}

Simulation make(KernelVariant v, int threads, double amplitude = 1.0) {
  SolverSettings st;
  st.kernel = v;
  st.threads = threads;
  DipoleSource src;
  src.position = {1.3, 0.4, -0.8};
  src.orientation = {0.0, 0.6, 0.8};
  src.amplitude = amplitude;
  const Scene s = mixed_scene();
  return Simulation(s, make_grid(s.bounding_box, 5.0), src, st);
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  Simulation ref = make(KernelVariant::Serial, 1);
  Simulation par = make(KernelVariant::Parallel, 4);
  for (int n = 0; n < 150; ++n) {
    ref.step();
    par.step();
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(same_bits(ref.state().e[c], par.state().e[c]));
    CHECK(same_bits(ref.state().h[c], par.state().h[c]));
  }
  CHECK(ref.state().polarization == par.state().polarization);
  CHECK(ref.state().finite());
  const auto& ex = ref.state().e[1];
  CHECK(std::any_of(ex.begin(), ex.end(), [](float v) { return v != 0.0f; }));
}

TEST_CASE("thread count does not change the fields") {
  Simulation a = make(KernelVariant::Parallel, 1);
  Simulation b = make(KernelVariant::Parallel, 3);
  for (int n = 0; n < 80; ++n) {
    a.step();
    b.step();
  }
  for (int c = 0; c < 3; ++c) CHECK(same_bits(a.state().e[c], b.state().e[c]));
}

TEST_CASE("a silent source leaves every field at zero") {
  Simulation s = make(KernelVariant::Parallel, 2, 0.0);
  for (int n = 0; n < 60; ++n) s.step();
  for (int c = 0; c < 3; ++c) {
    const auto& e = s.state().e[c];
    const auto& h = s.state().h[c];
    CHECK(std::all_of(e.begin(), e.end(), [](float v) { return v == 0.0f; }));
    CHECK(std::all_of(h.begin(), h.end(), [](float v) { return v == 0.0f; }));
  }
}

TEST_CASE("discrete divergence of H stays at round-off outside the absorber") {
  Simulation s = make(KernelVariant::Parallel, 2);
  for (int n = 0; n < 200; ++n) s.step();
  const Lattice& L = s.state().lattice;
  const auto& H = s.state().h;
  const int a = s.grid().absorber_cells + 1;
  double worst = 0.0, scale = 0.0;
  for (int i = a; i < L.nx - a; ++i)
    for (int j = a; j < L.ny - a; ++j)
      for (int k = a; k < L.nz - a; ++k) {
        const std::size_t c = L.index(i, j, k);
        const double div = (H[0][L.index(i + 1, j, k)] - H[0][c]) + (H[1][L.index(i, j + 1, k)] - H[1][c]) +
                           (H[2][L.index(i, j, k + 1)] - H[2][c]);
        worst = std::max(worst, std::abs(div));
        scale = std::max({scale, double(std::abs(H[0][c])), double(std::abs(H[1][c])), double(std::abs(H[2][c]))});
      }
  REQUIRE(scale > 0.0);
  CHECK(worst / scale < 1e-4);
}
