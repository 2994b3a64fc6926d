#include <doctest.h>

#include <cmath>
#include <limits>

#include "agwire/errors.hpp"
#include "agwire/observables.hpp"
#include "agwire/solver.hpp"
#include "agwire/validation.hpp"
#include "oracles/mie_sphere.hpp"

using namespace agwire;

namespace {

Box3 cube(Vec3 c, double half) { return {c - Vec3{half, half, half}, c + Vec3{half, half, half}}; }

Scene vacuum_box(double half) {
  Scene s;
  s.materials["vacuum"] = vacuum();
  s.bounding_box = cube({0, 0, 0}, half);
  return s;
}

// Dipole power in a small box, normalized by the same box in an empty domain of equal size.
double sphere_ratio(const MaterialModel& m, double radius, double gap, Vec3 orientation, double h) {
  Scene with = vacuum_box(0);
  with.materials[m.name] = m;
  with.shapes.push_back({Sphere{{0, 0, 0}, radius}, m.name});
  with.bounding_box = {{-radius - 100, -radius - 100, -radius - 100},
                       {radius + 100, radius + gap + 100, radius + 100}};
  Scene without = vacuum_box(0);
  without.bounding_box = with.bounding_box;
  const Vec3 p{0, radius + gap, 0};
  DipoleSource src;
  src.position = p;
  src.orientation = orientation;
  auto power = [&](const Scene& s) {
    Simulation sim(s, make_grid(s.bounding_box, h), src);
    sim.add_monitor(BoxMonitorSpec{"box", cube(p, h - 1e-6)});
    const RunReport r = sim.run_cw();
    CHECK(r.converged);
    return emitted_power(sim.monitor("box"));
  };
  return decay_rate_enhancement(power(with), power(without));
}

}  // namespace

TEST_CASE("free-space dipole on a coarse grid") {
  const Scene s = vacuum_box(80);
  DipoleSource src;
  Simulation sim(s, make_grid(s.bounding_box, 5.0), src);
  sim.add_monitor(BoxMonitorSpec{"inner", cube({0, 0, 0}, 10 - 1e-6)});
  sim.add_monitor(BoxMonitorSpec{"outer", cube({0, 0, 0}, 70)});
  sim.add_monitor(BoxMonitorSpec{"empty", cube({40, 0, 0}, 20)});
  const RunReport r = sim.run_cw();
  CHECK(r.converged);
  CHECK(r.final_metric() < 0.005);
  const double larmor = Simulation::free_space_power(1.0, 700.0);
  const double inner = sim.monitor("inner").flux();
  CHECK(inner == doctest::Approx(larmor).epsilon(0.12));
  CHECK(sim.monitor("outer").flux() == doctest::Approx(inner).epsilon(0.01));
  CHECK(std::abs(sim.monitor("empty").flux()) < 0.01 * inner);
  CHECK(sim.source_power() == doctest::Approx(inner).epsilon(0.01));
}

TEST_CASE("free-space power formula scales with amplitude, frequency and index") {
  const double p = Simulation::free_space_power(1.0, 700.0);
  CHECK(Simulation::free_space_power(2.0, 700.0) == doctest::Approx(4.0 * p));
  // Fixed current moment: omega^2. Fixed dipole moment (current moment omega p): omega^4.
  CHECK(Simulation::free_space_power(1.0, 350.0) == doctest::Approx(4.0 * p));
  CHECK(Simulation::free_space_power(2.0, 350.0) == doctest::Approx(16.0 * p));
  CHECK(Simulation::free_space_power(1.0, 700.0, 2.0) == doctest::Approx(2.0 * p));
}

TEST_CASE("mirror closed form has the textbook limits") {
  CHECK(mirror_dipole_closed_form(1e-3, 700, true) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(mirror_dipole_closed_form(1e-3, 700, false) == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(mirror_dipole_closed_form(1e6, 700, true) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(mirror_dipole_closed_form(1e6, 700, false) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK_THROWS_AS(mirror_dipole_closed_form(-1, 700, true), DomainError);
}

TEST_CASE("large nearly perfect sphere reproduces the mirror closed form") {
  for (double d : {40.0, 100.0, 200.0}) {
    const auto s = oracle::sphere_decay(20000, {-1e5, 1e3}, 20000 + d, 700, 900);
    CHECK(s.radial == doctest::Approx(mirror_dipole_closed_form(d, 700, true)).epsilon(0.02));
    CHECK(s.tangential == doctest::Approx(mirror_dipole_closed_form(d, 700, false)).epsilon(0.02));
  }
  const auto none = oracle::sphere_decay(25, {1.0, 0.0}, 30, 700);
  CHECK(none.radial == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(none.tangential == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dipole beside a dielectric sphere follows the multipole series") {
  const MaterialModel d = MaterialModel::constant_index("diamond", 2.41);
  const double gap = 10.0;
  const auto mie = oracle::sphere_decay(25, {2.41 * 2.41, 0.0}, 25 + gap, 700);
  CHECK(sphere_ratio(d, 25, gap, {0, 1, 0}, 5.0) == doctest::Approx(mie.radial).epsilon(0.05));
  CHECK(sphere_ratio(d, 25, gap, {1, 0, 0}, 5.0) == doctest::Approx(mie.tangential).epsilon(0.05));
}

TEST_CASE("dipole four cells from a silver sphere follows the multipole series") {
  const double gap = 20.0;
  const auto mie = oracle::sphere_decay(25, permittivity(silver(), 700), 25 + gap, 700);
  const double radial = sphere_ratio(silver(), 25, gap, {0, 1, 0}, 5.0);
  const double tangential = sphere_ratio(silver(), 25, gap, {1, 0, 0}, 5.0);
  MESSAGE("radial " << radial << " vs " << mie.radial << ", tangential " << tangential << " vs " << mie.tangential);
  CHECK(radial == doctest::Approx(mie.radial).epsilon(0.15));
  CHECK(tangential == doctest::Approx(mie.tangential).epsilon(0.05));
}

TEST_CASE("non-finite fields raise an instability error") {
  const Scene s = vacuum_box(60);
  Simulation sim(s, make_grid(s.bounding_box, 5.0), DipoleSource{});
  sim.add_monitor(BoxMonitorSpec{"box", cube({0, 0, 0}, 10)});
  sim.step();
  sim.state().e[0][sim.state().lattice.index(20, 20, 20)] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(sim.run_cw(), InstabilityError);
}

TEST_CASE("monitor and source placement is checked") {
  Scene s = vacuum_box(60);
  s.materials["silver"] = silver();
  s.shapes.push_back({Sphere{{30, 0, 0}, 10}, "silver"});
  Simulation sim(s, make_grid(s.bounding_box, 5.0), DipoleSource{});
  sim.add_monitor(BoxMonitorSpec{"box", cube({0, 0, 0}, 10)});
  CHECK_THROWS_AS(sim.add_monitor(BoxMonitorSpec{"box", cube({0, 0, 0}, 12)}), MonitorPlacementError);
  CHECK_THROWS_AS(sim.add_monitor(BoxMonitorSpec{"metal", cube({0, 0, 0}, 35)}), MonitorPlacementError);
  CHECK_THROWS_AS(sim.add_monitor(BoxMonitorSpec{"pml", cube({0, 0, 0}, 70)}), MonitorPlacementError);
  CHECK_THROWS_AS(sim.monitor("nope"), MonitorPlacementError);
  sim.step();
  CHECK_THROWS_AS(sim.add_monitor(BoxMonitorSpec{"late", cube({0, 0, 0}, 5)}), MonitorPlacementError);

  DipoleSource outside;
  outside.position = {100, 0, 0};
  CHECK_THROWS_AS(Simulation(s, make_grid(s.bounding_box, 5.0), outside), DomainError);
  SolverSettings fast;
  fast.courant = 0.9;
  CHECK_THROWS_AS(Simulation(s, make_grid(s.bounding_box, 5.0), DipoleSource{}, fast), DomainError);
}

TEST_CASE("decay-rate ratio requires matching records") {
  const PowerRecord a{2.0, 5.0, {10, 10, 10}};
  const PowerRecord b{1.0, 5.0, {10, 10, 10}};
  CHECK(decay_rate_enhancement(a, b) == doctest::Approx(2.0));
  CHECK_THROWS_AS(decay_rate_enhancement(a, {1.0, 2.5, {10, 10, 10}}), ComparabilityError);
  CHECK_THROWS_AS(decay_rate_enhancement(a, {1.0, 5.0, {20, 20, 20}}), ComparabilityError);
  CHECK_THROWS_AS(decay_rate_enhancement(a, {0.0, 5.0, {10, 10, 10}}), DomainError);
}
