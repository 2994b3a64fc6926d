#include <doctest.h>

#include "agwire/errors.hpp"
#include "agwire/geometry.hpp"
#include "agwire/grid.hpp"

using namespace agwire;

TEST_CASE("shape membership and volume") {
  const Sphere s{{1, 2, 3}, 10};
  CHECK(contains(s, {1, 2, 12.9}));
  CHECK_FALSE(contains(s, {1, 2, 13.1}));
  CHECK(volume(s) == doctest::Approx(4.0 / 3.0 * kPi * 1000.0));

  const Capsule c{{0, 0, 0}, {0, 100, 0}, 5};
  CHECK(contains(c, {0, -4.9, 0}));
  CHECK(contains(c, {4.9, 50, 0}));
  CHECK_FALSE(contains(c, {0, 105.1, 0}));
  CHECK(volume(c) == doctest::Approx(kPi * 25.0 * 100.0 + 4.0 / 3.0 * kPi * 125.0));

  const HalfSpace h{-3.0};
  CHECK(contains(h, {0, 0, -3.5}));
  CHECK_FALSE(contains(h, {0, 0, -2.5}));
}

TEST_CASE("single-wire scene places the apex at the stated distance") {
  const Scene s = build_single_wire_scene(25, 2000, 15, 15);
  CHECK(s.material_at({0, 0, 0}) == "diamond");
  // Wire axis sits one radius above the substrate plane at z = -15.
  CHECK(s.material_at({0, -15.5, 10}) == "silver");
  CHECK(s.material_at({0, -14.5, 10}) == "vacuum");
  CHECK(s.material_at({0, 0, -16}) == "silica");
  CHECK(s.material_at({0, 0, 20}) == "vacuum");
  CHECK_NOTHROW(validate(s));
  CHECK_THROWS_AS(build_single_wire_scene(25, 2000, 15, 10), GeometryError);
  CHECK_THROWS_AS(build_single_wire_scene(-25, 2000, 15, 15), GeometryError);
}

TEST_CASE("two-wire scene is mirror symmetric in y") {
  const Scene s = build_two_wire_scene(25, 500, 15, 30);
  for (double y : {14.0, 15.5, 40.0, 300.0})
    for (double z : {-16.0, 0.0, 10.0, 30.0}) CHECK(s.material_at({0, y, z}) == s.material_at({0, -y, z}));
  CHECK(s.material_at({0, 15.5, 10}) == "silver");
  CHECK(s.bounding_box.min.y == doctest::Approx(-s.bounding_box.max.y));
  CHECK_THROWS_AS(build_two_wire_scene(25, 500, 15, 29), GeometryError);
}

TEST_CASE("validation keeps shapes away from the absorber") {
  Scene s = build_reference_scene(15);
  CHECK_NOTHROW(validate(s));
  s.bounding_box.max.x = 50.0;
  CHECK_THROWS_AS(validate(s), GeometryError);
  Scene u = build_reference_scene(15);
  u.shapes.front().material = "unobtainium";
  CHECK_THROWS_AS(validate(u), GeometryError);
}

TEST_CASE("truncation clips the bounding box behind the tip") {
  const Scene full = build_single_wire_scene(25, 2000, 15, 15);
  const Scene cut = truncate_wires(full, 300);
  CHECK(cut.bounding_box.min.y == doctest::Approx(-15.0 - 300.0));
  CHECK(cut.bounding_box.max.y == full.bounding_box.max.y);
  const Scene two = truncate_wires(build_two_wire_scene(25, 2000, 15, 30), 200);
  CHECK(two.bounding_box.max.y == doctest::Approx(215.0));
  CHECK(two.bounding_box.min.y == doctest::Approx(-215.0));
}

TEST_CASE("scene JSON round trip preserves the hash") {
  const Scene s = build_two_wire_scene(25, 800, 15, 34);
  const Scene back = scene_from_json(to_json(s));
  CHECK(scene_hash(back) == scene_hash(s));
  CHECK(back.material_at({0, 17.5, 10}) == s.material_at({0, 17.5, 10}));
  CHECK(scene_hash(build_two_wire_scene(25, 800, 15, 36)) != scene_hash(s));
}

TEST_CASE("grid covers the interior on whole cells") {
  const GridSpec g = make_grid({{-100, -52, -100}, {100, 100, 100}}, 5.0);
  const Box3 in = g.interior();
  CHECK(in.min.x == doctest::Approx(-100));
  CHECK(in.min.y == doctest::Approx(-55));
  CHECK(in.max.y == doctest::Approx(100));
  CHECK(g.cells[0] == 40 + 20);
  CHECK(g.node(10, 0, 0).x == doctest::Approx(-100));
  CHECK_THROWS_AS(make_grid({{0, 0, 0}, {10, 10, 10}}, 5.0), GeometryError);
  CHECK_THROWS_AS(make_grid({{0, 0, 0}, {100, 100, 100}}, -1.0), GeometryError);
}

TEST_CASE("rasterized metal volume converges to the sphere volume") {
  Scene s;
  s.materials["vacuum"] = vacuum();
  s.materials["silver"] = silver();
  s.shapes.push_back({Sphere{{0.3, -0.7, 0.2}, 25.0}, "silver"});
  s.bounding_box = {{-130, -130, -130}, {130, 130, 130}};
  const double h = 2.5;
  const RasterGrid r = rasterize(s, make_grid(s.bounding_box, h), 700.0);
  const double expected = 4.0 / 3.0 * kPi * 25.0 * 25.0 * 25.0;
  for (int c = 0; c < 3; ++c) {
    const double v = static_cast<double>(r.count(c, "silver")) * h * h * h;
    CHECK(v == doctest::Approx(expected).epsilon(0.03));
  }
}
