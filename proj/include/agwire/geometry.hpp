// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "agwire/materials.hpp"
#include "agwire/vec3.hpp"

namespace agwire {

/// Everything at or below z_top.
struct HalfSpace {
  double z_top = 0.0;
};

struct Sphere {
  Vec3 center;
  double radius = 0.0;
};

/// Cylinder between `start` and `end` closed by hemispherical caps of the same radius.
struct Capsule {
  Vec3 start;
  Vec3 end;
  double radius = 0.0;
};

using ShapeGeometry = std::variant<HalfSpace, Sphere, Capsule>;

struct Shape {
  ShapeGeometry geometry;
  std::string material;
};

bool contains(const ShapeGeometry& shape, Vec3 p);
/// Analytic volume; infinite for a half-space.
double volume(const ShapeGeometry& shape);

/// Minimum clearance between shapes and the faces of the bounding box.
inline constexpr double kAbsorberStandoffNm = 100.0;

/// Background above an optional substrate, plus shapes in override order (later wins).
/// z = 0 is the horizontal plane through the nanodiamond centre for the built-in scenes.
struct Scene {
  std::map<std::string, MaterialModel> materials;
  std::string background = "vacuum";
  std::optional<Shape> substrate;
  std::vector<Shape> shapes;
  Box3 bounding_box;

  /// Name of the material occupying `p`.
  const std::string& material_at(Vec3 p) const;
  const MaterialModel& material(const std::string& name) const;
};

/// Throws GeometryError when a shape is degenerate, references an unknown material, or sits
/// closer than the absorber standoff to the bounding box. A capsule may pass through the two
/// box faces normal to its own axis: such wires run on into the absorber.
void validate(const Scene& scene);

/// One capsule wire along y ending short of the nanodiamond. `wire_length_nm` is the length
/// of the cylindrical section; `nd_center_to_wire_edge_nm` is the axial distance from the
/// nanodiamond centre to the wire tip. The wire lies on the -y side; both objects rest on
/// the substrate.
Scene build_single_wire_scene(double wire_radius_nm, double wire_length_nm, double nd_radius_nm,
                              double nd_center_to_wire_edge_nm,
                              const MaterialSet& materials = default_materials());

/// Two collinear wires along y whose facing tips are `gap_nm` apart, nanodiamond centred in
/// the gap at the origin.
Scene build_two_wire_scene(double wire_radius_nm, double wire_length_nm, double nd_radius_nm,
                           double gap_nm, const MaterialSet& materials = default_materials());

/// The nanodiamond alone on the substrate; the reference for decay-rate normalisation.
Scene build_reference_scene(double nd_radius_nm, const MaterialSet& materials = default_materials());

/// Shrinks the bounding box along y so that every y-directed wire keeps `kept_length_nm`
/// of its length (measured from its inner tip) inside the box and continues into the
/// absorber beyond that.
Scene truncate_wires(Scene scene, double kept_length_nm);

/// Axis-aligned bounds of a finite shape.
Box3 bounds(const ShapeGeometry& shape);

nlohmann::json to_json(const MaterialModel& model);
MaterialModel material_from_json(const std::string& name, const nlohmann::json& j);
nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

std::string scene_hash(const Scene& scene);

}  // namespace agwire
