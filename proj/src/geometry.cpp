// SPDX-License-Identifier: Apache-2.0
#include "agwire/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "agwire/errors.hpp"
#include "agwire/hash.hpp"

namespace agwire {

namespace {

double segment_distance_sq(Vec3 p, Vec3 a, Vec3 b) {
  const Vec3 ab = b - a;
  const Vec3 ap = p - a;
  double t = dot(ap, ab) / dot(ab, ab);
  t = std::clamp(t, 0.0, 1.0);
  const Vec3 d = ap - t * ab;
  return dot(d, d);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool contains(const ShapeGeometry& shape, Vec3 p) {
  return std::visit(overloaded{
                        [&](const HalfSpace& h) { return p.z <= h.z_top; },
                        [&](const Sphere& s) {
                          const Vec3 d = p - s.center;
                          return dot(d, d) <= s.radius * s.radius;
                        },
                        [&](const Capsule& c) {
                          return segment_distance_sq(p, c.start, c.end) <= c.radius * c.radius;
                        },
                    },
                    shape);
}

double volume(const ShapeGeometry& shape) {
  return std::visit(overloaded{
                        [](const HalfSpace&) { return std::numeric_limits<double>::infinity(); },
                        [](const Sphere& s) { return 4.0 / 3.0 * kPi * std::pow(s.radius, 3); },
                        [](const Capsule& c) {
                          const double len = norm(c.end - c.start);
                          return kPi * c.radius * c.radius * len +
                                 4.0 / 3.0 * kPi * std::pow(c.radius, 3);
                        },
                    },
                    shape);
}

Box3 bounds(const ShapeGeometry& shape) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      overloaded{
          [&](const HalfSpace& h) { return Box3{{-inf, -inf, -inf}, {inf, inf, h.z_top}}; },
          [](const Sphere& s) {
            const Vec3 r{s.radius, s.radius, s.radius};
            return Box3{s.center - r, s.center + r};
          },
          [](const Capsule& c) {
            const Vec3 r{c.radius, c.radius, c.radius};
            const Vec3 lo{std::min(c.start.x, c.end.x), std::min(c.start.y, c.end.y),
                          std::min(c.start.z, c.end.z)};
            const Vec3 hi{std::max(c.start.x, c.end.x), std::max(c.start.y, c.end.y),
                          std::max(c.start.z, c.end.z)};
            return Box3{lo - r, hi + r};
          },
      },
      shape);
}

const std::string& Scene::material_at(Vec3 p) const {
  for (auto it = shapes.rbegin(); it != shapes.rend(); ++it) {
    if (contains(it->geometry, p)) return it->material;
  }
  if (substrate && contains(substrate->geometry, p)) return substrate->material;
  return background;
}

const MaterialModel& Scene::material(const std::string& name) const {
  const auto it = materials.find(name);
  if (it == materials.end()) throw GeometryError("unknown material '" + name + "'");
  return it->second;
}

void validate(const Scene& scene) {
  auto check_material = [&](const std::string& name) {
    if (!scene.materials.contains(name)) throw GeometryError("unknown material '" + name + "'");
  };
  check_material(scene.background);
  const Box3& box = scene.bounding_box;
  for (int a = 0; a < 3; ++a) {
    if (!(box.max[a] > box.min[a])) throw GeometryError("empty bounding box");
  }
  if (scene.substrate) {
    if (!std::holds_alternative<HalfSpace>(scene.substrate->geometry)) {
      throw GeometryError("substrate must be a half-space");
    }
    check_material(scene.substrate->material);
    const double z = std::get<HalfSpace>(scene.substrate->geometry).z_top;
    if (z < box.min.z || z > box.max.z) throw GeometryError("substrate plane outside bounding box");
  }
  for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
    const Shape& s = scene.shapes[i];
    check_material(s.material);
    const std::string label = "shape " + std::to_string(i);
    int open_axis = -1;
    if (const auto* sp = std::get_if<Sphere>(&s.geometry)) {
      if (!(sp->radius > 0.0)) throw GeometryError(label + ": radius must be positive");
    } else if (const auto* c = std::get_if<Capsule>(&s.geometry)) {
      if (!(c->radius > 0.0)) throw GeometryError(label + ": radius must be positive");
      const Vec3 axis = c->end - c->start;
      if (!(norm(axis) > 0.0)) throw GeometryError(label + ": capsule axis length must be > 0");
      for (int a = 0; a < 3; ++a) {
        if (std::abs(axis[a]) == norm(axis)) open_axis = a;
      }
    } else {
      throw GeometryError(label + ": half-spaces are only allowed as the substrate");
    }
    const Box3 b = bounds(s.geometry);
    for (int a = 0; a < 3; ++a) {
      const bool crosses = b.min[a] < box.min[a] || b.max[a] > box.max[a];
      if (a == open_axis && crosses) continue;  // runs on into the absorber
      if (b.min[a] - box.min[a] < kAbsorberStandoffNm - 1e-9 ||
          box.max[a] - b.max[a] < kAbsorberStandoffNm - 1e-9) {
        throw GeometryError(label + ": closer than " + std::to_string(kAbsorberStandoffNm) +
                            " nm to the bounding box");
      }
    }
  }
}

namespace {

void add_materials(Scene& scene, const MaterialSet& m) {
  for (const auto* model : {&m.silver, &m.diamond, &m.silica, &m.vacuum}) {
    scene.materials[model->name] = *model;
  }
  scene.background = m.vacuum.name;
}

void fit_bounding_box(Scene& scene) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box3 box{{inf, inf, inf}, {-inf, -inf, -inf}};
  for (const auto& s : scene.shapes) {
    const Box3 b = bounds(s.geometry);
    for (int a = 0; a < 3; ++a) {
      box.min[a] = std::min(box.min[a], b.min[a]);
      box.max[a] = std::max(box.max[a], b.max[a]);
    }
  }
  if (scene.substrate) {
    box.min.z = std::min(box.min.z, std::get<HalfSpace>(scene.substrate->geometry).z_top);
  }
  const Vec3 pad{kAbsorberStandoffNm, kAbsorberStandoffNm, kAbsorberStandoffNm};
  scene.bounding_box = {box.min - pad, box.max + pad};
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw GeometryError(std::string(what) + " must be positive");
}

}  // namespace

Scene build_single_wire_scene(double wire_radius_nm, double wire_length_nm, double nd_radius_nm,
                              double nd_center_to_wire_edge_nm, const MaterialSet& materials) {
  require_positive(wire_radius_nm, "wire radius");
  require_positive(wire_length_nm, "wire length");
  require_positive(nd_radius_nm, "nanodiamond radius");
  require_positive(nd_center_to_wire_edge_nm, "nanodiamond-to-wire distance");
  Scene scene;
  add_materials(scene, materials);
  const double z_sub = -nd_radius_nm;
  const double z_axis = z_sub + wire_radius_nm;
  const double y_inner = -nd_center_to_wire_edge_nm - wire_radius_nm;
  const Capsule wire{{0.0, y_inner, z_axis}, {0.0, y_inner - wire_length_nm, z_axis},
                     wire_radius_nm};
  if (segment_distance_sq({0, 0, 0}, wire.start, wire.end) <
      std::pow(wire_radius_nm + nd_radius_nm, 2)) {
    throw GeometryError("nanodiamond overlaps the wire");
  }
  scene.substrate = Shape{HalfSpace{z_sub}, materials.silica.name};
  scene.shapes.push_back({wire, materials.silver.name});
  scene.shapes.push_back({Sphere{{0, 0, 0}, nd_radius_nm}, materials.diamond.name});
  fit_bounding_box(scene);
  return scene;
}

Scene build_two_wire_scene(double wire_radius_nm, double wire_length_nm, double nd_radius_nm,
                           double gap_nm, const MaterialSet& materials) {
  require_positive(wire_radius_nm, "wire radius");
  require_positive(wire_length_nm, "wire length");
  require_positive(nd_radius_nm, "nanodiamond radius");
  if (!(gap_nm >= 2.0 * nd_radius_nm)) {
    throw GeometryError("gap must be at least the nanodiamond diameter");
  }
  Scene scene;
  add_materials(scene, materials);
  const double z_sub = -nd_radius_nm;
  const double z_axis = z_sub + wire_radius_nm;
  const double y_inner = 0.5 * gap_nm + wire_radius_nm;
  const Capsule left{{0.0, -y_inner, z_axis}, {0.0, -y_inner - wire_length_nm, z_axis},
                     wire_radius_nm};
  const Capsule right{{0.0, y_inner, z_axis}, {0.0, y_inner + wire_length_nm, z_axis},
                      wire_radius_nm};
  for (const auto& w : {left, right}) {
    if (segment_distance_sq({0, 0, 0}, w.start, w.end) <
        std::pow(wire_radius_nm + nd_radius_nm, 2)) {
      throw GeometryError("nanodiamond overlaps a wire");
    }
  }
  scene.substrate = Shape{HalfSpace{z_sub}, materials.silica.name};
  scene.shapes.push_back({left, materials.silver.name});
  scene.shapes.push_back({right, materials.silver.name});
  scene.shapes.push_back({Sphere{{0, 0, 0}, nd_radius_nm}, materials.diamond.name});
  fit_bounding_box(scene);
  return scene;
}

Scene build_reference_scene(double nd_radius_nm, const MaterialSet& materials) {
  require_positive(nd_radius_nm, "nanodiamond radius");
  Scene scene;
  add_materials(scene, materials);
  scene.substrate = Shape{HalfSpace{-nd_radius_nm}, materials.silica.name};
  scene.shapes.push_back({Sphere{{0, 0, 0}, nd_radius_nm}, materials.diamond.name});
  fit_bounding_box(scene);
  return scene;
}

Scene truncate_wires(Scene scene, double kept_length_nm) {
  require_positive(kept_length_nm, "kept wire length");
  for (const auto& s : scene.shapes) {
    const auto* c = std::get_if<Capsule>(&s.geometry);
    if (!c || c->start.x != c->end.x || c->start.z != c->end.z) continue;
    // The inner tip is the end closer to the origin.
    const bool negative = c->end.y < c->start.y;
    const double inner = negative ? std::max(c->start.y, c->end.y) + c->radius
                                  : std::min(c->start.y, c->end.y) - c->radius;
    if (negative) {
      scene.bounding_box.min.y = std::max(scene.bounding_box.min.y, inner - kept_length_nm);
    } else {
      scene.bounding_box.max.y = std::min(scene.bounding_box.max.y, inner + kept_length_nm);
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json vec_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw GeometryError(field + ": expected [x, y, z]");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

nlohmann::json to_json(const MaterialModel& model) {
  nlohmann::json j;
  switch (model.kind) {
    case MaterialKind::ConstantIndex:
      j["kind"] = "constant-index";
      j["refractive_index"] = model.refractive_index;
      break;
    case MaterialKind::PerfectConductor:
      j["kind"] = "perfect-conductor";
      break;
    case MaterialKind::DrudeLorentz: {
      j["kind"] = "drude-lorentz";
      j["eps_infinity"] = model.eps_infinity;
      auto poles = nlohmann::json::array();
      for (const auto& p : model.poles) {
        poles.push_back({{"strength_rad2_per_s2", p.strength},
                         {"resonance_rad_per_s", p.resonance},
                         {"damping_rad_per_s", p.damping}});
      }
      j["poles"] = poles;
      break;
    }
  }
  return j;
}

MaterialModel material_from_json(const std::string& name, const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant-index") {
    return MaterialModel::constant_index(name, j.at("refractive_index").get<double>());
  }
  if (kind == "perfect-conductor") return MaterialModel::perfect_conductor(name);
  if (kind == "drude-lorentz") {
    std::vector<LorentzPole> poles;
    for (const auto& p : j.at("poles")) {
      LorentzPole lp{p.at("strength_rad2_per_s2").get<double>(),
                     p.at("resonance_rad_per_s").get<double>(),
                     p.at("damping_rad_per_s").get<double>()};
      if (lp.strength < 0.0 || lp.damping < 0.0 || lp.resonance < 0.0) {
        throw GeometryError("material '" + name + "': pole parameters must be nonnegative");
      }
      poles.push_back(lp);
    }
    return MaterialModel::drude_lorentz(name, j.at("eps_infinity").get<double>(), poles);
  }
  throw GeometryError("material '" + name + "': unknown kind '" + kind + "'");
}

nlohmann::json to_json(const Scene& scene) {
  nlohmann::json j;
  for (const auto& [name, model] : scene.materials) j["materials"][name] = to_json(model);
  j["background"] = scene.background;
  if (scene.substrate) {
    j["substrate"] = {{"z_top_nm", std::get<HalfSpace>(scene.substrate->geometry).z_top},
                      {"material", scene.substrate->material}};
  } else {
    j["substrate"] = nullptr;
  }
  auto shapes = nlohmann::json::array();
  for (const auto& s : scene.shapes) {
    nlohmann::json sj;
    if (const auto* sp = std::get_if<Sphere>(&s.geometry)) {
      sj = {{"type", "sphere"}, {"center_nm", vec_json(sp->center)}, {"radius_nm", sp->radius}};
    } else if (const auto* c = std::get_if<Capsule>(&s.geometry)) {
      sj = {{"type", "capsule"},
            {"start_nm", vec_json(c->start)},
            {"end_nm", vec_json(c->end)},
            {"radius_nm", c->radius}};
    }
    sj["material"] = s.material;
    shapes.push_back(sj);
  }
  j["shapes"] = shapes;
  j["bounding_box_nm"] = {{"min", vec_json(scene.bounding_box.min)},
                          {"max", vec_json(scene.bounding_box.max)}};
  return j;
}

Scene scene_from_json(const nlohmann::json& j) {
  Scene scene;
  try {
    for (const auto& [name, mj] : j.at("materials").items()) {
      scene.materials[name] = material_from_json(name, mj);
    }
    scene.background = j.at("background").get<std::string>();
    if (j.contains("substrate") && !j.at("substrate").is_null()) {
      const auto& sj = j.at("substrate");
      scene.substrate =
          Shape{HalfSpace{sj.at("z_top_nm").get<double>()}, sj.at("material").get<std::string>()};
    }
    for (const auto& sj : j.at("shapes")) {
      const std::string type = sj.at("type").get<std::string>();
      Shape s;
      s.material = sj.at("material").get<std::string>();
      if (type == "sphere") {
        s.geometry = Sphere{vec_from(sj.at("center_nm"), "center_nm"),
                            sj.at("radius_nm").get<double>()};
      } else if (type == "capsule") {
        s.geometry = Capsule{vec_from(sj.at("start_nm"), "start_nm"),
                             vec_from(sj.at("end_nm"), "end_nm"), sj.at("radius_nm").get<double>()};
      } else {
        throw GeometryError("unknown shape type '" + type + "'");
      }
      scene.shapes.push_back(std::move(s));
    }
    const auto& bj = j.at("bounding_box_nm");
    scene.bounding_box = {vec_from(bj.at("min"), "bounding_box_nm.min"),
                          vec_from(bj.at("max"), "bounding_box_nm.max")};
  } catch (const nlohmann::json::exception& e) {
    throw GeometryError(std::string("scene JSON: ") + e.what());
  }
  validate(scene);
  return scene;
}

std::string scene_hash(const Scene& scene) { return content_hash(to_json(scene).dump()); }

}  // namespace agwire
