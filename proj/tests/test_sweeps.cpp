#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "agwire/cache.hpp"
#include "agwire/errors.hpp"
#include "agwire/sweeps.hpp"

using namespace agwire;
namespace fs = std::filesystem;

namespace {

// An isolated nanodiamond on a coarse grid keeps each cell to a few seconds.
SweepSpec small_sweep() {
  SweepSpec s;
  s.scene.kind = SceneKind::Reference;
  s.positions = {{0, 0, 0}, {7.5, 0, 0}};
  s.orientations = {"y", "x"};
  s.spacing_nm = 7.5;
  s.monitor_half_nm = 7.5;
  return s;
}

std::string csv(const EnhancementMap& m) {
  std::ostringstream out;
  write_map_csv(out, m);
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("square lattice and presets") {
  const auto l = square_lattice(10.0, 5);
  REQUIRE(l.size() == 25);
  CHECK(l.front().x == -10.0);
  CHECK(l.back().y == 10.0);
  CHECK(square_lattice(3.0, 1).front() == Vec3{0, 0, 0});
  CHECK_THROWS_AS(square_lattice(3.0, 0), ConfigError);
  CHECK(map_preset(Preset::Desk, {}).positions.size() == 25);
  CHECK(beta_preset(Preset::Production).positions.size() == 9);
  CHECK_THROWS_AS(preset_from_string("laptop"), ConfigError);
}

TEST_CASE("sweep validation") {
  SweepSpec s = small_sweep();
  CHECK_NOTHROW(validate(s));
  s.positions.push_back({0, 16, 0});
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = small_sweep();
  s.orientations = {"q"};
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = small_sweep();
  s.positions.clear();
  CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("spec hash ignores paths and workers") {
  SweepSpec a = small_sweep(), b = small_sweep();
  b.workers = 7;
  b.output_dir = "/tmp/x";
  CHECK(spec_hash(a) == spec_hash(b));
  b.spacing_nm = 5.0;
  CHECK(spec_hash(a) != spec_hash(b));
}

TEST_CASE("a one-point sweep reproduces the standalone cell") {
  SweepSpec s = small_sweep();
  s.positions = {{0, 7.5, 0}};
  s.orientations = {"y"};
  s.workers = 1;
  const EnhancementMap m = run_sweep(s);
  REQUIRE(m.cells.size() == 1);

  CellSpec c;
  c.scene = s.scene;
  c.position = s.positions[0];
  c.orientation = "y";
  c.spacing_nm = s.spacing_nm;
  c.monitor_half_nm = s.monitor_half_nm;
  const CellResult direct = simulate_cell(c, 1);
  CHECK(m.cells[0].power.power == direct.power.power);
  CHECK(m.cells[0].key == cell_key(c));
  CHECK(m.cells[0].report.converged);
  // A dipole off centre in the same scene as its reference sees nearly the same rate.
  CHECK(m.cells[0].gamma_ratio == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("worker count does not change the CSV payload") {
  SweepSpec s = small_sweep();
  s.workers = 1;
  const EnhancementMap one = run_sweep(s);
  s.workers = 3;
  const EnhancementMap three = run_sweep(s);
  CHECK(csv(one) == csv(three));
  CHECK(one.spec_hash == three.spec_hash);
  CHECK(one.cells.size() == 4);
  CHECK(one.references.size() == 2);
  CHECK(one.failed_cells == 0);
  // Position-major, orientation-minor.
  CHECK(one.cells[0].orientation == "y");
  CHECK(one.cells[1].orientation == "x");
  CHECK(one.cells[1].position == one.cells[0].position);
}

TEST_CASE("cached sweeps resume without recomputation") {
  SweepSpec s = small_sweep();
  // Off-origin cells, so none shares its cache key with a reference run.
  s.positions = {{0, 7.5, 0}, {7.5, 0, 0}};
  s.cache_dir = fresh_dir("agwire_test_cache");
  s.output_dir = fresh_dir("agwire_test_out");
  s.workers = 2;
  const EnhancementMap first = run_sweep(s);
  for (const auto& c : first.cells) CHECK_FALSE(c.from_cache);

  // Drop one cached cell to mimic an interrupted run.
  fs::remove(*s.cache_dir / (first.cells[2].key + ".json"));
  const EnhancementMap second = run_sweep(s);
  int recomputed = 0;
  for (const auto& c : second.cells) recomputed += !c.from_cache;
  CHECK(recomputed == 1);
  CHECK(csv(first) == csv(second));

  std::ifstream written(s.output_dir / "map.csv");
  std::string header;
  std::getline(written, header);
  CHECK(header.rfind("# agwire", 0) == 0);
  CHECK(header.find(first.spec_hash) != std::string::npos);
  CHECK(fs::exists(s.output_dir / "map.json"));
}

TEST_CASE("cell results round trip through JSON") {
  CellResult r;
  r.position = {1, 2, 3};
  r.orientation = "z";
  r.power = {1.5, 5.0, {10, 10, 10}};
  r.report.converged = true;
  r.report.metric_history = {0.1, 0.01};
  r.beta = BetaFactors{0.1, 0.2, 0.3, 1.0, 2.0};
  r.raw_guided_left = 0.9;
  const CellResult back = cell_result_from_json(to_json(r));
  CHECK(back.position == r.position);
  CHECK(back.power.power == 1.5);
  CHECK(back.beta->beta_right == 0.2);
  CHECK(*back.raw_guided_left == 0.9);
  CHECK_FALSE(back.raw_guided_right.has_value());
  CHECK(back.report.metric_history == r.report.metric_history);
}

TEST_CASE("result cache stores atomically by content") {
  const fs::path dir = fresh_dir("agwire_cache_unit");
  const ResultCache cache(dir);
  const nlohmann::json inputs{{"a", 1}};
  int calls = 0;
  auto compute = [&] {
    ++calls;
    return nlohmann::json{{"v", 42}};
  };
  CHECK(cache.get_or_compute(inputs, compute).at("v") == 42);
  CHECK(cache.get_or_compute(inputs, compute).at("v") == 42);
  CHECK(calls == 1);
  CHECK(ResultCache::key_for(inputs) != ResultCache::key_for({{"a", 2}}));
  const ResultCache none;
  none.get_or_compute(inputs, compute);
  CHECK(calls == 2);
}
