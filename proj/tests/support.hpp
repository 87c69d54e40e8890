#pragma once

#include <filesystem>
#include <random>

#include "coego/scenario_io.hpp"

namespace testsupport {

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(COEGO_SCENARIO_DIR) / (name + ".yaml");
}

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(COEGO_TEST_DATA) / rel; }

inline const coego::ScenarioConfig& canonical() {
  static const coego::ScenarioConfig cfg = coego::load_scenario(scenario_path("canonical"));
  return cfg;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("coego_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline coego::Obstacle box(std::string id, double cx, double cy, double hx, double hy, double z0, double z1,
                           coego::ObstacleKind kind = coego::ObstacleKind::Ground) {
  coego::Obstacle o;
  o.id = std::move(id);
  o.shape = coego::ObstacleShape::AxisAlignedBox;
  o.center = coego::Vec2(cx, cy);
  o.half_extent = coego::Vec2(hx, hy);
  o.z_min = z0;
  o.z_max = z1;
  o.kind = kind;
  return o;
}

inline coego::Obstacle cylinder(std::string id, double cx, double cy, double r, double z0, double z1,
                                coego::ObstacleKind kind = coego::ObstacleKind::Ground) {
  coego::Obstacle o;
  o.id = std::move(id);
  o.shape = coego::ObstacleShape::VerticalCylinder;
  o.center = coego::Vec2(cx, cy);
  o.radius = r;
  o.z_min = z0;
  o.z_max = z1;
  o.kind = kind;
  return o;
}

}  // namespace testsupport
