#pragma once

#include <cmath>
#include <string>

#include "coego/arbiter.hpp"
#include "coego/human_branch.hpp"
#include "coego/planner.hpp"
#include "coego/sentinel.hpp"
#include "coego/world.hpp"

namespace coego {

struct CameraSpec {
  int width = 160;
  int height = 120;
  double hfov_deg = 60.0;
  double max_range = 5.0;
  double rate_hz = 10.0;
  double noise_sigma = 0.0;

  CameraIntrinsics intrinsics() const {
    return CameraIntrinsics::from_fov(width, height, hfov_deg * M_PI / 180.0, max_range);
  }
};

// Physical frame of the robot camera relative to RobotBase.
struct DogMount {
  Vec3 offset = Vec3(0.25, 0.0, 0.35);
  double pitch_deg = 0.0;
};

// Chest camera pitch; the mount height is the human's chest height.
struct ChestMount {
  double pitch_deg = 0.0;
};

/// Window during which the user bends down and the chest camera pitches toward the floor.
struct BendSchedule {
  bool enabled = false;
  double start = 0.0;
  double end = 0.0;
  double pitch_deg = 40.0;

  bool active(double t) const { return enabled && t >= start && t <= end; }
};

struct CostmapSpec {
  double width_m = 8.0;
  double height_m = 8.0;
  double resolution = 0.05;
  Vec2 origin = Vec2(-2.0, -4.0);
  double inflation_radius = 0.35;
  double passthrough_z_min = 0.02;
  double passthrough_z_max = 0.50;

  int width_cells() const { return static_cast<int>(std::lround(width_m / resolution)); }
  int height_cells() const { return static_cast<int>(std::lround(height_m / resolution)); }
};

struct PlannerSpec {
  ApfParams apf;
  double rate_hz = 10.0;
  double stall_time = 2.0;   // s of near-zero force away from the goal before giving up
  double stall_force = 0.05;
};

struct HumanBranchSpec {
  HumanSafetyParams safety;
  double rate_hz = 15.0;
};

struct SimSpec {
  double dt = 0.02;
  double timeout = 120.0;
  double goal_tolerance = 0.2;
  double collision_debounce = 1.0;
};

/// Tactile-exploration baseline: walk at the goal, back off on contact, sidestep.
struct WalkerSpec {
  double speed = 0.5;
  double heading_jitter = 0.15;  // rad/√s, random walk on the heading bias
  double max_bias = 0.35;        // rad
  double turn_gain = 2.0;        // 1/s
  double backoff_time = 0.8;
  double backoff_speed = 0.3;
  double sidestep_time = 1.2;
  double sidestep_speed = 0.5;
};

struct ScenarioConfig {
  std::string name = "unnamed";
  Scene scene;
  Vec2 obstacle_jitter = Vec2::Zero();
  CameraSpec robot_camera;
  CameraSpec chest_camera{160, 120, 60.0, 5.0, 15.0, 0.0};
  DogMount dog_mount;
  ChestMount chest_mount;
  BendSchedule bend;
  CostmapSpec costmap;
  PlannerSpec planner;
  HumanBranchSpec human_branch;
  ArbiterConfig arbiter;
  SentinelConfig sentinel;
  SimSpec sim;
  WalkerSpec walker;

  RoiSpec sentinel_roi() const {
    return sentinel.roi ? *sentinel.roi : RoiSpec::forward_path(robot_camera.intrinsics());
  }
};

/// Throws ValidationError naming the first field that breaks an invariant.
inline void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
  };
  const auto& s = c.scene;
  require(s.corridor.min.x() < s.corridor.max.x() && s.corridor.min.y() < s.corridor.max.y(), "scene.corridor",
          "min must be below max");
  require(s.corridor.contains(s.goal), "scene.goal", "goal lies outside the corridor bounds");
  require(s.corridor.contains(s.start_robot.position()), "scene.start", "start lies outside the corridor bounds");
  require(s.human.leash_length > s.robot.radius, "scene.human.leash_length_m", "must exceed the robot radius");
  require(s.human.body_radius > 0 && s.human.head_height > 0 && s.human.chest_height > 0 &&
              s.human.chest_height < s.human.head_height,
          "scene.human", "body radius, chest and head heights must be positive with chest below head");
  require(s.robot.radius > 0 && s.robot.height > 0, "scene.robot", "radius and height must be > 0");

  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    const auto& ob = s.obstacles[i];
    const std::string path = "scene.obstacles[" + std::to_string(i) + "]";
    if (ob.id.empty()) throw ValidationError(path + ".id", "must not be empty");
    if (!(ob.z_min < ob.z_max)) throw ValidationError(path + ".z_min_m", "z_min must be below z_max");
    if (ob.shape == ObstacleShape::AxisAlignedBox && !(ob.half_extent.x() > 0 && ob.half_extent.y() > 0))
      throw ValidationError(path + ".half_extent_m", "must be positive");
    if (ob.shape == ObstacleShape::VerticalCylinder && !(ob.radius > 0))
      throw ValidationError(path + ".radius_m", "must be positive");
    if (ob.kind == ObstacleKind::Overhead && !(ob.z_min > c.costmap.passthrough_z_max))
      throw ValidationError(path + ".z_min_m", "overhead obstacle must start above the robot clearance height");
    if (ob.kind == ObstacleKind::Ground && ob.contains_xy(s.goal))
      throw ValidationError("scene.goal", "goal lies inside obstacle '" + ob.id + "'");
    if (ob.overlaps_height(0.0, s.robot.height) &&
        ob.footprint_distance(s.start_robot.position()) < s.robot.radius)
      throw ValidationError("scene.start", "start pose intersects obstacle '" + ob.id + "'");
  }
  require(c.obstacle_jitter.x() >= 0 && c.obstacle_jitter.y() >= 0, "scene.obstacle_jitter_m", "must be >= 0");

  for (const auto* cam : {&c.robot_camera, &c.chest_camera}) {
    const char* f = cam == &c.robot_camera ? "sensors.robot_camera" : "sensors.chest_camera";
    require(cam->width > 0 && cam->height > 0, f, "image size must be positive");
    require(cam->hfov_deg > 0 && cam->hfov_deg < 180, f, "hfov_deg must be in (0, 180)");
    require(cam->max_range > 0, f, "max_range_m must be > 0");
    require(cam->rate_hz > 0, f, "rate_hz must be > 0");
    require(cam->noise_sigma >= 0, f, "noise_sigma_m must be >= 0");
  }
  require(!c.bend.enabled || c.bend.start <= c.bend.end, "sensors.chest_camera.bend", "start_s must not exceed end_s");

  require(c.costmap.resolution > 0, "costmap.resolution_m", "must be > 0");
  require(c.costmap.width_cells() > 0 && c.costmap.height_cells() > 0, "costmap.width_m",
          "map must span at least one cell");
  require(c.costmap.inflation_radius >= 0, "costmap.inflation_radius_m", "must be >= 0");
  require(c.costmap.passthrough_z_min < c.costmap.passthrough_z_max, "costmap.passthrough_z_min_m",
          "must be below passthrough_z_max_m");

  const auto& a = c.planner.apf;
  require(a.k_att > 0, "planner.k_att", "must be > 0");
  require(a.k_rep > 0, "planner.k_rep", "must be > 0");
  require(a.d0 > c.costmap.resolution, "planner.influence_radius_m", "must exceed the costmap resolution");
  require(a.v_max > 0, "planner.v_max_mps", "must be > 0");
  require(a.w_max > 0, "planner.w_max_radps", "must be > 0");
  require(a.admittance_gain > 0, "planner.admittance_gain", "must be > 0");
  require(a.yaw_gain > 0, "planner.yaw_gain", "must be > 0");
  require(a.smoothing > 0 && a.smoothing <= 1, "planner.smoothing", "must be in (0, 1]");
  require(c.planner.rate_hz > 0, "planner.rate_hz", "must be > 0");
  require(c.planner.stall_time > 0, "planner.stall_time_s", "must be > 0");

  const auto& h = c.human_branch.safety;
  require(h.corridor_half_width > 0, "human_branch.corridor_half_width_m", "must be > 0");
  require(h.z_low < h.z_high, "human_branch.z_low_m", "must be below z_high_m");
  require(h.d_brake > 0 && h.d_brake < h.d_safe, "human_branch.d_brake_m", "must satisfy 0 < d_brake < d_safe");
  require(h.v_evade > 0, "human_branch.v_evade_mps", "must be > 0");
  require(h.w_evade > 0, "human_branch.w_evade_radps", "must be > 0");
  require(h.release_hysteresis >= 0, "human_branch.release_hysteresis_m", "must be >= 0");
  require(h.recovery_duration >= 0, "human_branch.recovery_duration_s", "must be >= 0");
  require(h.front_band >= 0, "human_branch.front_band_m", "must be >= 0");
  require(c.human_branch.rate_hz > 0, "human_branch.rate_hz", "must be > 0");

  require(c.arbiter.epsilon > 0, "arbiter.epsilon_mps", "must be > 0");
  require(c.arbiter.tick_rate > 0, "arbiter.tick_rate_hz", "must be > 0");
  require(c.arbiter.characteristic_length > 0, "arbiter.characteristic_length_m", "must be > 0");
  const double slowest_publish = std::max(1.0 / c.planner.rate_hz, 1.0 / c.human_branch.rate_hz);
  require(c.arbiter.staleness_timeout > slowest_publish, "arbiter.staleness_timeout_s",
          "must exceed the slowest branch publish interval");

  require(c.sentinel.d_crit > 0, "sentinel.d_crit_m", "must be > 0");
  require(c.sentinel.debounce >= 0, "sentinel.debounce_s", "must be >= 0");
  require(c.sentinel_roi().fits(c.robot_camera.intrinsics()), "sentinel.roi", "ROI must be non-empty and inside the image");

  require(c.sim.dt > 0, "sim.dt_s", "must be > 0");
  require(c.sim.timeout > 0, "sim.timeout_s", "must be > 0");
  require(c.sim.goal_tolerance > 0, "sim.goal_tolerance_m", "must be > 0");
  require(c.walker.speed > 0, "walker.speed_mps", "must be > 0");
}

}  // namespace coego
