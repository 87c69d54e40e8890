#pragma once

#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "coego/config.hpp"

namespace coego {

namespace detail {

inline std::string where(const YAML::Mark& m) {
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

/// Reads optional keys of one mapping and rejects any key it was not asked about.
class SectionReader {
 public:
  SectionReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ParseError(path_ + ": expected a mapping" + where(node_.Mark()));
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!present()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(field(key) + ": invalid value" + where(v.Mark()));
    }
  }

  void get_vec2(const std::string& key, Vec2& out) {
    seen_.insert(key);
    if (!present()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    if (!v.IsSequence() || v.size() != 2) throw ParseError(field(key) + ": expected [x, y]" + where(v.Mark()));
    try {
      out = Vec2(v[0].as<double>(), v[1].as<double>());
    } catch (const YAML::Exception&) {
      throw ParseError(field(key) + ": invalid value" + where(v.Mark()));
    }
  }

  template <class T>
  void require(const std::string& key, T& out) {
    if (!present() || !node_[key]) throw ParseError(field(key) + ": missing required key" + where(node_.Mark()));
    get(key, out);
  }

  SectionReader child(const std::string& key) {
    seen_.insert(key);
    return {present() ? node_[key] : YAML::Node(), field(key)};
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return present() ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!present()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ParseError(field(key) + ": unknown key '" + key + "'" + where(kv.first.Mark()));
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool present() const { return node_ && node_.IsMap(); }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline ObstacleKind parse_kind(const std::string& s, const std::string& field) {
  if (s == "ground") return ObstacleKind::Ground;
  if (s == "overhead") return ObstacleKind::Overhead;
  throw ParseError(field + ": expected 'ground' or 'overhead', got '" + s + "'");
}

inline ObstacleShape parse_shape(const std::string& s, const std::string& field) {
  if (s == "box") return ObstacleShape::AxisAlignedBox;
  if (s == "cylinder") return ObstacleShape::VerticalCylinder;
  throw ParseError(field + ": expected 'box' or 'cylinder', got '" + s + "'");
}

inline void read_camera(SectionReader& r, CameraSpec& cam) {
  r.get("width_px", cam.width);
  r.get("height_px", cam.height);
  r.get("hfov_deg", cam.hfov_deg);
  r.get("max_range_m", cam.max_range);
  r.get("rate_hz", cam.rate_hz);
  r.get("noise_sigma_m", cam.noise_sigma);
}

}  // namespace detail

/// Overlays a YAML document onto the embedded defaults and validates the result.
inline ScenarioConfig parse_scenario(const YAML::Node& root) {
  using detail::SectionReader;
  ScenarioConfig c;
  SectionReader top(root, "");
  top.get("name", c.name);

  {
    auto s = top.child("scene");
    auto corridor = s.child("corridor");
    corridor.get("x_min_m", c.scene.corridor.min.x());
    corridor.get("x_max_m", c.scene.corridor.max.x());
    corridor.get("y_min_m", c.scene.corridor.min.y());
    corridor.get("y_max_m", c.scene.corridor.max.y());
    corridor.finish();
    auto start = s.child("start");
    start.get("x_m", c.scene.start_robot.x);
    start.get("y_m", c.scene.start_robot.y);
    start.get("theta_rad", c.scene.start_robot.theta);
    start.finish();
    auto goal = s.child("goal");
    goal.get("x_m", c.scene.goal.x());
    goal.get("y_m", c.scene.goal.y());
    goal.finish();
    auto jitter = s.child("obstacle_jitter");
    jitter.get("x_m", c.obstacle_jitter.x());
    jitter.get("y_m", c.obstacle_jitter.y());
    jitter.finish();
    auto human = s.child("human");
    human.get("leash_length_m", c.scene.human.leash_length);
    human.get("chest_height_m", c.scene.human.chest_height);
    human.get("body_radius_m", c.scene.human.body_radius);
    human.get("head_height_m", c.scene.human.head_height);
    human.finish();
    auto robot = s.child("robot");
    robot.get("radius_m", c.scene.robot.radius);
    robot.get("height_m", c.scene.robot.height);
    robot.finish();

    const YAML::Node list = s.raw("obstacles");
    if (list && !list.IsNull()) {
      if (!list.IsSequence()) throw ParseError("scene.obstacles: expected a list" + detail::where(list.Mark()));
      for (std::size_t i = 0; i < list.size(); ++i) {
        SectionReader o(list[i], "scene.obstacles[" + std::to_string(i) + "]");
        Obstacle ob;
        std::string kind, shape;
        o.require("id", ob.id);
        o.require("kind", kind);
        o.require("shape", shape);
        ob.kind = detail::parse_kind(kind, o.field("kind"));
        ob.shape = detail::parse_shape(shape, o.field("shape"));
        o.get_vec2("center_m", ob.center);
        if (ob.shape == ObstacleShape::AxisAlignedBox) {
          if (!list[i]["half_extent_m"]) throw ParseError(o.field("half_extent_m") + ": missing required key");
          o.get_vec2("half_extent_m", ob.half_extent);
        } else {
          o.require("radius_m", ob.radius);
        }
        o.require("z_min_m", ob.z_min);
        o.require("z_max_m", ob.z_max);
        o.finish();
        c.scene.obstacles.push_back(std::move(ob));
      }
    }
    s.finish();
  }

  {
    auto sensors = top.child("sensors");
    auto rc = sensors.child("robot_camera");
    detail::read_camera(rc, c.robot_camera);
    auto mount = rc.child("mount");
    mount.get("x_m", c.dog_mount.offset.x());
    mount.get("y_m", c.dog_mount.offset.y());
    mount.get("z_m", c.dog_mount.offset.z());
    mount.get("pitch_deg", c.dog_mount.pitch_deg);
    mount.finish();
    rc.finish();

    auto cc = sensors.child("chest_camera");
    detail::read_camera(cc, c.chest_camera);
    auto cmount = cc.child("mount");
    cmount.get("pitch_deg", c.chest_mount.pitch_deg);
    cmount.finish();
    auto bend = cc.child("bend");
    bend.get("enabled", c.bend.enabled);
    bend.get("start_s", c.bend.start);
    bend.get("end_s", c.bend.end);
    bend.get("pitch_deg", c.bend.pitch_deg);
    bend.finish();
    cc.finish();
    sensors.finish();
  }

  {
    auto m = top.child("costmap");
    m.get("width_m", c.costmap.width_m);
    m.get("height_m", c.costmap.height_m);
    m.get("resolution_m", c.costmap.resolution);
    m.get("origin_x_m", c.costmap.origin.x());
    m.get("origin_y_m", c.costmap.origin.y());
    m.get("inflation_radius_m", c.costmap.inflation_radius);
    m.get("passthrough_z_min_m", c.costmap.passthrough_z_min);
    m.get("passthrough_z_max_m", c.costmap.passthrough_z_max);
    m.finish();
  }

  {
    auto p = top.child("planner");
    auto& a = c.planner.apf;
    p.get("k_att", a.k_att);
    p.get("k_rep", a.k_rep);
    p.get("influence_radius_m", a.d0);
    p.get("v_max_mps", a.v_max);
    p.get("w_max_radps", a.w_max);
    p.get("admittance_gain", a.admittance_gain);
    p.get("yaw_gain", a.yaw_gain);
    p.get("smoothing", a.smoothing);
    p.get("rate_hz", c.planner.rate_hz);
    p.get("stall_time_s", c.planner.stall_time);
    p.get("stall_force", c.planner.stall_force);
    p.finish();
  }

  {
    auto h = top.child("human_branch");
    auto& s = c.human_branch.safety;
    h.get("corridor_half_width_m", s.corridor_half_width);
    h.get("z_low_m", s.z_low);
    h.get("z_high_m", s.z_high);
    h.get("d_safe_m", s.d_safe);
    h.get("d_brake_m", s.d_brake);
    h.get("v_evade_mps", s.v_evade);
    h.get("w_evade_radps", s.w_evade);
    h.get("release_hysteresis_m", s.release_hysteresis);
    h.get("recovery_duration_s", s.recovery_duration);
    h.get("front_band_m", s.front_band);
    h.get("rate_hz", c.human_branch.rate_hz);
    h.finish();
  }

  {
    auto a = top.child("arbiter");
    a.get("epsilon_mps", c.arbiter.epsilon);
    a.get("staleness_timeout_s", c.arbiter.staleness_timeout);
    a.get("tick_rate_hz", c.arbiter.tick_rate);
    a.get("characteristic_length_m", c.arbiter.characteristic_length);
    a.finish();
  }

  {
    auto s = top.child("sentinel");
    s.get("enabled", c.sentinel.enabled);
    s.get("d_crit_m", c.sentinel.d_crit);
    s.get("debounce_s", c.sentinel.debounce);
    if (const auto roi_node = s.raw("roi"); roi_node && !roi_node.IsNull()) {
      SectionReader roi(roi_node, "sentinel.roi");
      RoiSpec r = c.sentinel_roi();
      roi.get("u_min_px", r.u_min);
      roi.get("u_max_px", r.u_max);
      roi.get("v_min_px", r.v_min);
      roi.get("v_max_px", r.v_max);
      roi.finish();
      c.sentinel.roi = r;
    }
    s.finish();
  }

  {
    auto s = top.child("sim");
    s.get("dt_s", c.sim.dt);
    s.get("timeout_s", c.sim.timeout);
    s.get("goal_tolerance_m", c.sim.goal_tolerance);
    s.get("collision_debounce_s", c.sim.collision_debounce);
    s.finish();
  }

  {
    auto w = top.child("walker");
    w.get("speed_mps", c.walker.speed);
    w.get("heading_jitter_radps", c.walker.heading_jitter);
    w.get("max_bias_rad", c.walker.max_bias);
    w.get("turn_gain_per_s", c.walker.turn_gain);
    w.get("backoff_time_s", c.walker.backoff_time);
    w.get("backoff_speed_mps", c.walker.backoff_speed);
    w.get("sidestep_time_s", c.walker.sidestep_time);
    w.get("sidestep_speed_mps", c.walker.sidestep_speed);
    w.finish();
  }

  top.finish();
  validate(c);
  return c;
}

inline ScenarioConfig parse_scenario_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError("malformed scenario: " + e.msg + detail::where(e.mark));
  }
  return parse_scenario(root);
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("scenario file not found: " + path.string());
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::ParserException& e) {
    throw ParseError(path.string() + ": malformed scenario: " + e.msg + detail::where(e.mark));
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read scenario file: " + path.string());
  }
  try {
    return parse_scenario(root);
  } catch (const ValidationError& e) {
    throw ValidationError(e.field(), std::string(e.what()).substr(e.field().size() + 2) + " [" + path.string() + "]");
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

/// Fully resolved configuration, every key present, in a fixed order.
inline std::string dump_effective(const ScenarioConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(10);
  auto vec2 = [&](const Vec2& v) { e << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << YAML::EndSeq; };
  auto camera = [&](const CameraSpec& cam) {
    e << YAML::Key << "width_px" << YAML::Value << cam.width;
    e << YAML::Key << "height_px" << YAML::Value << cam.height;
    e << YAML::Key << "hfov_deg" << YAML::Value << cam.hfov_deg;
    e << YAML::Key << "max_range_m" << YAML::Value << cam.max_range;
    e << YAML::Key << "rate_hz" << YAML::Value << cam.rate_hz;
    e << YAML::Key << "noise_sigma_m" << YAML::Value << cam.noise_sigma;
  };

  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;

  e << YAML::Key << "scene" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "corridor" << YAML::Value << YAML::BeginMap << YAML::Key << "x_min_m" << YAML::Value
    << c.scene.corridor.min.x() << YAML::Key << "x_max_m" << YAML::Value << c.scene.corridor.max.x() << YAML::Key
    << "y_min_m" << YAML::Value << c.scene.corridor.min.y() << YAML::Key << "y_max_m" << YAML::Value
    << c.scene.corridor.max.y() << YAML::EndMap;
  e << YAML::Key << "start" << YAML::Value << YAML::BeginMap << YAML::Key << "x_m" << YAML::Value
    << c.scene.start_robot.x << YAML::Key << "y_m" << YAML::Value << c.scene.start_robot.y << YAML::Key
    << "theta_rad" << YAML::Value << c.scene.start_robot.theta << YAML::EndMap;
  e << YAML::Key << "goal" << YAML::Value << YAML::BeginMap << YAML::Key << "x_m" << YAML::Value << c.scene.goal.x()
    << YAML::Key << "y_m" << YAML::Value << c.scene.goal.y() << YAML::EndMap;
  e << YAML::Key << "obstacle_jitter" << YAML::Value << YAML::BeginMap << YAML::Key << "x_m" << YAML::Value
    << c.obstacle_jitter.x() << YAML::Key << "y_m" << YAML::Value << c.obstacle_jitter.y() << YAML::EndMap;
  const auto& h = c.scene.human;
  e << YAML::Key << "human" << YAML::Value << YAML::BeginMap << YAML::Key << "leash_length_m" << YAML::Value
    << h.leash_length << YAML::Key << "chest_height_m" << YAML::Value << h.chest_height << YAML::Key
    << "body_radius_m" << YAML::Value << h.body_radius << YAML::Key << "head_height_m" << YAML::Value
    << h.head_height << YAML::EndMap;
  e << YAML::Key << "robot" << YAML::Value << YAML::BeginMap << YAML::Key << "radius_m" << YAML::Value
    << c.scene.robot.radius << YAML::Key << "height_m" << YAML::Value << c.scene.robot.height << YAML::EndMap;
  e << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
  for (const auto& ob : c.scene.obstacles) {
    e << YAML::BeginMap;
    e << YAML::Key << "id" << YAML::Value << ob.id;
    e << YAML::Key << "kind" << YAML::Value << std::string(to_string(ob.kind));
    e << YAML::Key << "shape" << YAML::Value
      << (ob.shape == ObstacleShape::AxisAlignedBox ? "box" : "cylinder");
    e << YAML::Key << "center_m" << YAML::Value;
    vec2(ob.center);
    if (ob.shape == ObstacleShape::AxisAlignedBox) {
      e << YAML::Key << "half_extent_m" << YAML::Value;
      vec2(ob.half_extent);
    } else {
      e << YAML::Key << "radius_m" << YAML::Value << ob.radius;
    }
    e << YAML::Key << "z_min_m" << YAML::Value << ob.z_min;
    e << YAML::Key << "z_max_m" << YAML::Value << ob.z_max;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::EndMap;

  e << YAML::Key << "sensors" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "robot_camera" << YAML::Value << YAML::BeginMap;
  camera(c.robot_camera);
  e << YAML::Key << "mount" << YAML::Value << YAML::BeginMap << YAML::Key << "x_m" << YAML::Value
    << c.dog_mount.offset.x() << YAML::Key << "y_m" << YAML::Value << c.dog_mount.offset.y() << YAML::Key << "z_m"
    << YAML::Value << c.dog_mount.offset.z() << YAML::Key << "pitch_deg" << YAML::Value << c.dog_mount.pitch_deg
    << YAML::EndMap;
  e << YAML::EndMap;
  e << YAML::Key << "chest_camera" << YAML::Value << YAML::BeginMap;
  camera(c.chest_camera);
  e << YAML::Key << "mount" << YAML::Value << YAML::BeginMap << YAML::Key << "pitch_deg" << YAML::Value
    << c.chest_mount.pitch_deg << YAML::EndMap;
  e << YAML::Key << "bend" << YAML::Value << YAML::BeginMap << YAML::Key << "enabled" << YAML::Value
    << c.bend.enabled << YAML::Key << "start_s" << YAML::Value << c.bend.start << YAML::Key << "end_s"
    << YAML::Value << c.bend.end << YAML::Key << "pitch_deg" << YAML::Value << c.bend.pitch_deg << YAML::EndMap;
  e << YAML::EndMap;
  e << YAML::EndMap;

  const auto& m = c.costmap;
  e << YAML::Key << "costmap" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "width_m" << YAML::Value << m.width_m << YAML::Key << "height_m" << YAML::Value << m.height_m;
  e << YAML::Key << "resolution_m" << YAML::Value << m.resolution;
  e << YAML::Key << "origin_x_m" << YAML::Value << m.origin.x() << YAML::Key << "origin_y_m" << YAML::Value
    << m.origin.y();
  e << YAML::Key << "inflation_radius_m" << YAML::Value << m.inflation_radius;
  e << YAML::Key << "passthrough_z_min_m" << YAML::Value << m.passthrough_z_min;
  e << YAML::Key << "passthrough_z_max_m" << YAML::Value << m.passthrough_z_max;
  e << YAML::EndMap;

  const auto& a = c.planner.apf;
  e << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "k_att" << YAML::Value << a.k_att << YAML::Key << "k_rep" << YAML::Value << a.k_rep;
  e << YAML::Key << "influence_radius_m" << YAML::Value << a.d0;
  e << YAML::Key << "v_max_mps" << YAML::Value << a.v_max << YAML::Key << "w_max_radps" << YAML::Value << a.w_max;
  e << YAML::Key << "admittance_gain" << YAML::Value << a.admittance_gain;
  e << YAML::Key << "yaw_gain" << YAML::Value << a.yaw_gain << YAML::Key << "smoothing" << YAML::Value
    << a.smoothing;
  e << YAML::Key << "rate_hz" << YAML::Value << c.planner.rate_hz;
  e << YAML::Key << "stall_time_s" << YAML::Value << c.planner.stall_time;
  e << YAML::Key << "stall_force" << YAML::Value << c.planner.stall_force;
  e << YAML::EndMap;

  const auto& s = c.human_branch.safety;
  e << YAML::Key << "human_branch" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "corridor_half_width_m" << YAML::Value << s.corridor_half_width;
  e << YAML::Key << "z_low_m" << YAML::Value << s.z_low << YAML::Key << "z_high_m" << YAML::Value << s.z_high;
  e << YAML::Key << "d_safe_m" << YAML::Value << s.d_safe << YAML::Key << "d_brake_m" << YAML::Value << s.d_brake;
  e << YAML::Key << "v_evade_mps" << YAML::Value << s.v_evade << YAML::Key << "w_evade_radps" << YAML::Value
    << s.w_evade;
  e << YAML::Key << "release_hysteresis_m" << YAML::Value << s.release_hysteresis;
  e << YAML::Key << "recovery_duration_s" << YAML::Value << s.recovery_duration;
  e << YAML::Key << "front_band_m" << YAML::Value << s.front_band;
  e << YAML::Key << "rate_hz" << YAML::Value << c.human_branch.rate_hz;
  e << YAML::EndMap;

  e << YAML::Key << "arbiter" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "epsilon_mps" << YAML::Value << c.arbiter.epsilon;
  e << YAML::Key << "staleness_timeout_s" << YAML::Value << c.arbiter.staleness_timeout;
  e << YAML::Key << "tick_rate_hz" << YAML::Value << c.arbiter.tick_rate;
  e << YAML::Key << "characteristic_length_m" << YAML::Value << c.arbiter.characteristic_length;
  e << YAML::EndMap;

  const RoiSpec roi = c.sentinel_roi();
  e << YAML::Key << "sentinel" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "enabled" << YAML::Value << c.sentinel.enabled;
  e << YAML::Key << "d_crit_m" << YAML::Value << c.sentinel.d_crit;
  e << YAML::Key << "debounce_s" << YAML::Value << c.sentinel.debounce;
  e << YAML::Key << "roi" << YAML::Value << YAML::BeginMap << YAML::Key << "u_min_px" << YAML::Value << roi.u_min
    << YAML::Key << "u_max_px" << YAML::Value << roi.u_max << YAML::Key << "v_min_px" << YAML::Value << roi.v_min
    << YAML::Key << "v_max_px" << YAML::Value << roi.v_max << YAML::EndMap;
  e << YAML::EndMap;

  e << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dt_s" << YAML::Value << c.sim.dt << YAML::Key << "timeout_s" << YAML::Value << c.sim.timeout;
  e << YAML::Key << "goal_tolerance_m" << YAML::Value << c.sim.goal_tolerance;
  e << YAML::Key << "collision_debounce_s" << YAML::Value << c.sim.collision_debounce;
  e << YAML::EndMap;

  const auto& w = c.walker;
  e << YAML::Key << "walker" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "speed_mps" << YAML::Value << w.speed;
  e << YAML::Key << "heading_jitter_radps" << YAML::Value << w.heading_jitter;
  e << YAML::Key << "max_bias_rad" << YAML::Value << w.max_bias;
  e << YAML::Key << "turn_gain_per_s" << YAML::Value << w.turn_gain;
  e << YAML::Key << "backoff_time_s" << YAML::Value << w.backoff_time;
  e << YAML::Key << "backoff_speed_mps" << YAML::Value << w.backoff_speed;
  e << YAML::Key << "sidestep_time_s" << YAML::Value << w.sidestep_time;
  e << YAML::Key << "sidestep_speed_mps" << YAML::Value << w.sidestep_speed;
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace coego
