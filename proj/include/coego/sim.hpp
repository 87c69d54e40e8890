#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "coego/arbiter.hpp"
#include "coego/config.hpp"
#include "coego/human_branch.hpp"
#include "coego/perception.hpp"
#include "coego/planner.hpp"
#include "coego/sentinel.hpp"
#include "coego/world.hpp"

namespace coego {

enum class Condition { Unassisted, SingleView, CrossView };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Unassisted: return "unassisted";
    case Condition::SingleView: return "singleview";
    case Condition::CrossView: return "crossview";
  }
  return "?";
}

inline std::optional<Condition> parse_condition(std::string_view s) {
  if (s == "unassisted") return Condition::Unassisted;
  if (s == "singleview" || s == "single-view") return Condition::SingleView;
  if (s == "crossview" || s == "cross-view") return Condition::CrossView;
  return std::nullopt;
}

enum class Posture { Upright, Bent };

struct WorldState {
  double time = 0.0;
  Pose2D robot_pose;
  VelocityCommand robot_vel;
  Pose2D human_pose;
  Posture human_bend = Posture::Upright;
  std::uint64_t rng_seed = 0;
  std::vector<Vec2> trail;  // robot positions, oldest first; the user walks this path
};

enum class Outcome { Goal, Stalled, Timeout };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Goal: return "goal";
    case Outcome::Stalled: return "stalled";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

struct EpisodeReport {
  Condition condition = Condition::CrossView;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  double completion_time = 0.0;  // meaningful when outcome == Goal; else time of termination
  int collisions_total = 0;
  int collisions_ground = 0;
  int collisions_overhead = 0;
  int robot_collisions = 0;
  int announcements = 0;
  std::string trace_path;

  bool completed() const { return outcome == Outcome::Goal; }
};

/// Planar pose advanced by a body-frame twist over dt.
inline Pose2D integrate_pose(const Pose2D& p, const VelocityCommand& v, double dt) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  return {p.x + (v.v_x * c - v.v_y * s) * dt, p.y + (v.v_x * s + v.v_y * c) * dt, p.theta + v.w_z * dt};
}

/// Point at arc length `leash` back along the trail from its newest end, with the
/// direction of travel there. Past the oldest point the first segment is extended.
inline Pose2D pose_on_trail(const std::vector<Vec2>& trail, double leash) {
  double left = leash;
  for (std::size_t i = trail.size(); i-- > 1;) {
    const Vec2 seg = trail[i] - trail[i - 1];
    const double len = seg.norm();
    if (len < 1e-12) continue;
    const Vec2 dir = seg / len;
    if (left <= len || i == 1) {
      const Vec2 p = trail[i] - left * dir;
      return {p.x(), p.y(), std::atan2(dir.y(), dir.x())};
    }
    left -= len;
  }
  const Vec2 p = trail.empty() ? Vec2::Zero() : trail.back();
  return {p.x(), p.y(), 0.0};
}

/// Drops trail points no longer needed to place a follower `leash` behind the newest end.
inline void prune_trail(std::vector<Vec2>& trail, double leash) {
  double acc = 0.0;
  std::size_t i = trail.size();
  while (i-- > 1) {
    acc += (trail[i] - trail[i - 1]).norm();
    if (acc > leash) break;
  }
  if (i > 1) trail.erase(trail.begin(), trail.begin() + static_cast<std::ptrdiff_t>(i - 1));
}

/// Moves the trail's newest end to `robot`. Forward motion extends the trail;
/// reversing retracts it by the distance moved, so the user steps back too.
inline void advance_trail(std::vector<Vec2>& trail, const Vec2& robot, bool reversing) {
  if (trail.empty()) {
    trail.push_back(robot);
    return;
  }
  if (!reversing) {
    if ((robot - trail.back()).norm() > 1e-9) trail.push_back(robot);
    return;
  }
  double back = (robot - trail.back()).norm();
  while (trail.size() > 2 && back > 0.0) {
    const double len = (trail.back() - trail[trail.size() - 2]).norm();
    if (len > back) break;
    back -= len;
    trail.pop_back();
  }
  if (trail.size() >= 2 && back > 0.0) {
    const Vec2 a = trail[trail.size() - 2];
    const Vec2 seg = trail.back() - a;
    const double len = seg.norm();
    if (len > 1e-12) trail.back() = a + seg * std::max(0.0, (len - back) / len);
  }
  trail.back() = robot;
}

/// Trail follower: the user walks the robot's own path, `leash_length` behind it,
/// facing along that path.
inline Pose2D human_follower(const WorldState& state, const HumanParams& params) {
  return pose_on_trail(state.trail, params.leash_length);
}

/// One physics tick: executed command integrates the robot; the human follows.
inline WorldState step(const WorldState& state, const VelocityCommand& v_cmd, double dt, const Scene& scene) {
  WorldState next = state;
  const VelocityCommand motion = executed_motion(v_cmd);
  next.robot_pose = integrate_pose(state.robot_pose, motion, dt);
  next.robot_pose.theta = wrap_angle(next.robot_pose.theta);
  next.robot_vel = motion;
  advance_trail(next.trail, next.robot_pose.position(), motion.v_x < 0.0);
  prune_trail(next.trail, scene.human.leash_length);
  next.human_pose = human_follower(next, scene.human);
  next.time = state.time + dt;
  return next;
}

inline double chest_pitch_deg(double t, const ChestMount& mount, const BendSchedule& bend) {
  return bend.active(t) ? bend.pitch_deg : mount.pitch_deg;
}

// ---------------------------------------------------------------------------
// Collisions

inline bool human_overlaps(const Obstacle& ob, const Vec2& human, const HumanParams& hp) {
  return ob.overlaps_height(0.0, hp.head_height) && ob.footprint_distance(human) < hp.body_radius;
}

inline bool robot_overlaps(const Obstacle& ob, const Vec2& robot, const RobotBody& body) {
  return ob.overlaps_height(0.0, body.height) && ob.footprint_distance(robot) < body.radius;
}

struct CollisionEvent {
  double time = 0.0;
  std::size_t obstacle = 0;
  bool robot = false;  // robot-body contact (diagnostic only)
};

/// Entering transitions between the body cylinders and obstacles; contact with an
/// obstacle touched less than `debounce` seconds ago does not count again.
class CollisionTracker {
 public:
  CollisionTracker(std::size_t n_obstacles, double debounce)
      : debounce_(debounce), human_(n_obstacles), robot_(n_obstacles) {}

  std::vector<CollisionEvent> update(const WorldState& s, const Scene& scene, bool track_robot) {
    std::vector<CollisionEvent> events;
    for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
      const auto& ob = scene.obstacles[i];
      if (advance(human_[i], human_overlaps(ob, s.human_pose.position(), scene.human), s.time)) {
        events.push_back({s.time, i, false});
      }
      if (track_robot && advance(robot_[i], robot_overlaps(ob, s.robot_pose.position(), scene.robot), s.time)) {
        events.push_back({s.time, i, true});
      }
    }
    return events;
  }

  bool human_in_contact() const {
    return std::any_of(human_.begin(), human_.end(), [](const Contact& c) { return c.touching; });
  }

 private:
  struct Contact {
    bool touching = false;
    std::optional<double> last_touch;
  };

  bool advance(Contact& c, bool touching, double t) const {
    bool fresh = false;
    if (touching && !c.touching) fresh = !c.last_touch || t - *c.last_touch >= debounce_;
    if (touching) c.last_touch = t;
    c.touching = touching;
    return fresh;
  }

  double debounce_;
  std::vector<Contact> human_;
  std::vector<Contact> robot_;
};

// ---------------------------------------------------------------------------
// Unassisted baseline

class UnassistedWalker {
 public:
  enum class Mode { Walk, BackOff, Sidestep };

  explicit UnassistedWalker(WalkerSpec spec) : spec_(spec) {}

  /// Body-frame command for the walker; `contact` is tactile contact at this instant.
  template <class Rng>
  VelocityCommand command(const Pose2D& pose, const Vec2& goal, bool contact, double now, double dt, Rng& rng) {
    if (contact && !was_contact_) {
      mode_ = Mode::BackOff;
      mode_until_ = now + spec_.backoff_time;
    }
    was_contact_ = contact;
    std::normal_distribution<double> noise(0.0, 1.0);
    bias_ = std::clamp(bias_ + spec_.heading_jitter * std::sqrt(dt) * noise(rng), -spec_.max_bias, spec_.max_bias);

    VelocityCommand cmd;
    cmd.stamp = now;
    cmd.source = CommandSource::Walker;
    if (mode_ == Mode::BackOff) {
      if (now < mode_until_) {
        cmd.v_x = -spec_.backoff_speed;
        return cmd;
      }
      mode_ = Mode::Sidestep;
      mode_until_ = now + spec_.sidestep_time;
      side_ = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    }
    if (mode_ == Mode::Sidestep) {
      if (now < mode_until_) {
        cmd.v_y = side_ * spec_.sidestep_speed;
        return cmd;
      }
      mode_ = Mode::Walk;
    }
    const Vec2 to_goal = goal - pose.position();
    const double dist = to_goal.norm();
    const double desired = std::atan2(to_goal.y(), to_goal.x()) + (dist > 1.0 ? bias_ : 0.0);
    cmd.w_z = spec_.turn_gain * wrap_angle(desired - pose.theta);
    cmd.v_x = std::min(spec_.speed, dist);
    return cmd;
  }

  Mode mode() const { return mode_; }

 private:
  WalkerSpec spec_;
  Mode mode_ = Mode::Walk;
  double mode_until_ = 0.0;
  double side_ = 1.0;
  double bias_ = 0.0;
  bool was_contact_ = false;
};

// ---------------------------------------------------------------------------
// Sensor chains: optical → physical → robot base → world

inline RigidTransform robot_to_world(const Pose2D& robot) {
  return planar_transform(robot, FrameId::RobotBase, FrameId::World);
}

inline RigidTransform dog_optical_to_robot(const DogMount& m) {
  const auto physical_to_robot =
      mount_transform(m.offset, m.pitch_deg * M_PI / 180.0, FrameId::PhysicalDog, FrameId::RobotBase);
  return compose(physical_to_robot, optical_to_physical(Sensor::Dog));
}

/// Chest camera into the ground-referenced PhysicalHuman frame (mount height and pitch).
inline RigidTransform human_optical_to_physical(double chest_height, double pitch_deg) {
  const auto mount = mount_transform(Vec3(0.0, 0.0, chest_height), pitch_deg * M_PI / 180.0,
                                     FrameId::PhysicalHuman, FrameId::PhysicalHuman);
  return compose(mount, optical_to_physical(Sensor::Human));
}

/// Time-varying T_{P,human}^R from the simulated ground-truth poses.
inline RigidTransform human_physical_to_robot(const Pose2D& robot, const Pose2D& human) {
  const auto human_to_world = planar_transform(human, FrameId::PhysicalHuman, FrameId::World);
  return compose(invert(robot_to_world(robot)), human_to_world);
}

// ---------------------------------------------------------------------------
// Episode engine

struct TraceRow {
  double t = 0.0;
  Pose2D robot;
  Pose2D human;
  CommandSource source = CommandSource::Stop;
  int a = 0;
  VelocityCommand cmd;
  std::optional<double> min_roi_depth;
  std::string event;
};

inline std::string trace_header() {
  return "t,robot_x,robot_y,robot_theta,human_x,human_y,source,A,v_x,v_y,w_z,min_roi_depth,event\n";
}

inline std::string format_trace_row(const TraceRow& r) {
  return fmt::format("{:.2f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{},{},{:.4f},{:.4f},{:.4f},{},{}\n", r.t, r.robot.x,
                     r.robot.y, r.robot.theta, r.human.x, r.human.y, to_string(r.source), r.a, r.cmd.v_x, r.cmd.v_y,
                     r.cmd.w_z, r.min_roi_depth ? fmt::format("{:.3f}", *r.min_roi_depth) : std::string(),
                     r.event);
}

/// The obstacle layout an episode with this seed runs in: the jitter is the first
/// draw from the episode generator.
inline Scene episode_scene(const ScenarioConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return jitter_obstacles(cfg.scene, cfg.obstacle_jitter, rng);
}

struct EpisodeOptions {
  std::optional<std::filesystem::path> trace_path;
  Describer* describer = nullptr;  // defaults to the template describer
  bool write_announcements = true;
  // Captures the inflated robot costmap at the first planner tick at or after this time.
  std::optional<double> costmap_snapshot_time;
  // Called after every physics tick; used by tests to observe internals.
  std::function<void(const class Episode&)> observer;
};

class Episode {
 public:
  Episode(const ScenarioConfig& cfg, Condition condition, std::uint64_t seed)
      : cfg_(cfg),
        condition_(condition),
        rng_(seed),
        scene_(cfg.scene),
        tracker_(cfg.scene.obstacles.size(), cfg.sim.collision_debounce),
        human_branch_(cfg.human_branch.safety, cfg.arbiter.epsilon),
        walker_(cfg.walker),
        roi_(cfg.sentinel_roi()) {
    validate(cfg_);
    scene_ = jitter_obstacles(cfg.scene, cfg.obstacle_jitter, rng_);
    report_.condition = condition;
    report_.seed = seed;
    state_.rng_seed = seed;
    state_.robot_pose = scene_.start_robot;
    const Vec2 behind = scene_.start_robot.position() -
                        scene_.human.leash_length *
                            Vec2(std::cos(scene_.start_robot.theta), std::sin(scene_.start_robot.theta));
    state_.human_pose = {behind.x(), behind.y(), scene_.start_robot.theta};
    state_.trail = {behind, scene_.start_robot.position()};
    const auto& cm = cfg_.costmap;
    latest_costmap_ = make_costmap(cm.origin, cm.resolution, cm.width_cells(), cm.height_cells());
    dog_optical_to_robot_ = dog_optical_to_robot(cfg_.dog_mount);
  }

  /// Runs to termination; returns the report.
  EpisodeReport run(EpisodeOptions opts = {}) {
    TemplateDescriber fallback;
    AnnouncementPipeline announcements(opts.describer ? *opts.describer : fallback);
    pipeline_ = &announcements;
    std::string trace = trace_header();
    while (!done_) {
      advance(opts);
      trace += format_trace_row(last_row_);
      if (opts.observer) opts.observer(*this);
    }
    pipeline_ = nullptr;
    events_ = announcements.drain();
    report_.announcements = static_cast<int>(events_.size());
    if (opts.trace_path) {
      report_.trace_path = opts.trace_path->string();
      write_file(*opts.trace_path, trace);
      if (opts.write_announcements) {
        std::string log;
        for (const auto& e : events_) log += fmt::format("{:.2f}\t{:.3f}\t{}\n", e.stamp, e.min_depth, e.announcement);
        auto p = *opts.trace_path;
        p.replace_extension(".announcements.txt");
        write_file(p, log);
      }
    }
    return report_;
  }

  const WorldState& state() const { return state_; }
  const Scene& scene() const { return scene_; }
  const TraceRow& last_row() const { return last_row_; }
  const Costmap2D& latest_costmap() const { return latest_costmap_; }
  const std::optional<Costmap2D>& costmap_snapshot() const { return snapshot_; }
  const std::vector<HazardEvent>& hazard_events() const { return events_; }
  const std::vector<double>& sentinel_fires() const { return fires_; }
  const HumanBranch& human_branch() const { return human_branch_; }
  const std::optional<PointCloud>& last_chest_cloud() const { return last_chest_cloud_; }
  const std::optional<LabeledDepth>& last_chest_render() const { return last_chest_render_; }
  const std::optional<LabeledDepth>& last_robot_render() const { return last_robot_render_; }
  const EpisodeReport& report() const { return report_; }
  bool done() const { return done_; }

 private:
  static void write_file(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
  }

  // Rate-based schedule: fires when the k-th due time k/rate has been reached.
  struct Task {
    double rate = 1.0;
    std::uint64_t count = 0;
    bool due(double t) {
      if (t + 1e-9 < static_cast<double>(count) / rate) return false;
      ++count;
      return true;
    }
  };

  void advance(const EpisodeOptions& opts) {
    const double t = state_.time;
    last_row_ = TraceRow{};
    std::string events;
    auto add_event = [&events](const std::string& e) {
      if (!events.empty()) events += ';';
      events += e;
    };

    if (condition_ == Condition::Unassisted) {
      const bool contact = tracker_.human_in_contact();
      executed_ = walker_.command(state_.human_pose, scene_.goal, contact, t, cfg_.sim.dt, rng_);
      decision_a_ = 0;
    } else {
      if (robot_camera_.due(t)) sense_robot(t, opts, add_event);
      if (planner_.due(t)) plan(t);
      if (condition_ == Condition::CrossView && chest_camera_.due(t)) sense_human(t);
      if (arbiter_.due(t)) {
        const auto d = tick_decision(store_, t, cfg_.arbiter);
        executed_ = d.selected;
        decision_a_ = d.a;
      }
    }

    last_row_.source = executed_.source;
    last_row_.a = decision_a_;
    last_row_.cmd = executed_motion(executed_);
    last_row_.min_roi_depth = min_roi_depth_;

    // Physics.
    const double dt = cfg_.sim.dt;
    if (condition_ == Condition::Unassisted) {
      state_.human_pose = integrate_pose(state_.human_pose, executed_, dt);
      state_.human_pose.theta = wrap_angle(state_.human_pose.theta);
      state_.time = t + dt;
    } else {
      state_ = step(state_, executed_, dt, scene_);
    }
    ++ticks_;
    state_.time = static_cast<double>(ticks_) * dt;
    state_.human_bend = cfg_.bend.active(state_.time) ? Posture::Bent : Posture::Upright;

    for (const auto& ev : tracker_.update(state_, scene_, condition_ != Condition::Unassisted)) {
      const auto& ob = scene_.obstacles[ev.obstacle];
      if (ev.robot) {
        ++report_.robot_collisions;
        add_event("robot_collision:" + ob.id);
        continue;
      }
      ++report_.collisions_total;
      (ob.kind == ObstacleKind::Overhead ? report_.collisions_overhead : report_.collisions_ground)++;
      add_event(fmt::format("collision:{}:{}", ob.id, to_string(ob.kind)));
    }

    // Termination.
    const Vec2 agent = condition_ == Condition::Unassisted ? state_.human_pose.position() : state_.robot_pose.position();
    if ((agent - scene_.goal).norm() <= cfg_.sim.goal_tolerance) {
      finish(Outcome::Goal);
      add_event("goal");
    } else if (stalled_for_ > cfg_.planner.stall_time) {
      finish(Outcome::Stalled);
      add_event("stalled");
    } else if (state_.time >= cfg_.sim.timeout - 1e-9) {
      finish(Outcome::Timeout);
      add_event("timeout");
    }

    last_row_.t = state_.time;
    last_row_.robot = state_.robot_pose;
    last_row_.human = state_.human_pose;
    last_row_.event = std::move(events);
  }

  void finish(Outcome o) {
    done_ = true;
    report_.outcome = o;
    report_.completion_time = state_.time;
  }

  template <class AddEvent>
  void sense_robot(double t, const EpisodeOptions& opts, AddEvent&& add_event) {
    const auto optical_to_world = compose(robot_to_world(state_.robot_pose), dog_optical_to_robot_);
    auto ld = render_labeled(scene_, optical_to_world, cfg_.robot_camera.intrinsics(), t);
    add_depth_noise(ld.image, cfg_.robot_camera.noise_sigma, rng_);

    const auto cloud = transform_points(dog_optical_to_robot_, deproject(ld.image));
    const auto& cm = cfg_.costmap;
    const auto filtered = passthrough_filter(cloud, cm.passthrough_z_min, cm.passthrough_z_max);
    latest_costmap_ =
        inflate(build_costmap(filtered, cm.origin, cm.resolution, cm.width_cells(), cm.height_cells()),
                cm.inflation_radius);
    if (opts.costmap_snapshot_time && !snapshot_ && t + 1e-9 >= *opts.costmap_snapshot_time) {
      snapshot_ = latest_costmap_;
    }

    min_roi_depth_ = roi_min_depth(ld.image, roi_);
    if (cfg_.sentinel.enabled && check_trigger(min_roi_depth_, t, cfg_.sentinel, last_fire_)) {
      fires_.push_back(t);
      if (pipeline_) pipeline_->submit(t, *min_roi_depth_, summarize_visible(scene_, ld));
      add_event("sentinel");
    }
    last_robot_render_ = std::move(ld);
  }

  void plan(double t) {
    const auto world_to_robot = invert(robot_to_world(state_.robot_pose));
    const Vec3 goal = world_to_robot.apply(Vec3(scene_.goal.x(), scene_.goal.y(), 0.0));
    const ForceVector f = apf_force(Vec2::Zero(), goal.head<2>(), latest_costmap_, cfg_.planner.apf);
    apf_prev_ = admittance_map(f, cfg_.planner.apf, apf_prev_, t);
    store_.publish(apf_prev_);

    const bool near_goal = goal.head<2>().norm() <= cfg_.sim.goal_tolerance;
    if (f.norm() < cfg_.planner.stall_force && !near_goal) {
      stalled_for_ += 1.0 / cfg_.planner.rate_hz;
    } else {
      stalled_for_ = 0.0;
    }
  }

  void sense_human(double t) {
    const double pitch = chest_pitch_deg(t, cfg_.chest_mount, cfg_.bend);
    const auto optical_to_physical_h = human_optical_to_physical(scene_.human.chest_height, pitch);
    // T_O^R = T_P^R(t) · T_O^P, then into the world for rendering.
    const auto optical_to_robot =
        compose(human_physical_to_robot(state_.robot_pose, state_.human_pose), optical_to_physical_h);
    const auto optical_to_world = compose(robot_to_world(state_.robot_pose), optical_to_robot);
    auto ld = render_labeled(scene_, optical_to_world, cfg_.chest_camera.intrinsics(), t);
    add_depth_noise(ld.image, cfg_.chest_camera.noise_sigma, rng_);
    auto cloud = transform_points(optical_to_physical_h, deproject(ld.image));
    store_.publish(human_branch_.update(cloud, t));
    last_chest_cloud_ = std::move(cloud);
    last_chest_render_ = std::move(ld);
  }

  ScenarioConfig cfg_;
  Condition condition_;
  std::mt19937_64 rng_;
  Scene scene_;
  WorldState state_;
  CollisionTracker tracker_;
  HumanBranch human_branch_;
  UnassistedWalker walker_;
  RoiSpec roi_;
  RigidTransform dog_optical_to_robot_;
  CommandStore store_;
  Costmap2D latest_costmap_;
  std::optional<Costmap2D> snapshot_;
  VelocityCommand apf_prev_{0, 0, 0, 0, CommandSource::Apf, false};
  VelocityCommand executed_ = stop_command(0.0);
  int decision_a_ = 0;
  std::optional<double> min_roi_depth_;
  std::optional<double> last_fire_;
  std::vector<double> fires_;
  AnnouncementPipeline* pipeline_ = nullptr;
  std::vector<HazardEvent> events_;
  std::optional<PointCloud> last_chest_cloud_;
  std::optional<LabeledDepth> last_chest_render_;
  std::optional<LabeledDepth> last_robot_render_;
  double stalled_for_ = 0.0;
  std::uint64_t ticks_ = 0;
  bool done_ = false;
  TraceRow last_row_;
  EpisodeReport report_;

  Task robot_camera_{cfg_.robot_camera.rate_hz};
  Task planner_{cfg_.planner.rate_hz};
  Task chest_camera_{cfg_.chest_camera.rate_hz};
  Task arbiter_{cfg_.arbiter.tick_rate};
};

inline EpisodeReport run_episode(const ScenarioConfig& cfg, Condition condition, std::uint64_t seed,
                                 EpisodeOptions opts = {}) {
  Episode ep(cfg, condition, seed);
  return ep.run(std::move(opts));
}

}  // namespace coego
