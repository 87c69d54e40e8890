#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "coego/command.hpp"
#include "coego/geometry.hpp"

namespace coego {

/// Nearest in-corridor point ahead of the user, in PhysicalHuman
/// (ground-referenced: x along the walking heading, y left, z up from the floor).
struct HazardInfo {
  Vec3 nearest_point = Vec3::Zero();
  double distance = 0.0;
  double lateral_offset = 0.0;  // mean y of the hazard's front slice
  double height = 0.0;
};

struct HumanSafetyParams {
  double corridor_half_width = 0.35;
  double z_low = 0.30;
  double z_high = 1.90;
  double d_safe = 1.2;
  double d_brake = 0.5;
  double v_evade = 0.3;
  double w_evade = 0.8;  // rad/s, turn rate while evading or recovering
  double release_hysteresis = 0.2;
  double recovery_duration = 1.0;
  double front_band = 0.1;  // m, depth slice averaged for the hazard's lateral offset

  bool is_valid() const {
    return corridor_half_width > 0 && z_low < z_high && d_brake > 0 && d_brake < d_safe && v_evade > 0 &&
           w_evade > 0 && release_hysteresis >= 0 && recovery_duration >= 0 &&
           front_band >= 0;
  }
};

/// Minimum-x point among those with x > 0, |y| <= half_width and z in [z_low, z_high],
/// reported only when its x does not exceed `range`. The lateral offset is the mean y
/// of the in-corridor points within `front_band` of that x, so a flat face reports
/// the side it mostly occupies.
inline std::optional<HazardInfo> detect_hazard(const PointCloud& cloud, const HumanSafetyParams& p, double range,
                                               double half_width) {
  if (cloud.frame != FrameId::PhysicalHuman) {
    throw FrameMismatch("detect_hazard: cloud must be in PhysicalHuman, got " + std::string(to_string(cloud.frame)));
  }
  auto inside = [&](const Vec3& q) {
    return q.x() > 0.0 && std::abs(q.y()) <= half_width && q.z() >= p.z_low && q.z() <= p.z_high;
  };
  const Vec3* best = nullptr;
  for (const auto& q : cloud.points) {
    if (inside(q) && (!best || q.x() < best->x())) best = &q;
  }
  if (!best || best->x() > range) return std::nullopt;
  double sum_y = 0.0;
  int n = 0;
  for (const auto& q : cloud.points) {
    if (inside(q) && q.x() <= best->x() + p.front_band) {
      sum_y += q.y();
      ++n;
    }
  }
  return HazardInfo{*best, best->x(), sum_y / n, best->z()};
}

inline std::optional<HazardInfo> detect_hazard(const PointCloud& cloud, const HumanSafetyParams& p) {
  return detect_hazard(cloud, p, p.d_safe, p.corridor_half_width);
}

enum class ReactivePhase { Idle, Evading, Braking, Recovering };

struct ReactiveState {
  ReactivePhase phase = ReactivePhase::Idle;
  double yaw_accum = 0.0;  // net heading change commanded since the evasion began
  double last_w = 0.0;     // turn rate issued at the previous update
  double last_update = 0.0;
  double recovery_until = 0.0;
};

/// Evade-or-brake law. Evasion turns away from the hazard's side at w_evade,
/// up to w_evade·recovery_duration of accumulated yaw, while creeping forward
/// at a speed proportional to the remaining margin; recovery turns back by the
/// accumulated yaw. `h` must come from the detector at the thresholds given by
/// `release_threshold` for the current state. `epsilon` is the arbiter deadband,
/// used only to encode braking.
inline VelocityCommand reactive_command(const std::optional<HazardInfo>& h, const HumanSafetyParams& p,
                                        ReactiveState& state, double now, double epsilon) {
  VelocityCommand cmd;
  cmd.stamp = now;
  cmd.source = CommandSource::Human;
  const double dt = std::max(0.0, now - state.last_update);
  if (state.phase != ReactivePhase::Idle) state.yaw_accum += state.last_w * dt;
  state.last_update = now;
  state.last_w = 0.0;
  // Turn-rate limit so the next interval (assumed as long as the last) does not overshoot `remaining`.
  auto limited = [&](double remaining) { return std::min(p.w_evade, std::max(0.0, remaining) / std::max(dt, 1e-3)); };

  if (h) {
    if (state.phase == ReactivePhase::Idle) state.yaw_accum = 0.0;
    if (h->distance <= p.d_brake) {
      state.phase = ReactivePhase::Braking;
      cmd.v_x = 2.0 * epsilon;
      cmd.brake = true;
      return cmd;
    }
    const double sign = h->lateral_offset >= 0.0 ? -1.0 : 1.0;
    const double margin = std::clamp((h->distance - p.d_brake) / (p.d_safe - p.d_brake), 0.0, 1.0);
    state.phase = ReactivePhase::Evading;
    cmd.w_z = sign * limited(p.w_evade * p.recovery_duration - sign * state.yaw_accum);
    cmd.v_x = p.v_evade * margin;
    state.last_w = cmd.w_z;
    return cmd;
  }

  if (state.phase == ReactivePhase::Evading || state.phase == ReactivePhase::Braking) {
    state.phase = ReactivePhase::Recovering;
    state.recovery_until = now + std::abs(state.yaw_accum) / p.w_evade;
  }
  if (state.phase == ReactivePhase::Recovering) {
    const double back = state.yaw_accum > 0.0 ? -1.0 : 1.0;
    const double w = limited(std::abs(state.yaw_accum));
    if (now < state.recovery_until && w > 1e-6) {
      cmd.w_z = back * w;
      cmd.v_x = p.v_evade;
      state.last_w = cmd.w_z;
      return cmd;
    }
    state = {};
    state.last_update = now;
  }
  return cmd;
}

/// Detection range and corridor in effect for the current phase: a hazard
/// being acted on is released only once it clears by the hysteresis margin.
inline std::pair<double, double> release_threshold(const ReactiveState& s, const HumanSafetyParams& p) {
  if (s.phase == ReactivePhase::Evading || s.phase == ReactivePhase::Braking) {
    return {p.d_safe + p.release_hysteresis, p.corridor_half_width + p.release_hysteresis};
  }
  return {p.d_safe, p.corridor_half_width};
}

/// The wearable branch: detector plus the reactive state machine.
class HumanBranch {
 public:
  HumanBranch(HumanSafetyParams params, double epsilon) : params_(params), epsilon_(epsilon) {}

  VelocityCommand update(const PointCloud& cloud_physical_human, double now) {
    const auto [range, half_width] = release_threshold(state_, params_);
    last_hazard_ = detect_hazard(cloud_physical_human, params_, range, half_width);
    return reactive_command(last_hazard_, params_, state_, now, epsilon_);
  }

  const ReactiveState& state() const { return state_; }
  const std::optional<HazardInfo>& last_hazard() const { return last_hazard_; }

 private:
  HumanSafetyParams params_;
  double epsilon_;
  ReactiveState state_;
  std::optional<HazardInfo> last_hazard_;
};

}  // namespace coego
