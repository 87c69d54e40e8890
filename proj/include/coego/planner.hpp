#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coego/command.hpp"
#include "coego/perception.hpp"

namespace coego {

struct ApfParams {
  double k_att = 1.0;            // force / m
  double k_rep = 0.05;           // force · m²
  double d0 = 1.0;               // repulsive influence radius, m
  double v_max = 0.6;            // m/s
  double w_max = 1.2;            // rad/s
  double admittance_gain = 0.5;  // (m/s) / force
  double yaw_gain = 1.0;         // rad/s per rad of force bearing
  double smoothing = 0.3;        // first-order blend toward the target, (0, 1]

  bool is_valid() const {
    return k_att > 0 && k_rep > 0 && d0 > 0 && v_max > 0 && w_max > 0 && admittance_gain > 0 && yaw_gain > 0 &&
           smoothing > 0 && smoothing <= 1.0;
  }
};

struct ForceVector {
  double fx = 0.0;
  double fy = 0.0;

  double norm() const { return std::hypot(fx, fy); }
  ForceVector operator+(const ForceVector& o) const { return {fx + o.fx, fy + o.fy}; }
};

// F = -∇(½·k_att·‖robot − goal‖²)
inline ForceVector attractive_force(const Vec2& robot, const Vec2& goal, double k_att) {
  return {k_att * (goal.x() - robot.x()), k_att * (goal.y() - robot.y())};
}

/// Distance used by the repulsive term; clamped below by res/2 at cell centres.
inline double repulsive_distance(double d, double resolution) { return std::max(d, 0.5 * resolution); }

/// Sum over non-free cells within d0 of k_rep·(1/d − 1/d0)/d² along (robot − cell)/d,
/// i.e. −∇ of ½·k_rep·(1/d − 1/d0)² per cell.
inline ForceVector repulsive_force(const Vec2& robot, const Costmap2D& map, double k_rep, double d0) {
  ForceVector f;
  if (map.width == 0 || map.height == 0) return f;
  const double res = map.resolution;
  // Only cells whose centres can lie within d0.
  const int i_lo = std::max(0, static_cast<int>(std::floor((robot.x() - d0 - map.origin.x()) / res)));
  const int i_hi = std::min(map.width - 1, static_cast<int>(std::floor((robot.x() + d0 - map.origin.x()) / res)));
  const int j_lo = std::max(0, static_cast<int>(std::floor((robot.y() - d0 - map.origin.y()) / res)));
  const int j_hi = std::min(map.height - 1, static_cast<int>(std::floor((robot.y() + d0 - map.origin.y()) / res)));
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      if (map.at(i, j) == Cell::Free) continue;
      const Vec2 diff = robot - map.cell_center(i, j);
      const double raw = diff.norm();
      if (raw >= d0) continue;
      const double d = repulsive_distance(raw, res);
      if (d >= d0) continue;
      const double mag = k_rep * (1.0 / d - 1.0 / d0) / (d * d);
      if (raw > 0.0) {
        f.fx += mag * diff.x() / raw;
        f.fy += mag * diff.y() / raw;
      }
    }
  }
  return f;
}

inline ForceVector apf_force(const Vec2& robot, const Vec2& goal, const Costmap2D& map, const ApfParams& p) {
  return attractive_force(robot, goal, p.k_att) + repulsive_force(robot, map, p.k_rep, p.d0);
}

/// Static-gain admittance with first-order smoothing. Heading is +x of the robot frame,
/// so the force must be expressed in RobotBase.
inline VelocityCommand admittance_map(const ForceVector& f, const ApfParams& p, const VelocityCommand& prev,
                                      double now) {
  if (!std::isfinite(f.fx) || !std::isfinite(f.fy)) throw std::invalid_argument("admittance_map: non-finite force");
  const double v_target = std::clamp(p.admittance_gain * f.fx, -p.v_max, p.v_max);
  const double bearing = (f.fx == 0.0 && f.fy == 0.0) ? 0.0 : std::atan2(f.fy, f.fx);
  const double w_target = std::clamp(p.yaw_gain * bearing, -p.w_max, p.w_max);

  VelocityCommand out;
  out.v_x = std::clamp(prev.v_x + p.smoothing * (v_target - prev.v_x), -p.v_max, p.v_max);
  out.v_y = 0.0;
  out.w_z = std::clamp(prev.w_z + p.smoothing * (w_target - prev.w_z), -p.w_max, p.w_max);
  out.stamp = now;
  out.source = CommandSource::Apf;
  return out;
}

}  // namespace coego
