#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "coego/errors.hpp"

namespace coego {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class FrameId { World, RobotBase, PhysicalDog, OpticalDog, PhysicalHuman, OpticalHuman };

inline std::string_view to_string(FrameId f) {
  switch (f) {
    case FrameId::World: return "World";
    case FrameId::RobotBase: return "RobotBase";
    case FrameId::PhysicalDog: return "PhysicalDog";
    case FrameId::OpticalDog: return "OpticalDog";
    case FrameId::PhysicalHuman: return "PhysicalHuman";
    case FrameId::OpticalHuman: return "OpticalHuman";
  }
  return "?";
}

// Sensor index k of the two camera chains.
enum class Sensor { Dog, Human };

inline constexpr double kRotationTolerance = 1e-9;

// Planar pose in the world frame.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
};

inline double wrap_angle(double a) {
  return std::atan2(std::sin(a), std::cos(a));
}

inline Mat3 rot_z(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

// Positive pitch tilts +x toward -z (nose down) in a z-up frame.
inline Mat3 rot_y(double pitch) {
  return Eigen::AngleAxisd(pitch, Vec3::UnitY()).toRotationMatrix();
}

inline bool is_rotation(const Mat3& r, double tol = kRotationTolerance) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// Rigid SE(3) transform mapping coordinates expressed in `from` to `to`:
/// p_to = rotation * p_from + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  FrameId from = FrameId::World;
  FrameId to = FrameId::World;
  std::optional<double> stamp;

  static RigidTransform identity(FrameId frame) { return {Mat3::Identity(), Vec3::Zero(), frame, frame, {}}; }

  static RigidTransform make(const Mat3& r, const Vec3& t, FrameId from, FrameId to,
                             std::optional<double> stamp = {}) {
    if (!is_rotation(r)) {
      throw std::invalid_argument("RigidTransform: rotation is not orthonormal with det +1");
    }
    return {r, t, from, to, stamp};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  bool is_valid(double tol = kRotationTolerance) const { return is_rotation(rotation, tol); }
};

/// Point set tagged with the frame its coordinates are expressed in.
struct PointCloud {
  std::vector<Vec3> points;
  FrameId frame = FrameId::World;
  double stamp = 0.0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// a ∘ b: first b, then a. Requires a.from == b.to.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  if (a.from != b.to) {
    throw FrameMismatch("compose: cannot chain " + std::string(to_string(b.from)) + "->" +
                        std::string(to_string(b.to)) + " into " + std::string(to_string(a.from)) +
                        "->" + std::string(to_string(a.to)));
  }
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  out.from = b.from;
  out.to = a.to;
  out.stamp = a.stamp ? a.stamp : b.stamp;
  return out;
}

inline RigidTransform invert(const RigidTransform& t) {
  RigidTransform out;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.rotation * t.translation);
  out.from = t.to;
  out.to = t.from;
  out.stamp = t.stamp;
  return out;
}

inline FrameId optical_frame(Sensor k) { return k == Sensor::Dog ? FrameId::OpticalDog : FrameId::OpticalHuman; }
inline FrameId physical_frame(Sensor k) { return k == Sensor::Dog ? FrameId::PhysicalDog : FrameId::PhysicalHuman; }

/// Fixed optical→physical convention: optical (x right, y down, z forward)
/// onto physical (x forward, y left, z up).
inline RigidTransform optical_to_physical(Sensor k = Sensor::Dog) {
  Mat3 r;
  r << 0.0, 0.0, 1.0,
      -1.0, 0.0, 0.0,
       0.0, -1.0, 0.0;
  return {r, Vec3::Zero(), optical_frame(k), physical_frame(k), {}};
}

inline PointCloud transform_points(const RigidTransform& t, const PointCloud& cloud) {
  if (cloud.frame != t.from) {
    throw FrameMismatch("transform_points: cloud in " + std::string(to_string(cloud.frame)) +
                        ", transform expects " + std::string(to_string(t.from)));
  }
  PointCloud out;
  out.frame = t.to;
  out.stamp = cloud.stamp;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  return out;
}

// Planar pose lifted to SE(3) about the z axis.
inline RigidTransform planar_transform(const Pose2D& pose, FrameId from, FrameId to, double z = 0.0) {
  return {rot_z(pose.theta), Vec3(pose.x, pose.y, z), from, to, {}};
}

/// Mount of a sensor's physical frame on its carrier: offset plus yaw then pitch.
inline RigidTransform mount_transform(const Vec3& offset, double pitch, FrameId from, FrameId to,
                                      double yaw = 0.0) {
  return {rot_z(yaw) * rot_y(pitch), offset, from, to, {}};
}

}  // namespace coego
