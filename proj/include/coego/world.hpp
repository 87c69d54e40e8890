#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coego/geometry.hpp"

namespace coego {

enum class ObstacleShape { AxisAlignedBox, VerticalCylinder };
enum class ObstacleKind { Ground, Overhead };

inline std::string_view to_string(ObstacleKind k) { return k == ObstacleKind::Ground ? "ground" : "overhead"; }

/// Extruded primitive in the world frame. Boxes use `half_extent`, cylinders use `radius`.
struct Obstacle {
  std::string id;
  ObstacleShape shape = ObstacleShape::AxisAlignedBox;
  Vec2 center = Vec2::Zero();
  Vec2 half_extent = Vec2::Zero();
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  ObstacleKind kind = ObstacleKind::Ground;

  // Planar distance from p to the footprint; zero inside.
  double footprint_distance(const Vec2& p) const {
    if (shape == ObstacleShape::VerticalCylinder) return std::max(0.0, (p - center).norm() - radius);
    const Vec2 d = ((p - center).cwiseAbs() - half_extent).cwiseMax(0.0);
    return d.norm();
  }

  bool contains_xy(const Vec2& p) const { return footprint_distance(p) <= 0.0; }

  bool overlaps_height(double lo, double hi) const { return z_min < hi && z_max > lo; }
};

struct CorridorBounds {
  Vec2 min = Vec2(0.0, -1.5);
  Vec2 max = Vec2(12.0, 1.5);

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

struct HumanParams {
  double leash_length = 0.7;  // arc length along the robot's trail
  double chest_height = 1.30;
  double body_radius = 0.25;
  double head_height = 1.75;
};

struct RobotBody {
  double radius = 0.30;
  double height = 0.40;
};

struct Scene {
  std::vector<Obstacle> obstacles;
  Pose2D start_robot{1.5, 0.0, 0.0};
  Vec2 goal = Vec2(11.5, 0.0);
  CorridorBounds corridor;
  HumanParams human;
  RobotBody robot;
};

/// Pinhole intrinsics shared by rendering and deprojection.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double max_range = 5.0;

  static CameraIntrinsics from_fov(int width, int height, double hfov_rad, double max_range) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = (width / 2.0) / std::tan(hfov_rad / 2.0);
    k.fy = k.fx;
    k.cx = width / 2.0;
    k.cy = height / 2.0;
    k.max_range = max_range;
    return k;
  }

  bool is_valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height && max_range > 0;
  }
};

inline bool valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

/// Row-major depth raster in an optical frame. 0 or NaN marks an invalid pixel.
struct DepthImage {
  CameraIntrinsics intrinsics;
  std::vector<double> depth;
  FrameId frame = FrameId::OpticalDog;
  double stamp = 0.0;

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * intrinsics.width + u]; }
  double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * intrinsics.width + u]; }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), valid_depth));
  }
};

namespace detail {

inline constexpr double kRayEpsilon = 1e-9;

inline std::optional<double> intersect_box(const Obstacle& ob, const Vec3& o, const Vec3& d) {
  const Vec3 lo(ob.center.x() - ob.half_extent.x(), ob.center.y() - ob.half_extent.y(), ob.z_min);
  const Vec3 hi(ob.center.x() + ob.half_extent.x(), ob.center.y() + ob.half_extent.y(), ob.z_max);
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < lo[i] || o[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t1 = (lo[i] - o[i]) / d[i];
    double t2 = (hi[i] - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near <= kRayEpsilon) return std::nullopt;  // origin inside or behind
  return t_near;
}

inline std::optional<double> intersect_cylinder(const Obstacle& ob, const Vec3& o, const Vec3& d) {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > kRayEpsilon && (!best || t < *best)) best = t;
  };
  // Lateral surface.
  const Vec2 oc(o.x() - ob.center.x(), o.y() - ob.center.y());
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (oc.x() * d.x() + oc.y() * d.y());
    const double c = oc.squaredNorm() - ob.radius * ob.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = o.z() + t * d.z();
      if (z >= ob.z_min && z <= ob.z_max) consider(t);
    }
  }
  // Caps.
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {ob.z_min, ob.z_max}) {
      const double t = (zc - o.z()) / d.z();
      const Vec2 p(o.x() + t * d.x() - ob.center.x(), o.y() + t * d.y() - ob.center.y());
      if (p.squaredNorm() <= ob.radius * ob.radius) consider(t);
    }
  }
  return best;
}

}  // namespace detail

/// Ray parameter of the first hit along o + t·d, if any.
inline std::optional<double> intersect(const Obstacle& ob, const Vec3& o, const Vec3& d) {
  return ob.shape == ObstacleShape::AxisAlignedBox ? detail::intersect_box(ob, o, d)
                                                    : detail::intersect_cylinder(ob, o, d);
}

/// Depth image plus, per pixel, the index of the obstacle that produced the hit (-1 if none).
struct LabeledDepth {
  DepthImage image;
  std::vector<int> labels;
};

inline LabeledDepth render_labeled(const Scene& scene, const RigidTransform& camera_pose_world,
                                   const CameraIntrinsics& intr, double stamp = 0.0) {
  if (camera_pose_world.to != FrameId::World ||
      (camera_pose_world.from != FrameId::OpticalDog && camera_pose_world.from != FrameId::OpticalHuman)) {
    throw FrameMismatch("render_depth: camera pose must map an optical frame to World");
  }
  LabeledDepth out;
  out.image.intrinsics = intr;
  out.image.frame = camera_pose_world.from;
  out.image.stamp = stamp;
  const auto n = static_cast<std::size_t>(intr.width) * intr.height;
  out.image.depth.assign(n, 0.0);
  out.labels.assign(n, -1);

  const Vec3 origin = camera_pose_world.translation;
  const Mat3& rot = camera_pose_world.rotation;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      // Optical ray with unit z, so the ray parameter is the optical depth.
      const Vec3 ray((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      const Vec3 dir = rot * ray;
      double best = std::numeric_limits<double>::infinity();
      int label = -1;
      for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
        if (auto t = intersect(scene.obstacles[i], origin, dir); t && *t < best) {
          best = *t;
          label = static_cast<int>(i);
        }
      }
      if (label >= 0 && best <= intr.max_range) {
        const auto idx = static_cast<std::size_t>(v) * intr.width + u;
        out.image.depth[idx] = best;
        out.labels[idx] = label;
      }
    }
  }
  return out;
}

inline DepthImage render_depth(const Scene& scene, const RigidTransform& camera_pose_world,
                               const CameraIntrinsics& intr, double stamp = 0.0) {
  return render_labeled(scene, camera_pose_world, intr, stamp).image;
}

/// Zero-mean Gaussian depth noise on valid pixels; results leaving (0, max_range] become invalid.
template <class Rng>
void add_depth_noise(DepthImage& img, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& d : img.depth) {
    if (!valid_depth(d)) continue;
    d += noise(rng);
    if (d <= 0.0 || d > img.intrinsics.max_range) d = 0.0;
  }
}

inline PointCloud deproject(const DepthImage& img) {
  PointCloud cloud;
  cloud.frame = img.frame;
  cloud.stamp = img.stamp;
  const auto& k = img.intrinsics;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double d = img.at(u, v);
      if (!valid_depth(d)) continue;
      cloud.points.emplace_back(d * (u - k.cx) / k.fx, d * (v - k.cy) / k.fy, d);
    }
  }
  return cloud;
}

/// Same as deproject, carrying each point's obstacle label along.
inline std::pair<PointCloud, std::vector<int>> deproject_labeled(const LabeledDepth& ld) {
  PointCloud cloud;
  std::vector<int> labels;
  const auto& img = ld.image;
  cloud.frame = img.frame;
  cloud.stamp = img.stamp;
  const auto& k = img.intrinsics;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double d = img.at(u, v);
      if (!valid_depth(d)) continue;
      cloud.points.emplace_back(d * (u - k.cx) / k.fx, d * (v - k.cy) / k.fy, d);
      labels.push_back(ld.labels[static_cast<std::size_t>(v) * k.width + u]);
    }
  }
  return {std::move(cloud), std::move(labels)};
}

/// Per-episode obstacle randomization: each obstacle centre shifts uniformly within ±jitter.
template <class Rng>
Scene jitter_obstacles(Scene scene, const Vec2& jitter, Rng& rng) {
  if (jitter.x() <= 0.0 && jitter.y() <= 0.0) return scene;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& ob : scene.obstacles) {
    const double dx = unit(rng) * jitter.x();
    const double dy = unit(rng) * jitter.y();
    ob.center += Vec2(dx, dy);
  }
  return scene;
}

}  // namespace coego
