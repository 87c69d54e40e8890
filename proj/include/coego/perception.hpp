#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "coego/geometry.hpp"

namespace coego {

enum class Cell : std::uint8_t { Free, Occupied, Inflated };

// Slack on "within r_inf" so cell-centre distances that equal the radius
// up to rounding still count.
inline constexpr double kInflationSlack = 1e-9;

/// Robot-centric occupancy grid; cell (i, j) spans
/// [ox + i·res, ox + (i+1)·res) × [oy + j·res, oy + (j+1)·res).
struct Costmap2D {
  Vec2 origin = Vec2::Zero();
  double resolution = 0.05;
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;

  Cell at(int i, int j) const { return cells[index(i, j)]; }
  Cell& at(int i, int j) { return cells[index(i, j)]; }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width && j < height; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * width + i; }

  Vec2 cell_center(int i, int j) const {
    return {origin.x() + (i + 0.5) * resolution, origin.y() + (j + 0.5) * resolution};
  }

  std::size_t count(Cell c) const {
    std::size_t n = 0;
    for (auto x : cells) n += (x == c);
    return n;
  }

  bool operator==(const Costmap2D& o) const {
    return origin == o.origin && resolution == o.resolution && width == o.width && height == o.height &&
           cells == o.cells;
  }
};

inline Costmap2D make_costmap(const Vec2& origin, double resolution, int width, int height) {
  if (!(resolution > 0.0)) throw InvalidGrid("costmap resolution must be > 0");
  if (width <= 0 || height <= 0) throw InvalidGrid("costmap width and height must be > 0");
  Costmap2D map;
  map.origin = origin;
  map.resolution = resolution;
  map.width = width;
  map.height = height;
  map.cells.assign(static_cast<std::size_t>(width) * height, Cell::Free);
  return map;
}

/// Keeps points with z_min <= z <= z_max, in order.
inline PointCloud passthrough_filter(const PointCloud& cloud, double z_min, double z_max) {
  if (cloud.frame != FrameId::RobotBase) {
    throw FrameMismatch("passthrough_filter: cloud must be in RobotBase, got " +
                        std::string(to_string(cloud.frame)));
  }
  PointCloud out;
  out.frame = cloud.frame;
  out.stamp = cloud.stamp;
  for (const auto& p : cloud.points) {
    if (p.z() >= z_min && p.z() <= z_max) out.points.push_back(p);
  }
  return out;
}

inline Costmap2D build_costmap(const PointCloud& cloud, const Vec2& origin, double resolution, int width,
                               int height) {
  if (cloud.frame != FrameId::RobotBase) {
    throw FrameMismatch("build_costmap: cloud must be in RobotBase");
  }
  Costmap2D map = make_costmap(origin, resolution, width, height);
  for (const auto& p : cloud.points) {
    const auto i = static_cast<long>(std::floor((p.x() - origin.x()) / resolution));
    const auto j = static_cast<long>(std::floor((p.y() - origin.y()) / resolution));
    if (i < 0 || j < 0 || i >= width || j >= height) continue;
    map.at(static_cast<int>(i), static_cast<int>(j)) = Cell::Occupied;
  }
  return map;
}

/// Marks every Free cell whose centre is within r_inf of an Occupied cell centre.
/// The disk is a precomputed offset kernel limited to ceil(r_inf/res) rings and
/// stamped around each Occupied cell.
inline Costmap2D inflate(const Costmap2D& map, double r_inf) {
  if (r_inf < 0.0) throw std::invalid_argument("inflate: r_inf must be >= 0");
  Costmap2D out = map;
  if (r_inf == 0.0) return out;

  const int rings = static_cast<int>(std::ceil(r_inf / map.resolution));
  std::vector<std::pair<int, int>> kernel;
  for (int dj = -rings; dj <= rings; ++dj) {
    for (int di = -rings; di <= rings; ++di) {
      if (di == 0 && dj == 0) continue;
      if (map.resolution * std::hypot(di, dj) <= r_inf + kInflationSlack) kernel.emplace_back(di, dj);
    }
  }
  for (int j = 0; j < map.height; ++j) {
    for (int i = 0; i < map.width; ++i) {
      if (map.at(i, j) != Cell::Occupied) continue;
      for (auto [di, dj] : kernel) {
        const int a = i + di;
        const int b = j + dj;
        if (out.in_bounds(a, b) && out.at(a, b) == Cell::Free) out.at(a, b) = Cell::Inflated;
      }
    }
  }
  return out;
}

/// One row per grid line, top row = highest y. '.' free, '#' occupied, '+' inflated.
inline std::string costmap_to_text(const Costmap2D& map) {
  std::string s;
  s.reserve(static_cast<std::size_t>(map.width + 1) * map.height);
  for (int j = map.height - 1; j >= 0; --j) {
    for (int i = 0; i < map.width; ++i) {
      const Cell c = map.at(i, j);
      s += c == Cell::Free ? '.' : (c == Cell::Occupied ? '#' : '+');
    }
    s += '\n';
  }
  return s;
}

/// Sparse CSV of non-free cells: i,j,x,y,state.
inline std::string costmap_to_csv(const Costmap2D& map) {
  std::string s = "i,j,x,y,state\n";
  char buf[96];
  for (int j = 0; j < map.height; ++j) {
    for (int i = 0; i < map.width; ++i) {
      const Cell c = map.at(i, j);
      if (c == Cell::Free) continue;
      const Vec2 p = map.cell_center(i, j);
      std::snprintf(buf, sizeof buf, "%d,%d,%.4f,%.4f,%s\n", i, j, p.x(), p.y(),
                    c == Cell::Occupied ? "occupied" : "inflated");
      s += buf;
    }
  }
  return s;
}

}  // namespace coego
