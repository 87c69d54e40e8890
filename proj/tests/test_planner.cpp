#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coego/planner.hpp"
#include "coego/sim.hpp"

using namespace coego;
using Catch::Matchers::WithinAbs;

namespace {

Costmap2D single_cell_map(const Vec2& centre, double res = 0.1) {
  auto m = make_costmap(centre - Vec2(res / 2, res / 2), res, 1, 1);
  m.at(0, 0) = Cell::Occupied;
  return m;
}

// Reference potential written out independently of the force code.
double potential(const Vec2& r, const Vec2& goal, const Costmap2D& map, const ApfParams& p) {
  double u = 0.5 * p.k_att * (r - goal).squaredNorm();
  for (int j = 0; j < map.height; ++j) {
    for (int i = 0; i < map.width; ++i) {
      if (map.at(i, j) == Cell::Free) continue;
      const double d = std::max((r - map.cell_center(i, j)).norm(), map.resolution / 2);
      if (d < p.d0) u += 0.5 * p.k_rep * std::pow(1 / d - 1 / p.d0, 2);
    }
  }
  return u;
}

}  // namespace

TEST_CASE("attractive force") {
  const auto at_goal = attractive_force(Vec2(2, 3), Vec2(2, 3), 1.0);
  CHECK(at_goal.fx == 0.0);
  CHECK(at_goal.fy == 0.0);
  const auto f = attractive_force(Vec2(0, 0), Vec2(1, 0), 1.0);
  CHECK(f.fx == 1.0);
  CHECK(f.fy == 0.0);
  const auto a = attractive_force(Vec2(0.3, -1), Vec2(2, 5), 0.7);
  const auto b = attractive_force(Vec2(0.3, -1), Vec2(2, 5), 1.4);
  CHECK_THAT(b.fx, WithinAbs(2 * a.fx, 1e-12));
  CHECK_THAT(b.fy, WithinAbs(2 * a.fy, 1e-12));
}

TEST_CASE("repulsive force") {
  SECTION("empty map") {
    const auto f = repulsive_force(Vec2::Zero(), make_costmap(Vec2(-1, -1), 0.1, 20, 20), 1.0, 1.0);
    CHECK(f.fx == 0.0);
    CHECK(f.fy == 0.0);
  }
  SECTION("cell exactly at d0") {
    const auto f = repulsive_force(Vec2::Zero(), single_cell_map(Vec2(1.0, 0.0)), 1.0, 1.0);
    CHECK(f.fx == 0.0);
    CHECK(f.fy == 0.0);
  }
  SECTION("cell at d0/2 straight ahead") {
    // (1/0.5 - 1/1) / 0.5^2 = 4, pointing from the cell back to the robot.
    const auto f = repulsive_force(Vec2::Zero(), single_cell_map(Vec2(0.5, 0.0)), 1.0, 1.0);
    CHECK_THAT(f.fx, WithinAbs(-4.0, 1e-9));
    CHECK_THAT(f.fy, WithinAbs(0.0, 1e-12));
  }
  SECTION("inflated cells repel too") {
    auto m = single_cell_map(Vec2(0.5, 0.0));
    m.at(0, 0) = Cell::Inflated;
    CHECK(repulsive_force(Vec2::Zero(), m, 1.0, 1.0).fx < 0.0);
  }
}

TEST_CASE("repulsion points away from a single obstacle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const auto m = single_cell_map(Vec2(0.0, 0.0), 0.05);
  for (int i = 0; i < 500; ++i) {
    const Vec2 r(u(rng), u(rng));
    const auto f = repulsive_force(r, m, 0.05, 1.0);
    CHECK(f.fx * r.x() + f.fy * r.y() >= 0.0);
  }
}

TEST_CASE("apf force") {
  ApfParams p;
  const auto empty = make_costmap(Vec2(-2, -4), 0.05, 160, 160);
  const auto f = apf_force(Vec2(0.5, 0.2), Vec2(3, 1), empty, p);
  const auto a = attractive_force(Vec2(0.5, 0.2), Vec2(3, 1), p.k_att);
  CHECK(f.fx == a.fx);
  CHECK(f.fy == a.fy);
  const auto z = apf_force(Vec2(3, 1), Vec2(3, 1), empty, p);
  CHECK(z.norm() == 0.0);
}

TEST_CASE("apf force is the negative gradient of the summed potentials") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0), pos(-1.5, 1.5);
  const double h = 1e-5;
  int checked = 0;
  while (checked < 100) {
    ApfParams p;
    p.k_rep = 0.01 + 0.2 * u(rng);
    p.d0 = 0.5 + u(rng);
    auto map = make_costmap(Vec2(-2, -2), 0.1, 40, 40);
    for (auto& c : map.cells) c = u(rng) < 0.02 ? Cell::Occupied : Cell::Free;
    const Vec2 r(pos(rng), pos(rng)), goal(pos(rng), pos(rng));
    // Stay clear of the res/2 clamp kink, where the potential is not differentiable.
    bool near_kink = false;
    for (int j = 0; j < map.height; ++j)
      for (int i = 0; i < map.width; ++i)
        if (map.at(i, j) != Cell::Free && (r - map.cell_center(i, j)).norm() < map.resolution) near_kink = true;
    if (near_kink) continue;

    const auto f = apf_force(r, goal, map, p);
    const double gx = (potential(r + Vec2(h, 0), goal, map, p) - potential(r - Vec2(h, 0), goal, map, p)) / (2 * h);
    const double gy = (potential(r + Vec2(0, h), goal, map, p) - potential(r - Vec2(0, h), goal, map, p)) / (2 * h);
    const double scale = std::max(1.0, f.norm());
    CHECK(std::abs(f.fx + gx) / scale < 1e-4);
    CHECK(std::abs(f.fy + gy) / scale < 1e-4);
    ++checked;
  }
}

TEST_CASE("admittance map") {
  ApfParams p;
  const VelocityCommand zero{};

  SECTION("zero force and zero history") {
    const auto c = admittance_map({0, 0}, p, zero, 1.0);
    CHECK(c.v_x == 0.0);
    CHECK(c.w_z == 0.0);
    CHECK(c.source == CommandSource::Apf);
    CHECK(c.stamp == 1.0);
  }
  SECTION("force straight ahead") {
    const auto c = admittance_map({1, 0}, p, zero, 0.0);
    CHECK(c.w_z == 0.0);
    CHECK(c.v_x > 0.0);
    CHECK(c.v_y == 0.0);
  }
  SECTION("leftward force turns left, rightward turns right") {
    CHECK(admittance_map({1, 0.5}, p, zero, 0.0).w_z > 0.0);
    CHECK(admittance_map({1, -0.5}, p, zero, 0.0).w_z < 0.0);
  }
  SECTION("first-order smoothing") {
    // target v = 0.5 * 0.4 = 0.2; one step from 0 with alpha 0.3 gives 0.06.
    const auto c = admittance_map({0.4, 0}, p, zero, 0.0);
    CHECK_THAT(c.v_x, WithinAbs(0.06, 1e-12));
    const auto c2 = admittance_map({0.4, 0}, p, c, 0.1);
    CHECK_THAT(c2.v_x, WithinAbs(0.06 + 0.3 * (0.2 - 0.06), 1e-12));
  }
  SECTION("non-finite force") {
    CHECK_THROWS(admittance_map({std::nan(""), 0}, p, zero, 0.0));
    CHECK_THROWS(admittance_map({0, INFINITY}, p, zero, 0.0));
  }
}

TEST_CASE("admittance output always respects the clamps") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> f(-100, 100), v(-5, 5), a(0.01, 1.0);
  for (int i = 0; i < 2000; ++i) {
    ApfParams p;
    p.smoothing = a(rng);
    VelocityCommand prev;
    prev.v_x = v(rng);
    prev.w_z = v(rng);
    const auto c = admittance_map({f(rng), f(rng)}, p, prev, 0.0);
    CHECK(std::abs(c.v_x) <= p.v_max);
    CHECK(std::abs(c.v_y) <= p.v_max);
    CHECK(std::abs(c.w_z) <= p.w_max);
  }
}

TEST_CASE("closed loop reaches the goal on an empty map") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> ux(0.0, 12.0), uy(-1.5, 1.5), ut(-M_PI, M_PI);
  const ApfParams p;
  const Vec2 goal(11.5, 0.0);
  const auto empty = make_costmap(Vec2(-2, -4), 0.05, 160, 160);
  for (int trial = 0; trial < 20; ++trial) {
    Pose2D pose{ux(rng), uy(rng), ut(rng)};
    VelocityCommand cmd;
    const double dt = 0.1;
    double t = 0.0;
    for (; t < 120.0 && std::hypot(goal.x() - pose.x, goal.y() - pose.y) > 0.2; t += dt) {
      // Goal in the robot frame.
      const double c = std::cos(pose.theta), s = std::sin(pose.theta);
      const Vec2 d(goal.x() - pose.x, goal.y() - pose.y);
      const Vec2 local(c * d.x() + s * d.y(), -s * d.x() + c * d.y());
      cmd = admittance_map(apf_force(Vec2::Zero(), local, empty, p), p, cmd, t);
      pose = integrate_pose(pose, cmd, dt);
    }
    CHECK(t < 120.0);
  }
}
