#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coego/arbiter.hpp"
#include "coego/human_branch.hpp"

using namespace coego;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kEps = 0.01;

PointCloud human_cloud(std::vector<Vec3> pts) { return PointCloud{std::move(pts), FrameId::PhysicalHuman, 0.0}; }

HazardInfo hazard_at(double distance, double lateral) {
  return HazardInfo{Vec3(distance, lateral, 1.5), distance, lateral, 1.5};
}

}  // namespace

TEST_CASE("detect_hazard examples") {
  HumanSafetyParams p;
  p.d_safe = 1.0;
  p.corridor_half_width = 0.4;
  p.z_low = 0.3;
  p.z_high = 1.9;

  CHECK_FALSE(detect_hazard(human_cloud({}), p));

  const auto h = detect_hazard(human_cloud({Vec3(0.8, 0.1, 1.5)}), p);
  REQUIRE(h);
  CHECK(h->distance == 0.8);
  CHECK(h->lateral_offset == 0.1);
  CHECK(h->height == 1.5);
  CHECK(h->nearest_point == Vec3(0.8, 0.1, 1.5));

  CHECK_FALSE(detect_hazard(human_cloud({Vec3(0.8, 0.1, 2.5)}), p));
  CHECK_FALSE(detect_hazard(human_cloud({Vec3(0.8, 0.5, 1.5)}), p));
  CHECK_FALSE(detect_hazard(human_cloud({Vec3(-0.2, 0.0, 1.5)}), p));
  CHECK_FALSE(detect_hazard(human_cloud({Vec3(1.1, 0.0, 1.5)}), p));

  PointCloud wrong{{Vec3(0.8, 0.1, 1.5)}, FrameId::OpticalHuman, 0.0};
  CHECK_THROWS_AS(detect_hazard(wrong, p), FrameMismatch);
}

TEST_CASE("detect_hazard matches an exhaustive scan") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> ux(-0.5, 3.0), uy(-1.0, 1.0), uz(0.0, 2.5);
  HumanSafetyParams p;
  p.front_band = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    PointCloud c = human_cloud({});
    const int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) c.points.emplace_back(ux(rng), uy(rng), uz(rng));

    std::optional<Vec3> want;
    for (const auto& q : c.points) {
      const bool in = q.x() > 0 && std::abs(q.y()) <= p.corridor_half_width && q.z() >= p.z_low && q.z() <= p.z_high;
      if (in && (!want || q.x() < want->x())) want = q;
    }
    if (want && want->x() > p.d_safe) want.reset();

    const auto got = detect_hazard(c, p);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->nearest_point == *want);
      CHECK(got->distance == want->x());
      CHECK(got->lateral_offset == want->y());
      CHECK(got->distance >= 0.0);
    }
  }
}

TEST_CASE("lateral offset averages the hazard's front slice") {
  HumanSafetyParams p;
  // A flat face at x = 1.0 spanning y in [-0.1, 0.3]: nearest point is on the right,
  // but most of the face is to the left.
  const auto h = detect_hazard(human_cloud({Vec3(1.0, -0.1, 1.0), Vec3(1.0, 0.1, 1.0), Vec3(1.0, 0.3, 1.0),
                                            Vec3(1.5, -0.3, 1.0)}),
                               p);
  REQUIRE(h);
  CHECK_THAT(h->lateral_offset, WithinAbs(0.1, 1e-12));
}

TEST_CASE("reactive command") {
  HumanSafetyParams p;
  ReactiveState s;

  SECTION("no hazard while idle is an exact zero") {
    const auto c = reactive_command(std::nullopt, p, s, 0.0, kEps);
    CHECK(c.v_x == 0.0);
    CHECK(c.v_y == 0.0);
    CHECK(c.w_z == 0.0);
    CHECK(c.source == CommandSource::Human);
    CHECK(s.phase == ReactivePhase::Idle);
  }
  SECTION("hazard inside the brake distance overrides with a stop") {
    const auto c = reactive_command(hazard_at(0.4, 0.0), p, s, 0.0, kEps);
    CHECK(c.brake);
    CHECK(command_magnitude(c, 0.5) > kEps);
    ArbiterConfig cfg;
    VelocityCommand apf{0.5, 0, 0.2, 0.0, CommandSource::Apf};
    const auto d = arbitrate(apf, c, cfg);
    CHECK(d.a == 1);
    CHECK(d.selected.source == CommandSource::Human);
    const auto m = executed_motion(d.selected);
    CHECK(m.v_x == 0.0);
    CHECK(m.w_z == 0.0);
  }
  SECTION("hazard slightly left steers right and slows") {
    const auto c = reactive_command(hazard_at(0.8, 0.1), p, s, 0.0, kEps);
    CHECK(c.w_z < 0.0);
    CHECK(c.v_x > 0.0);
    CHECK(c.v_x < p.v_evade);
    CHECK_FALSE(c.brake);
  }
  SECTION("hazard on the right steers left") {
    CHECK(reactive_command(hazard_at(0.8, -0.1), p, s, 0.0, kEps).w_z > 0.0);
  }
  SECTION("speed scales with the remaining margin") {
    ReactiveState a, b;
    const double near = reactive_command(hazard_at(0.7, 0.1), p, a, 0.0, kEps).v_x;
    const double far = reactive_command(hazard_at(1.1, 0.1), p, b, 0.0, kEps).v_x;
    CHECK(near < far);
  }
}

TEST_CASE("evasion turns, holds, then recovers back to zero") {
  HumanSafetyParams p;
  ReactiveState s;
  const double dt = 1.0 / 15.0;
  double t = 0.0;
  double yaw = 0.0;
  std::vector<double> w;
  // Hazard on the left for 3 s, then clear.
  for (; t < 3.0; t += dt) {
    const auto c = reactive_command(hazard_at(0.9, 0.05), p, s, t, kEps);
    CHECK(c.w_z <= 0.0);
    w.push_back(c.w_z);
    yaw += c.w_z * dt;
  }
  CHECK(yaw >= -p.w_evade * p.recovery_duration - 1e-9);
  CHECK(w.back() == 0.0);  // turn capped, now holding heading
  for (; t < 8.0; t += dt) {
    const auto c = reactive_command(std::nullopt, p, s, t, kEps);
    CHECK(c.w_z >= 0.0);
    CHECK(c.v_x >= 0.0);
    w.push_back(c.w_z);
    yaw += c.w_z * dt;
  }
  CHECK_THAT(yaw, WithinAbs(0.0, 1e-9));
  CHECK(s.phase == ReactivePhase::Idle);
  CHECK(w.back() == 0.0);
  // Exactly one negative run followed by one positive run.
  int runs = 0;
  int prev = 0;
  for (double x : w) {
    const int sign = (x > 1e-12) - (x < -1e-12);
    if (sign != 0 && sign != prev) ++runs;
    if (sign != 0) prev = sign;
  }
  CHECK(runs == 2);
}

TEST_CASE("evasion sign is opposite the lateral offset") {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> d(0.51, 1.2), y(-0.35, 0.35);
  HumanSafetyParams p;
  for (int i = 0; i < 500; ++i) {
    ReactiveState s;
    const double lat = y(rng);
    if (lat == 0.0) continue;
    const auto c = reactive_command(hazard_at(d(rng), lat), p, s, 0.0, kEps);
    CHECK((c.w_z > 0) == (lat < 0));
    CHECK(c.v_x >= 0.0);
  }
}

TEST_CASE("hysteresis keeps a hazard until it clears by the margin") {
  HumanSafetyParams p;
  HumanBranch hb(p, kEps);
  const auto at = [](double x, double y) { return PointCloud{{Vec3(x, y, 1.0)}, FrameId::PhysicalHuman, 0.0}; };
  hb.update(at(1.0, 0.0), 0.0);
  CHECK(hb.state().phase == ReactivePhase::Evading);
  hb.update(at(1.3, 0.0), 0.1);  // beyond d_safe, within d_safe + hysteresis
  CHECK(hb.state().phase == ReactivePhase::Evading);
  hb.update(at(1.0, 0.5), 0.2);  // beyond half-width, within half-width + hysteresis
  CHECK(hb.state().phase == ReactivePhase::Evading);
  hb.update(at(1.5, 0.0), 0.3);
  CHECK(hb.state().phase != ReactivePhase::Evading);
}

TEST_CASE("parameter validity") {
  HumanSafetyParams p;
  CHECK(p.is_valid());
  p.d_brake = p.d_safe;
  CHECK_FALSE(p.is_valid());
  p = {};
  p.z_low = p.z_high;
  CHECK_FALSE(p.is_valid());
}
