#pragma once

#include <cmath>
#include <string_view>

namespace coego {

// Apf and Human are the two arbitrated branches; Stop is the fail-safe output
// when neither is fresh; Walker drives the unassisted baseline.
enum class CommandSource { Apf, Human, Stop, Walker };

inline std::string_view to_string(CommandSource s) {
  switch (s) {
    case CommandSource::Apf: return "apf";
    case CommandSource::Human: return "human";
    case CommandSource::Stop: return "stop";
    case CommandSource::Walker: return "walker";
  }
  return "?";
}

/// Body-frame twist (v_x forward, v_y left, w_z counter-clockwise).
struct VelocityCommand {
  double v_x = 0.0;
  double v_y = 0.0;
  double w_z = 0.0;
  double stamp = 0.0;
  CommandSource source = CommandSource::Apf;
  // Active braking: the command carries a small non-zero v_x so it wins
  // arbitration, and the executor must apply zero velocity instead.
  bool brake = false;

  bool same_motion(const VelocityCommand& o) const {
    return v_x == o.v_x && v_y == o.v_y && w_z == o.w_z && brake == o.brake;
  }

  bool operator==(const VelocityCommand&) const = default;
};

inline VelocityCommand stop_command(double stamp) {
  return {0.0, 0.0, 0.0, stamp, CommandSource::Stop, false};
}

/// What the locomotion controller actually applies.
inline VelocityCommand executed_motion(const VelocityCommand& c) {
  if (!c.brake) return c;
  VelocityCommand out = c;
  out.v_x = out.v_y = out.w_z = 0.0;
  return out;
}

}  // namespace coego
