#pragma once

#include <cmath>
#include <mutex>
#include <optional>

#include "coego/command.hpp"

namespace coego {

struct ArbiterConfig {
  double epsilon = 0.01;               // deadband, m/s
  double staleness_timeout = 0.5;      // s
  double tick_rate = 20.0;             // Hz
  double characteristic_length = 0.5;  // m, scales w_z into the norm

  bool is_valid() const { return epsilon > 0 && staleness_timeout > 0 && tick_rate > 0 && characteristic_length > 0; }
};

struct ArbitrationDecision {
  int a = 0;
  VelocityCommand selected;
  double stamp = 0.0;
};

/// ‖(v_x, v_y, L·w_z)‖: the magnitude tested against the deadband.
inline double command_magnitude(const VelocityCommand& c, double characteristic_length) {
  const double w = characteristic_length * c.w_z;
  return std::sqrt(c.v_x * c.v_x + c.v_y * c.v_y + w * w);
}

/// A = 1 iff ‖v_human‖ > ε; v_cmd = A·v_human + (1 − A)·v_apf, realised as a selection.
inline ArbitrationDecision arbitrate(const VelocityCommand& v_apf, const VelocityCommand& v_human,
                                     const ArbiterConfig& cfg) {
  ArbitrationDecision d;
  d.a = command_magnitude(v_human, cfg.characteristic_length) > cfg.epsilon ? 1 : 0;
  d.selected = d.a == 1 ? v_human : v_apf;
  d.stamp = d.selected.stamp;
  return d;
}

/// Keep-last-1 store for the two branch channels. Safe for concurrent publishers and readers.
class CommandStore {
 public:
  void publish(const VelocityCommand& c) {
    std::lock_guard lock(mutex_);
    (c.source == CommandSource::Human ? human_ : apf_) = c;
  }

  std::optional<VelocityCommand> latest(CommandSource s) const {
    std::lock_guard lock(mutex_);
    return s == CommandSource::Human ? human_ : apf_;
  }

  std::pair<std::optional<VelocityCommand>, std::optional<VelocityCommand>> snapshot() const {
    std::lock_guard lock(mutex_);
    return {apf_, human_};
  }

 private:
  mutable std::mutex mutex_;
  std::optional<VelocityCommand> apf_;
  std::optional<VelocityCommand> human_;
};

inline bool is_fresh(const std::optional<VelocityCommand>& c, double now, const ArbiterConfig& cfg) {
  return c && now - c->stamp <= cfg.staleness_timeout;
}

/// One arbiter tick over the newest value of each branch. Stale or absent
/// branches are ignored; with nothing usable the output is a stop.
inline ArbitrationDecision tick_decision(const CommandStore& store, double now, const ArbiterConfig& cfg) {
  const auto [apf, human] = store.snapshot();
  const bool apf_ok = is_fresh(apf, now, cfg);
  const bool human_ok = is_fresh(human, now, cfg);

  ArbitrationDecision d;
  d.stamp = now;
  if (human_ok && command_magnitude(*human, cfg.characteristic_length) > cfg.epsilon) {
    d.a = 1;
    d.selected = *human;
  } else if (apf_ok) {
    d.a = 0;
    d.selected = *apf;
  } else {
    d.a = 0;
    d.selected = stop_command(now);
  }
  d.selected.stamp = now;
  return d;
}

inline VelocityCommand tick(const CommandStore& store, double now, const ArbiterConfig& cfg) {
  return tick_decision(store, now, cfg).selected;
}

}  // namespace coego
