#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "coego/world.hpp"

namespace coego {

/// Pixel window [u_min, u_max) × [v_min, v_max) on the robot depth image.
struct RoiSpec {
  int u_min = 0;
  int u_max = 0;
  int v_min = 0;
  int v_max = 0;

  bool fits(const CameraIntrinsics& k) const {
    return u_min >= 0 && v_min >= 0 && u_min < u_max && v_min < v_max && u_max <= k.width && v_max <= k.height;
  }

  // Central 40% of the width, from the horizon row down to 80% of the height.
  static RoiSpec forward_path(const CameraIntrinsics& k) {
    return {static_cast<int>(std::lround(0.3 * k.width)), static_cast<int>(std::lround(0.7 * k.width)),
            static_cast<int>(std::lround(k.cy)), static_cast<int>(std::lround(0.8 * k.height))};
  }
};

struct SentinelConfig {
  bool enabled = true;
  double d_crit = 1.2;
  double debounce = 3.0;
  std::optional<RoiSpec> roi;  // unset: RoiSpec::forward_path of the robot camera
};

struct SummaryEntry {
  std::string id;
  ObstacleKind kind = ObstacleKind::Ground;
  double bearing_deg = 0.0;  // + left of the robot heading
  double range = 0.0;        // m, planar distance from the robot camera
};

using SceneSummary = std::vector<SummaryEntry>;

struct HazardEvent {
  double stamp = 0.0;
  double min_depth = 0.0;
  SceneSummary scene_summary;
  std::string announcement;
};

inline constexpr const char* kHazardPrompt =
    "An obstacle is very close. Briefly describe what it is and its relative position.";

inline std::optional<double> roi_min_depth(const DepthImage& img, const RoiSpec& roi) {
  if (!roi.fits(img.intrinsics)) throw RoiOutOfBounds("roi_min_depth: ROI outside the image");
  std::optional<double> best;
  for (int v = roi.v_min; v < roi.v_max; ++v) {
    for (int u = roi.u_min; u < roi.u_max; ++u) {
      const double d = img.at(u, v);
      if (valid_depth(d) && (!best || d < *best)) best = d;
    }
  }
  return best;
}

/// Fires iff d_min < d_crit and the debounce window since the last fire has elapsed.
/// On firing, `last_fire` is updated to `now`.
inline bool check_trigger(std::optional<double> d_min, double now, const SentinelConfig& cfg,
                          std::optional<double>& last_fire) {
  if (!d_min || !(*d_min < cfg.d_crit)) return false;
  if (last_fire && now - *last_fire < cfg.debounce) return false;
  last_fire = now;
  return true;
}

/// Stand-in for the vision-language model: scene summary + prompt → text.
/// Implementations throw DescriberUnavailable when they cannot answer.
class Describer {
 public:
  virtual ~Describer() = default;
  virtual std::string describe(const SceneSummary& summary, double min_depth, const std::string& prompt) = 0;
};

inline std::string format_range(double metres) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", metres);
  return buf;
}

inline std::string bearing_word(double bearing_deg) {
  if (bearing_deg > 15.0) return "left";
  if (bearing_deg < -15.0) return "right";
  return "center";
}

/// "<kind> obstacle <id> ahead, <range> meters, <left|center|right>" for the nearest entry.
class TemplateDescriber final : public Describer {
 public:
  std::string describe(const SceneSummary& summary, double min_depth, const std::string&) override {
    if (summary.empty()) return "obstacle ahead, " + format_range(min_depth) + " meters";
    const auto& e = *std::min_element(summary.begin(), summary.end(),
                                      [](const auto& a, const auto& b) { return a.range < b.range; });
    return std::string(to_string(e.kind)) + " obstacle " + e.id + " ahead, " + format_range(e.range) + " meters, " +
           bearing_word(e.bearing_deg);
  }
};

/// One JSON request line per call; one text line back.
inline std::string describer_request_line(const SceneSummary& summary, double min_depth, const std::string& prompt) {
  nlohmann::json j;
  j["prompt"] = prompt;
  j["min_depth_m"] = min_depth;
  j["objects"] = nlohmann::json::array();
  for (const auto& e : summary) {
    j["objects"].push_back(
        {{"id", e.id}, {"kind", std::string(to_string(e.kind))}, {"bearing_deg", e.bearing_deg}, {"range_m", e.range}});
  }
  return j.dump();
}

/// Line protocol over a pair of streams, e.g. the pipes of an external model runner.
class StreamDescriber final : public Describer {
 public:
  StreamDescriber(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

  std::string describe(const SceneSummary& summary, double min_depth, const std::string& prompt) override {
    std::lock_guard lock(mutex_);
    out_ << describer_request_line(summary, min_depth, prompt) << '\n';
    out_.flush();
    if (!out_) throw DescriberUnavailable("describer: request stream closed");
    std::string line;
    if (!std::getline(in_, line)) throw DescriberUnavailable("describer: no response");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

 private:
  std::istream& in_;
  std::ostream& out_;
  std::mutex mutex_;
};

/// Builds the event; a failing describer leaves the announcement empty.
inline HazardEvent describe(double stamp, double min_depth, SceneSummary summary, Describer& describer) {
  HazardEvent ev{stamp, min_depth, std::move(summary), {}};
  try {
    ev.announcement = describer.describe(ev.scene_summary, min_depth, kHazardPrompt);
  } catch (const DescriberUnavailable&) {
    ev.announcement.clear();
  }
  return ev;
}

/// Obstacles with at least one hit in a labeled robot-camera render, with bearing and
/// range of their nearest hit taken from the camera (optical frame).
inline SceneSummary summarize_visible(const Scene& scene, const LabeledDepth& ld) {
  const auto& k = ld.image.intrinsics;
  std::vector<std::optional<SummaryEntry>> nearest(scene.obstacles.size());
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const auto idx = static_cast<std::size_t>(v) * k.width + u;
      const int label = ld.labels[idx];
      const double d = ld.image.depth[idx];
      if (label < 0 || !valid_depth(d)) continue;
      const double x_right = d * (u - k.cx) / k.fx;
      const double range = std::hypot(d, x_right);
      auto& slot = nearest[static_cast<std::size_t>(label)];
      if (!slot || range < slot->range) {
        const auto& ob = scene.obstacles[static_cast<std::size_t>(label)];
        slot = SummaryEntry{ob.id, ob.kind, -std::atan2(x_right, d) * 180.0 / M_PI, range};
      }
    }
  }
  SceneSummary out;
  for (auto& e : nearest)
    if (e) out.push_back(*e);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.range < b.range; });
  return out;
}

/// Trigger detection never waits for descriptions: each fire launches an
/// asynchronous describe call, and `drain` collects the events in fire order.
class AnnouncementPipeline {
 public:
  explicit AnnouncementPipeline(Describer& describer) : describer_(describer) {}

  void submit(double stamp, double min_depth, SceneSummary summary) {
    pending_.push_back(std::async(std::launch::async, [this, stamp, min_depth, s = std::move(summary)]() mutable {
      return describe(stamp, min_depth, std::move(s), describer_);
    }));
  }

  std::vector<HazardEvent> drain() {
    std::vector<HazardEvent> out;
    out.reserve(pending_.size());
    for (auto& f : pending_) out.push_back(f.get());
    pending_.clear();
    return out;
  }

  std::size_t submitted() const { return pending_.size(); }

 private:
  Describer& describer_;
  std::vector<std::future<HazardEvent>> pending_;
};

}  // namespace coego
