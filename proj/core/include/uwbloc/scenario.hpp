#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "uwbloc/align.hpp"
#include "uwbloc/geometry.hpp"
#include "uwbloc/locate.hpp"
#include "uwbloc/odometry.hpp"
#include "uwbloc/ranging.hpp"

namespace uwbloc {

/// Axis-aligned arena in the world frame.
struct ArenaBounds {
  double min_x{-30.0};
  double min_y{-30.0};
  double max_x{30.0};
  double max_y{30.0};

  bool contains(const Point2& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

struct LaunchSpec {
  double bearing_deg{0.0};  // relative to rover heading
  double nominal_range{15.0};
  double scatter_sigma_range{0.0};
  double scatter_sigma_bearing_deg{0.0};
};

struct DeploymentPlan {
  static constexpr std::size_t kMaxAnchors = 5;

  Point2 origin_drop{-0.3, 0.0};  // rover body frame
  std::vector<LaunchSpec> launches{};
};

struct RangingConfig {
  double rate_hz{5.0};
  double reply_delay_tag{5.0e-4};     // s
  double reply_delay_anchor{3.0e-4};  // s
  double clock_drift_ppm{20.0};       // per-node drift drawn uniformly in +-ppm
  RangeNoiseModel noise{};
  std::map<std::uint32_t, double> per_anchor_bias{};  // added to noise.bias
  double selection_window{0.5};                        // s
};

struct OdometryConfig {
  WheelOdomParams wheel{};
  double wheel_rate_hz{50.0};
  VisualOdomParams visual{};
  double visual_rate_hz{30.0};
};

struct ControllerConfig {
  double max_linear{0.5};   // m/s
  double max_angular{0.5};  // rad/s
  double waypoint_tolerance{0.3};
  double heading_gate{0.1};    // rad, rotate in place above this bearing error
  double heading_gain{1.5};    // rad/s per rad
  double approach_gain{0.5};   // m/s per m of remaining distance
  double drive_timeout{600.0};  // s
};

struct CalibrationConfig {
  double leg_length{8.0};    // m
  double speed{0.5};         // m/s
  double turn_rate{0.3};     // rad/s
  double turn_deg{90.0};     // left turn between the legs
  double min_collinearity{0.1};
  AlignmentConfig solver{};
};

struct MissionConfig {
  double fix_staleness{2.0};    // s
  double settle_timeout{2.0};   // s, wait for a post-arrival fix
};

struct ScenarioConfig {
  std::string name{"unnamed"};
  std::uint64_t seed{1};
  double dt{0.02};
  ArenaBounds arena{};
  double start_x{0.0};
  double start_y{0.0};
  double start_heading_deg{0.0};
  DeploymentPlan deployment{};
  RangingConfig ranging{};
  TrilaterationConfig locate{};
  OdometryConfig odometry{};
  ControllerConfig controller{};
  CalibrationConfig calibration{};
  MissionConfig mission{};

  Pose2 start_pose() const;

  /// Throws ConfigInvalid naming the offending key.
  void validate() const;
};

/// Parses the YAML scenario format documented in docs/scenario.md.
/// Unknown keys, wrong types and out-of-range values raise ConfigInvalid
/// with the dotted key path in the message.
ScenarioConfig parse_scenario(std::string_view yaml_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace uwbloc
