#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "uwbloc/geometry.hpp"
#include "uwbloc/random.hpp"

namespace uwbloc {

enum class OdometrySource { Visual, Wheel };

std::string_view to_string(OdometrySource s) noexcept;

struct Twist {
  double linear{0.0};   // m/s
  double angular{0.0};  // rad/s

  constexpr bool operator==(const Twist&) const = default;
};

/// Exact unicycle motion for constant linear speed v and turn rate w over dt.
Pose2 advance_unicycle(const Pose2& pose, double v, double w, double dt);

/// Rigid motion over one odometry interval. The translation is expressed
/// along the odometry-frame axes, not the body axes.
struct PoseDelta {
  double dx{0.0};
  double dy{0.0};
  double dtheta{0.0};
};

struct WheelOdomParams {
  double slip_factor_mean{0.08};
  double slip_factor_sigma{0.05};
  double heading_noise_sigma{0.01};  // rad / sqrt(m)

  void validate() const;
};

struct DropoutWindow {
  double start{0.0};
  double duration{0.0};
};

struct VisualOdomParams {
  bool enabled{true};
  double drift_sigma{0.01};       // m / sqrt(m) travelled, per axis; rad / sqrt(m) for heading
  double dropout_rate{0.2};       // onsets per minute
  double dropout_duration{10.0};  // s
  std::vector<DropoutWindow> forced_dropouts{};

  void validate() const;
};

struct OdometryState {
  OdomPose pose{};
  OdometrySource active_source{OdometrySource::Visual};
  bool visual_healthy{true};
  double last_update{0.0};

  // Poisson dropout schedule.
  bool schedule_started{false};
  double next_dropout_onset{std::numeric_limits<double>::infinity()};
  double dropout_end{-std::numeric_limits<double>::infinity()};
  std::size_t dropout_onsets{0};
};

/// Unicycle integration of what the wheel encoders report. Slip is drawn per
/// call from N(mean, sigma) clamped to [0, 0.9] and inflates the reported
/// distance by 1 / (1 - slip); heading picks up N(0, sigma * sqrt(distance)).
/// Throws NonPositiveDt.
OdometryState integrate_wheel(OdometryState state, const Twist& true_motion, double dt,
                              const WheelOdomParams& params, Rng& rng);

/// Advances by the true increment plus per-axis gaussian noise with
/// sigma = drift_sigma * sqrt(step distance). Throws VisualUnavailable.
OdometryState integrate_visual(OdometryState state, const PoseDelta& true_delta,
                               const VisualOdomParams& params, Rng& rng);

/// Advances the dropout schedule to `now` and re-derives the active source.
OdometryState update_health(OdometryState state, double now, const VisualOdomParams& params,
                            Rng& rng);

/// Overwrites the position only; the heading is kept.
OdometryState apply_pose_reset(OdometryState state, const OdomPoint& uwb_position_in_odom);

}  // namespace uwbloc
