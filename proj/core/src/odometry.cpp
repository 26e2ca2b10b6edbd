#include "uwbloc/odometry.hpp"

#include <algorithm>
#include <cmath>

#include "uwbloc/error.hpp"

namespace uwbloc {

Pose2 advance_unicycle(const Pose2& pose, double v, double w, double dt) {
  const double th = pose.heading;
  Pose2 out = pose;
  if (std::abs(w) < 1e-12) {
    out.position += Point2{std::cos(th), std::sin(th)} * (v * dt);
  } else {
    const double th1 = th + w * dt;
    out.position += Point2{std::sin(th1) - std::sin(th), std::cos(th) - std::cos(th1)} * (v / w);
  }
  out.heading = normalize_angle(th + w * dt);
  return out;
}

std::string_view to_string(OdometrySource s) noexcept {
  return s == OdometrySource::Visual ? "visual" : "wheel";
}

void WheelOdomParams::validate() const {
  if (!(slip_factor_sigma >= 0.0) || !(heading_noise_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "wheel odometry sigmas must be >= 0");
  }
  if (!(slip_factor_mean >= 0.0 && slip_factor_mean <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "slip_factor_mean must lie in [0, 0.5]");
  }
}

void VisualOdomParams::validate() const {
  if (!(drift_sigma >= 0.0) || !(dropout_rate >= 0.0) || !(dropout_duration >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "visual odometry parameters must be >= 0");
  }
  for (const auto& w : forced_dropouts) {
    if (!(w.duration >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "forced dropout duration must be >= 0");
    }
  }
}

OdometryState integrate_wheel(OdometryState state, const Twist& true_motion, double dt,
                              const WheelOdomParams& params, Rng& rng) {
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "wheel odometry dt must be > 0");
  const double slip =
      std::clamp(draw_gaussian(rng, params.slip_factor_mean, params.slip_factor_sigma), 0.0, 0.9);
  const double heading_draw = draw_gaussian(rng, 0.0, 1.0);

  const double reported_linear = true_motion.linear / (1.0 - slip);
  Pose2 pose = advance_unicycle(state.pose.value, reported_linear, true_motion.angular, dt);
  const double travelled = std::abs(reported_linear) * dt;
  pose.heading = normalize_angle(pose.heading +
                                 params.heading_noise_sigma * std::sqrt(travelled) * heading_draw);
  state.pose.value = pose;
  return state;
}

OdometryState integrate_visual(OdometryState state, const PoseDelta& true_delta,
                               const VisualOdomParams& params, Rng& rng) {
  if (!state.visual_healthy) {
    throw Error(ErrorCode::VisualUnavailable, "visual odometry is in dropout");
  }
  const double nx = draw_gaussian(rng, 0.0, 1.0);
  const double ny = draw_gaussian(rng, 0.0, 1.0);
  const double nth = draw_gaussian(rng, 0.0, 1.0);
  const double sigma = params.drift_sigma * std::sqrt(std::hypot(true_delta.dx, true_delta.dy));
  Pose2& pose = state.pose.value;
  pose.position += Point2{true_delta.dx + sigma * nx, true_delta.dy + sigma * ny};
  pose.heading = normalize_angle(pose.heading + true_delta.dtheta + sigma * nth);
  return state;
}

OdometryState update_health(OdometryState state, double now, const VisualOdomParams& params,
                            Rng& rng) {
  bool healthy = params.enabled;
  if (params.enabled) {
    const double rate_per_second = params.dropout_rate / 60.0;
    auto next_gap = [&]() {
      std::exponential_distribution<double> exp(rate_per_second);
      return exp(rng);
    };
    if (!state.schedule_started) {
      state.schedule_started = true;
      state.next_dropout_onset =
          rate_per_second > 0.0 ? now + next_gap() : std::numeric_limits<double>::infinity();
    }
    while (state.next_dropout_onset <= now) {
      ++state.dropout_onsets;
      state.dropout_end =
          std::max(state.dropout_end, state.next_dropout_onset + params.dropout_duration);
      state.next_dropout_onset += next_gap();
    }
    if (now < state.dropout_end) healthy = false;
    for (const auto& w : params.forced_dropouts) {
      if (now >= w.start && now < w.start + w.duration) healthy = false;
    }
  }
  state.visual_healthy = healthy;
  state.active_source = healthy ? OdometrySource::Visual : OdometrySource::Wheel;
  state.last_update = now;
  return state;
}

OdometryState apply_pose_reset(OdometryState state, const OdomPoint& uwb_position_in_odom) {
  state.pose.value.position = uwb_position_in_odom.value;
  return state;
}

}  // namespace uwbloc
