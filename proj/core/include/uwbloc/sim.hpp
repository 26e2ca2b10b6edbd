#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "uwbloc/geometry.hpp"
#include "uwbloc/locate.hpp"
#include "uwbloc/odometry.hpp"
#include "uwbloc/random.hpp"
#include "uwbloc/ranging.hpp"
#include "uwbloc/scenario.hpp"

namespace uwbloc::sim {

struct AnchorState {
  AnchorId id{};
  WorldPoint true_position{};
  bool deployed{false};
};

/// Ground truth. Nothing an estimator computes is ever written back here.
struct WorldState {
  WorldPose true_pose{};
  std::vector<AnchorState> anchors{};  // anchors[0] is the origin anchor once deployed
  double sim_time{0.0};
  std::uint64_t rng_seed{0};
  ClockModel tag_clock{};
  std::vector<ClockModel> anchor_clocks{};  // indexed like anchors, sized for the capacity

  bool deployed() const noexcept { return !anchors.empty(); }
};

/// Drops the origin anchor and lands each launch at a scattered polar offset
/// from the rover. Throws AlreadyDeployed, AnchorCapacity or OutOfArena; the
/// input world is left untouched on error.
WorldState deploy_anchors(WorldState world, const DeploymentPlan& plan, const ArenaBounds& arena,
                          Rng& rng);

/// Throws NotDeployed.
std::vector<std::pair<AnchorId, double>> true_ranges(const WorldState& world);

/// The UWB frame: origin anchor at (0, 0), first launched anchor on +x.
/// Throws NotDeployed.
FrameMap<FrameId::Uwb, FrameId::World> uwb_frame(const WorldState& world);

/// Anchor positions as the localization stack knows them (UWB frame).
AnchorMap surveyed_anchors(const WorldState& world);

struct OdometryTick {
  OdometrySource source{};
  double time{0.0};
  double dt{0.0};
  PoseDelta delta{};  // true increment, odometry-frame axes
  Twist motion{};     // mean true twist over the interval
};

struct RangingRound {
  double time{0.0};
  std::vector<RangeMeasurement> measurements{};
};

struct StepOutput {
  std::vector<OdometryTick> ticks{};
  std::optional<RangingRound> round{};
};

/// Fixed-step world simulator owning the ground truth and the ranging,
/// deployment and clock random streams.
class World {
 public:
  explicit World(const ScenarioConfig& config);

  const WorldState& state() const noexcept { return state_; }
  const ScenarioConfig& config() const noexcept { return config_; }

  /// Throws as deploy_anchors.
  void deploy();

  /// Advances truth by exact unicycle kinematics of the clamped command and
  /// emits odometry ticks and at most one ranging round. Throws InvalidDt
  /// unless dt lies in (0, 0.1].
  StepOutput step(const Twist& command, double dt);

  Twist clamp(const Twist& command) const;

  /// Emits the partial tick covering the motion since the source's last tick
  /// and restarts its interval at the current time. Used at odometry source
  /// handovers so no motion is lost or counted twice.
  OdometryTick flush_odometry(OdometrySource source);

  /// Restarts the source's interval at the current time, discarding motion
  /// accumulated while it was not in use.
  void restart_odometry(OdometrySource source);

  /// The odometry frame is the rover's start pose.
  FrameMap<FrameId::Odom, FrameId::World> odom_frame() const noexcept { return odom_frame_; }

  /// Ground-truth UWB -> odometry alignment. Throws NotDeployed.
  FrameMap<FrameId::Uwb, FrameId::Odom> true_alignment() const;

  /// True rover position expressed in the UWB / odometry frames.
  UwbPoint true_position_uwb() const;
  OdomPose true_pose_odom() const;

 private:
  struct TickClock {
    double period{0.0};
    double next{0.0};
    double last_time{0.0};
    Pose2 last_pose{};
    double distance{0.0};
    double turned{0.0};
  };

  RangingRound ranging_round();
  OdometryTick emit_tick(OdometrySource source, TickClock& clock);
  TickClock& clock_for(OdometrySource source) noexcept;

  ScenarioConfig config_;
  WorldState state_;
  FrameMap<FrameId::Odom, FrameId::World> odom_frame_;
  Rng deployment_rng_;
  Rng ranging_rng_;
  TickClock wheel_clock_;
  TickClock visual_clock_;
  double ranging_period_;
  double next_round_;
};

}  // namespace uwbloc::sim
