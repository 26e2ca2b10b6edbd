#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uwbloc/align.hpp"
#include "uwbloc/event_log.hpp"
#include "uwbloc/locate.hpp"
#include "uwbloc/odometry.hpp"
#include "uwbloc/random.hpp"
#include "uwbloc/scenario.hpp"
#include "uwbloc/sim.hpp"

namespace uwbloc {

enum class MissionPhase {
  Idle,
  Deploying,
  CalibrationDrive,
  AwaitWaypoint,
  Driving,
  AwaitResetDecision,
  Faulted,
};

std::string_view to_string(MissionPhase phase) noexcept;
std::optional<MissionPhase> phase_from_string(std::string_view name) noexcept;

/// Idle->Deploying->CalibrationDrive->AwaitWaypoint,
/// AwaitWaypoint->Driving->AwaitResetDecision->AwaitWaypoint, any->Faulted.
bool is_legal_transition(MissionPhase from, MissionPhase to) noexcept;

struct DriveSegment {
  Twist twist{};
  double duration{0.0};  // s
};
using DriveScript = std::vector<DriveSegment>;

/// L-shaped drive: leg, left turn, leg.
DriveScript default_calibration_script(const CalibrationConfig& config);

/// Straight drive of the same total length, for demonstrating that a line
/// leaves the rotation unobservable.
DriveScript straight_calibration_script(const CalibrationConfig& config);

namespace command {
struct Deploy {
  bool operator==(const Deploy&) const = default;
};
struct Calibrate {
  std::optional<DriveScript> script{};
  bool operator==(const Calibrate& o) const;
};
struct SetWaypoint {
  OdomPoint target{};
  bool operator==(const SetWaypoint&) const = default;
};
struct Reset {
  bool operator==(const Reset&) const = default;
};
struct SkipReset {
  bool operator==(const SkipReset&) const = default;
};
}  // namespace command

using Command = std::variant<command::Deploy, command::Calibrate, command::SetWaypoint,
                             command::Reset, command::SkipReset>;

std::string_view command_name(const Command& c) noexcept;
Json command_to_json(const Command& c);
/// Throws ScriptInvalid.
Command command_from_json(const Json& j);

struct MissionState {
  MissionPhase phase{MissionPhase::Idle};
  OdometryState odom{};
  std::optional<AlignmentResult> alignment{};
  std::optional<FixResult> latest_fix{};
  std::optional<OdomPoint> target{};
  std::optional<double> discrepancy{};
};

/// Which operator commands the mission would accept right now.
struct CommandFlags {
  bool deploy{false};
  bool calibrate{false};
  bool set_waypoint{false};
  bool reset{false};
  bool skip_reset{false};

  bool operator==(const CommandFlags&) const = default;
};

/// Move-and-wait mission: owns the simulated world, the odometry estimator
/// and the UWB pipeline, and advances them only while it has autonomous work
/// (calibration drive, waypoint drive, settling for a fresh fix). Between
/// those it waits for the operator, so the event log depends on the command
/// sequence alone and not on how long the operator took.
class Mission {
 public:
  explicit Mission(const ScenarioConfig& config);

  Mission(const Mission&) = delete;
  Mission& operator=(const Mission&) = delete;

  const MissionState& state() const noexcept { return state_; }
  MissionPhase phase() const noexcept { return state_.phase; }
  double sim_time() const noexcept { return world_.state().sim_time; }
  const ScenarioConfig& config() const noexcept { return config_; }

  /// True while autonomous work is pending; commands are refused meanwhile.
  bool busy() const noexcept;
  CommandFlags flags() const noexcept;

  /// Dispatches to the operator commands below. Every command is validated
  /// completely before any effect, and logged only once accepted.
  void apply(const Command& c);

  /// Throws WrongPhase.
  void command_deploy();
  /// Starts the calibration drive; pairs are recorded on every fix and the
  /// alignment is solved when the script ends. Throws WrongPhase.
  void run_calibration_drive(std::optional<DriveScript> script = std::nullopt);
  /// Throws WrongPhase or TargetOutOfBounds.
  void set_waypoint(const OdomPoint& target);
  /// Throws WrongPhase or NoFixAvailable.
  void command_pose_reset();
  /// Throws WrongPhase.
  void skip_reset();

  /// One fixed simulation step. Throws std::logic_error when not busy.
  void step();
  /// Steps until the mission waits for the operator.
  void run_until_idle();

  const EventLog& log() const noexcept { return log_; }
  EventLog& log() noexcept { return log_; }
  const sim::World& world() const noexcept { return world_; }
  const CorrespondenceBuffer& calibration_pairs() const noexcept { return pairs_; }
  const std::optional<AnchorMap>& anchor_map() const noexcept { return anchors_; }
  const std::optional<std::string>& fault() const noexcept { return fault_; }
  const std::optional<std::string>& last_calibration_failure() const noexcept {
    return calibration_failure_;
  }

 private:
  void require(MissionPhase phase, std::string_view command) const;
  void require_idle(std::string_view command) const;
  void transition(MissionPhase to);
  void enter_fault(const std::string& cause);
  void log_command(const Command& c);

  Twist drive_command();
  void process_ticks(const sim::StepOutput& out);
  void process_round(const sim::RangingRound& round);
  void finish_calibration();
  void arrive();
  void finish_settling();
  void refresh_discrepancy();
  bool fix_is_fresh() const noexcept;

  Json odom_json() const;
  Json truth_json() const;

  ScenarioConfig config_;
  sim::World world_;
  Rng wheel_rng_;
  Rng visual_rng_;
  Rng health_rng_;
  EventLog log_;
  MissionState state_;
  std::optional<AnchorMap> anchors_;
  std::vector<RangeMeasurement> recent_;
  CorrespondenceBuffer pairs_;
  std::optional<std::string> fault_;
  std::optional<std::string> calibration_failure_;

  // Calibration drive progress.
  bool calibrating_{false};
  DriveScript script_;
  std::size_t segment_{0};
  long segment_steps_left_{0};

  // Waypoint drive progress.
  bool turning_{true};
  double drive_started_{0.0};

  // Waiting for a fix taken after arrival.
  bool settling_{false};
  double arrival_time_{0.0};
};

}  // namespace uwbloc
