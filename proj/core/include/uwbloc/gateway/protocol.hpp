#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uwbloc/event_log.hpp"
#include "uwbloc/geometry.hpp"
#include "uwbloc/mission.hpp"

// Operator wire protocol. Every message is one UTF-8 JSON object carried in
// one WebSocket text frame and tagged by its "type" field. Field-by-field
// documentation lives in docs/protocol.md.
namespace uwbloc::gateway::protocol {

inline constexpr int kProtocolVersion = 1;

struct Hello {
  std::string agent{};
  int protocol_version{kProtocolVersion};
  std::string scenario{};  // empty when sent by a client
  bool operator==(const Hello&) const = default;
};

struct AnchorInfo {
  std::uint32_t id{0};
  Point2 uwb{};
  bool operator==(const AnchorInfo&) const = default;
};

struct FixInfo {
  double t{0.0};
  Point2 uwb{};
  std::optional<Point2> odom{};  // once aligned
  double residual_rms{0.0};
  double gdop{0.0};
  bool operator==(const FixInfo&) const = default;
};

struct StateSnapshot {
  double sim_time{0.0};
  std::string phase{"Idle"};
  Pose2 odom{};
  std::string source{"Visual"};
  bool visual_healthy{true};
  std::optional<FixInfo> fix{};
  std::optional<double> discrepancy{};
  std::optional<Point2> target{};
  std::optional<FrameTransform> alignment{};  // UWB -> odometry
  std::vector<AnchorInfo> anchors{};          // UWB frame
  CommandFlags flags{};
  bool busy{false};
  bool paused{false};
  std::size_t event_count{0};
  bool operator==(const StateSnapshot&) const = default;
};

/// One event-log record, forwarded verbatim.
struct Event {
  Json record{};
  bool operator==(const Event&) const = default;
};

struct CommandDeploy {
  bool operator==(const CommandDeploy&) const = default;
};
struct CommandCalibrate {
  std::optional<DriveScript> script{};
  bool operator==(const CommandCalibrate& o) const;
};
struct SetWaypoint {
  double x{0.0};  // odometry frame
  double y{0.0};
  bool operator==(const SetWaypoint&) const = default;
};
struct CommandReset {
  bool operator==(const CommandReset&) const = default;
};
struct SkipReset {
  bool operator==(const SkipReset&) const = default;
};
struct Pause {
  bool operator==(const Pause&) const = default;
};
struct Resume {
  bool operator==(const Resume&) const = default;
};

struct ErrorMessage {
  std::string code{};
  std::string message{};
  std::string request{};  // type of the offending client message, if any
  bool operator==(const ErrorMessage&) const = default;
};

using Message = std::variant<Hello, StateSnapshot, Event, CommandDeploy, CommandCalibrate, SetWaypoint,
                             CommandReset, SkipReset, Pause, Resume, ErrorMessage>;

std::string_view message_type(const Message& m) noexcept;

Json to_json(const Message& m);
std::string encode(const Message& m);
/// Throws ProtocolError on malformed JSON, an unknown type or bad fields.
Message from_json(const Json& j);
Message decode(std::string_view text);

/// Operator commands map onto mission commands; other messages do not.
std::optional<Command> to_command(const Message& m);

StateSnapshot make_snapshot(const Mission& mission, bool paused);

}  // namespace uwbloc::gateway::protocol
