#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwbloc/event_log.hpp"
#include "uwbloc/mission.hpp"
#include "uwbloc/scenario.hpp"

namespace uwbloc::gateway {

inline constexpr int kSessionSchemaVersion = 1;
inline constexpr std::string_view kSessionFormat = "uwbloc-session";

/// Parses an operator command script:
///
///   commands:
///     - deploy
///     - calibrate                      # or {calibrate: [{linear, angular, duration}, ...]}
///     - waypoint: [5.0, 2.0]           # odometry frame
///     - reset
///     - skip_reset
///
/// Throws ScriptInvalid naming the offending entry.
std::vector<Command> parse_command_script(std::string_view yaml_text);
std::vector<Command> load_command_script(const std::filesystem::path& path);

/// One stop of the move-and-wait loop, reconstructed from the event log.
struct WaypointSummary {
  std::size_t index{0};
  Point2 target{};
  std::optional<double> discrepancy{};  // at the end of settling
  double arrival_error{0.0};            // odometry vs ground truth on arrival
  std::string decision{};               // "reset", "skip_reset" or empty
  std::optional<double> post_error{};   // odometry vs ground truth after the decision
  std::optional<double> fix_error{};    // error of the fix used by the reset
};

struct SessionSummary {
  std::size_t fix_count{0};
  double fix_rmse{0.0};
  double mean_fix_error{0.0};
  double max_fix_error{0.0};
  std::size_t fix_failures{0};
  std::size_t reset_count{0};
  std::size_t skip_count{0};
  std::optional<double> alignment_rotation_error{};
  std::optional<double> alignment_translation_error{};
  std::vector<WaypointSummary> waypoints{};
  std::string final_phase{"Idle"};
  double sim_time{0.0};

  Json to_json() const;
};

/// Recomputes every metric from the log text alone. Throws SessionCorrupt.
SessionSummary summarize(const std::vector<std::string>& event_lines);

/// The operator commands that were accepted, in order, recovered from the
/// "command" records of a log.
std::vector<Command> commands_from_events(const std::vector<std::string>& event_lines);

struct SessionRecord {
  std::string scenario_yaml{};
  std::optional<std::uint64_t> seed_override{};
  std::vector<Command> commands{};
  SessionSummary summary{};
  std::vector<std::string> events{};
};

ScenarioConfig session_config(const SessionRecord& record);

/// Header line (format, schema version, SHA-256 of everything after it),
/// then config, commands and summary lines, then the event log verbatim.
std::string serialize_session(const SessionRecord& record);
/// Throws SessionCorrupt on a bad header, schema version, checksum or body.
SessionRecord parse_session(std::string_view text);
void write_session(const std::filesystem::path& path, const SessionRecord& record);
SessionRecord read_session(const std::filesystem::path& path);

/// Drives a fresh mission through the commands as a scripted operator:
/// before each command the mission runs until it waits for the operator.
/// A refused command raises ScriptInvalid naming its index. A mission that
/// faults stops consuming commands; the record still describes the run.
SessionRecord run_commands(const std::string& scenario_yaml, std::optional<std::uint64_t> seed_override,
                           const std::vector<Command>& commands);

/// Loads scenario and script, runs, and writes the session file when out_path
/// is non-empty. Throws ConfigInvalid or ScriptInvalid.
SessionRecord run_headless(const std::filesystem::path& scenario_path,
                           const std::filesystem::path& script_path,
                           const std::filesystem::path& out_path,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

/// Re-executes the recorded config with the command sequence extracted from
/// the log and compares every line. Throws SessionCorrupt or ReplayDivergence.
SessionRecord replay(const SessionRecord& recorded);
SessionRecord replay(const std::filesystem::path& session_path);

/// CSV of ground truth vs estimates at every fix, all in the odometry frame:
/// sim_time,true_x,true_y,odom_x,odom_y,fix_x,fix_y,discrepancy
/// Cells without a value (no alignment yet) are left empty.
std::string plot_summary_csv(const std::vector<std::string>& event_lines);

}  // namespace uwbloc::gateway
