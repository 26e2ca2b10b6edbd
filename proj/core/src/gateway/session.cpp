#include "uwbloc/gateway/session.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "uwbloc/error.hpp"

namespace uwbloc::gateway {

namespace {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

double as_double(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorCode::ScriptInvalid, where + ": expected a number");
  }
}

Command parse_entry(const YAML::Node& entry, const std::string& where) {
  if (entry.IsScalar()) {
    const auto name = entry.as<std::string>();
    if (name == "deploy") return command::Deploy{};
    if (name == "calibrate") return command::Calibrate{};
    if (name == "reset") return command::Reset{};
    if (name == "skip_reset") return command::SkipReset{};
    throw Error(ErrorCode::ScriptInvalid, where + ": unknown command '" + name + "'");
  }
  if (!entry.IsMap() || entry.size() != 1) {
    throw Error(ErrorCode::ScriptInvalid, where + ": expected a command name or a one-key map");
  }
  const auto key = entry.begin()->first.as<std::string>();
  const YAML::Node value = entry.begin()->second;
  if (key == "waypoint") {
    if (!value.IsSequence() || value.size() != 2) {
      throw Error(ErrorCode::ScriptInvalid, where + ".waypoint: expected [x, y]");
    }
    return command::SetWaypoint{{{as_double(value[0], where + ".waypoint[0]"),
                                  as_double(value[1], where + ".waypoint[1]")}}};
  }
  if (key == "calibrate") {
    if (!value.IsSequence()) {
      throw Error(ErrorCode::ScriptInvalid, where + ".calibrate: expected a list of segments");
    }
    DriveScript script;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const std::string at = where + ".calibrate[" + std::to_string(i) + "]";
      const YAML::Node s = value[i];
      if (!s.IsMap()) throw Error(ErrorCode::ScriptInvalid, at + ": expected a map");
      for (const auto& kv : s) {
        const auto k = kv.first.as<std::string>();
        if (k != "linear" && k != "angular" && k != "duration") {
          throw Error(ErrorCode::ScriptInvalid, at + "." + k + ": unknown key");
        }
      }
      DriveSegment seg;
      if (s["linear"]) seg.twist.linear = as_double(s["linear"], at + ".linear");
      if (s["angular"]) seg.twist.angular = as_double(s["angular"], at + ".angular");
      if (!s["duration"]) throw Error(ErrorCode::ScriptInvalid, at + ".duration: missing");
      seg.duration = as_double(s["duration"], at + ".duration");
      if (!(seg.duration >= 0.0) || !std::isfinite(seg.duration)) {
        throw Error(ErrorCode::ScriptInvalid, at + ".duration: must be >= 0");
      }
      script.push_back(seg);
    }
    return command::Calibrate{std::move(script)};
  }
  throw Error(ErrorCode::ScriptInvalid, where + ": unknown command '" + key + "'");
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      out.emplace_back(text.substr(pos));
      break;
    }
    out.emplace_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

Point2 xy(const Json& j) { return {j.at("x").get<double>(), j.at("y").get<double>()}; }

double pose_error(const Json& data) {
  return distance(xy(data.at("odom")), xy(data.at("truth").at("odom")));
}

}  // namespace

std::vector<Command> parse_command_script(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ScriptInvalid, std::string("unparseable script: ") + e.what());
  }
  if (!root.IsMap() || !root["commands"]) {
    throw Error(ErrorCode::ScriptInvalid, "commands: missing top-level list");
  }
  for (const auto& kv : root) {
    if (kv.first.as<std::string>() != "commands") {
      throw Error(ErrorCode::ScriptInvalid, kv.first.as<std::string>() + ": unknown key");
    }
  }
  const YAML::Node list = root["commands"];
  if (!list.IsSequence()) throw Error(ErrorCode::ScriptInvalid, "commands: expected a list");
  std::vector<Command> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    try {
      out.push_back(parse_entry(list[i], "commands[" + std::to_string(i) + "]"));
    } catch (const YAML::Exception& e) {
      throw Error(ErrorCode::ScriptInvalid, "commands[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

std::vector<Command> load_command_script(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ScriptInvalid, e.what());
  }
  return parse_command_script(text);
}

Json SessionSummary::to_json() const {
  const auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json wps = Json::array();
  for (const auto& w : waypoints) {
    wps.push_back(Json{{"index", w.index},
                       {"target", {{"x", w.target.x}, {"y", w.target.y}}},
                       {"discrepancy", opt(w.discrepancy)},
                       {"arrival_error", w.arrival_error},
                       {"decision", w.decision},
                       {"post_error", opt(w.post_error)},
                       {"fix_error", opt(w.fix_error)}});
  }
  return Json{{"fix_count", fix_count},
              {"fix_rmse", fix_rmse},
              {"mean_fix_error", mean_fix_error},
              {"max_fix_error", max_fix_error},
              {"fix_failures", fix_failures},
              {"reset_count", reset_count},
              {"skip_count", skip_count},
              {"alignment_rotation_error", opt(alignment_rotation_error)},
              {"alignment_translation_error", opt(alignment_translation_error)},
              {"waypoints", wps},
              {"final_phase", final_phase},
              {"sim_time", sim_time}};
}

SessionSummary summarize(const std::vector<std::string>& event_lines) {
  SessionSummary s;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::optional<double> latest_fix_error;
  for (const auto& line : event_lines) {
    const EventRecord r = parse_event(line);
    s.sim_time = r.t;
    try {
      if (r.type == "fix") {
        const double e = r.data.at("error").get<double>();
        latest_fix_error = e;
        ++s.fix_count;
        sum += e;
        sum_sq += e * e;
        s.max_fix_error = std::max(s.max_fix_error, e);
      } else if (r.type == "fix_failed") {
        ++s.fix_failures;
      } else if (r.type == "alignment") {
        s.alignment_rotation_error = r.data.at("rotation_error").get<double>();
        s.alignment_translation_error = r.data.at("translation_error").get<double>();
      } else if (r.type == "waypoint") {
        WaypointSummary w;
        w.index = s.waypoints.size() + 1;
        w.target = xy(r.data.at("target"));
        s.waypoints.push_back(w);
      } else if (r.type == "arrival" && !s.waypoints.empty()) {
        s.waypoints.back().arrival_error = pose_error(r.data);
      } else if (r.type == "discrepancy" && !s.waypoints.empty()) {
        const Json& d = r.data.at("discrepancy");
        if (!d.is_null()) s.waypoints.back().discrepancy = d.get<double>();
      } else if (r.type == "reset") {
        ++s.reset_count;
        if (!s.waypoints.empty()) {
          auto& w = s.waypoints.back();
          w.decision = "reset";
          w.post_error = distance(xy(r.data.at("new")), xy(r.data.at("truth").at("odom")));
          w.fix_error = latest_fix_error;
        }
      } else if (r.type == "skip_reset") {
        ++s.skip_count;
        if (!s.waypoints.empty()) {
          s.waypoints.back().decision = "skip_reset";
          s.waypoints.back().post_error = pose_error(r.data);
        }
      } else if (r.type == "phase") {
        s.final_phase = r.data.at("to").get<std::string>();
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::SessionCorrupt,
                  "event " + std::to_string(r.seq) + " (" + r.type + "): " + e.what());
    }
  }
  if (s.fix_count > 0) {
    s.mean_fix_error = sum / static_cast<double>(s.fix_count);
    s.fix_rmse = std::sqrt(sum_sq / static_cast<double>(s.fix_count));
  }
  return s;
}

std::vector<Command> commands_from_events(const std::vector<std::string>& event_lines) {
  std::vector<Command> out;
  for (const auto& line : event_lines) {
    const EventRecord r = parse_event(line);
    if (r.type != "command") continue;
    try {
      out.push_back(command_from_json(r.data));
    } catch (const Error& e) {
      throw Error(ErrorCode::SessionCorrupt, "event " + std::to_string(r.seq) + ": " + e.what());
    }
  }
  return out;
}

ScenarioConfig session_config(const SessionRecord& record) {
  ScenarioConfig config = parse_scenario(record.scenario_yaml);
  if (record.seed_override) config.seed = *record.seed_override;
  return config;
}

std::string serialize_session(const SessionRecord& record) {
  Json commands = Json::array();
  for (const auto& c : record.commands) commands.push_back(command_to_json(c));
  std::string body;
  body += Json{{"config",
                {{"scenario_yaml", record.scenario_yaml},
                 {"seed_override", record.seed_override ? Json(*record.seed_override) : Json(nullptr)}}}}
              .dump();
  body += '\n';
  body += Json{{"commands", commands}}.dump();
  body += '\n';
  body += Json{{"summary", record.summary.to_json()}}.dump();
  body += '\n';
  for (const auto& l : record.events) {
    body += l;
    body += '\n';
  }
  const Json header{{"format", kSessionFormat},
                    {"schema_version", kSessionSchemaVersion},
                    {"sha256", sha256_hex(body)}};
  return header.dump() + '\n' + body;
}

SessionRecord parse_session(std::string_view text) {
  const std::size_t newline = text.find('\n');
  if (newline == std::string_view::npos) throw Error(ErrorCode::SessionCorrupt, "missing session header");
  Json header;
  try {
    header = Json::parse(text.substr(0, newline));
  } catch (const Json::exception&) {
    throw Error(ErrorCode::SessionCorrupt, "unreadable session header");
  }
  if (!header.is_object() || header.value("format", "") != kSessionFormat) {
    throw Error(ErrorCode::SessionCorrupt, "not a session file");
  }
  const Json& version = header.contains("schema_version") ? header["schema_version"] : Json();
  if (!version.is_number_integer() || version.get<int>() != kSessionSchemaVersion) {
    throw Error(ErrorCode::SessionCorrupt, "unsupported session schema version " + version.dump() +
                                               " (this build reads version " +
                                               std::to_string(kSessionSchemaVersion) + ")");
  }
  const std::string_view body = text.substr(newline + 1);
  if (!header.contains("sha256") || !header["sha256"].is_string() ||
      header["sha256"].get<std::string>() != sha256_hex(body)) {
    throw Error(ErrorCode::SessionCorrupt, "session checksum mismatch");
  }

  const auto lines = split_lines(body);
  if (lines.size() < 3) throw Error(ErrorCode::SessionCorrupt, "session body truncated");
  SessionRecord record;
  try {
    const Json config = Json::parse(lines[0]).at("config");
    record.scenario_yaml = config.at("scenario_yaml").get<std::string>();
    if (!config.at("seed_override").is_null()) {
      record.seed_override = config.at("seed_override").get<std::uint64_t>();
    }
    const Json commands = Json::parse(lines[1]).at("commands");
    for (const auto& c : commands) record.commands.push_back(command_from_json(c));
    (void)Json::parse(lines[2]).at("summary");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SessionCorrupt, std::string("malformed session body: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::SessionCorrupt, e.what());
  }
  record.events.assign(lines.begin() + 3, lines.end());
  record.summary = summarize(record.events);
  return record;
}

void write_session(const std::filesystem::path& path, const SessionRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << serialize_session(record);
  if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing " + path.string());
}

SessionRecord read_session(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::SessionCorrupt, e.what());
  }
  return parse_session(text);
}

SessionRecord run_commands(const std::string& scenario_yaml, std::optional<std::uint64_t> seed_override,
                           const std::vector<Command>& commands) {
  SessionRecord record;
  record.scenario_yaml = scenario_yaml;
  record.seed_override = seed_override;
  Mission mission(session_config(record));
  for (std::size_t i = 0; i < commands.size(); ++i) {
    mission.run_until_idle();
    if (mission.phase() == MissionPhase::Faulted) break;
    try {
      mission.apply(commands[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::ScriptInvalid, "command " + std::to_string(i) + " (" +
                                                std::string(command_name(commands[i])) +
                                                ") refused: " + e.what());
    }
    record.commands.push_back(commands[i]);
  }
  mission.run_until_idle();
  record.events = mission.log().lines();
  record.summary = summarize(record.events);
  return record;
}

SessionRecord run_headless(const std::filesystem::path& scenario_path,
                           const std::filesystem::path& script_path,
                           const std::filesystem::path& out_path,
                           std::optional<std::uint64_t> seed_override) {
  const std::string yaml = read_text_file(scenario_path);
  (void)parse_scenario(yaml);  // ConfigInvalid before the script is even read
  const auto commands = load_command_script(script_path);
  SessionRecord record = run_commands(yaml, seed_override, commands);
  if (!out_path.empty()) write_session(out_path, record);
  return record;
}

SessionRecord replay(const SessionRecord& recorded) {
  const auto commands = commands_from_events(recorded.events);
  if (commands != recorded.commands) {
    throw Error(ErrorCode::SessionCorrupt, "command list disagrees with the command records in the log");
  }
  SessionRecord fresh;
  try {
    fresh = run_commands(recorded.scenario_yaml, recorded.seed_override, commands);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw Error(ErrorCode::SessionCorrupt, e.what());
    throw Error(ErrorCode::ReplayDivergence, std::string("replayed command was refused: ") + e.what());
  }
  const std::size_t n = std::min(fresh.events.size(), recorded.events.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (fresh.events[i] != recorded.events[i]) {
      throw Error(ErrorCode::ReplayDivergence, "event " + std::to_string(i) + " differs\n  recorded: " +
                                                   recorded.events[i] + "\n  replayed: " + fresh.events[i]);
    }
  }
  if (fresh.events.size() != recorded.events.size()) {
    throw Error(ErrorCode::ReplayDivergence, "recorded " + std::to_string(recorded.events.size()) +
                                                 " events, replay produced " +
                                                 std::to_string(fresh.events.size()));
  }
  return fresh;
}

SessionRecord replay(const std::filesystem::path& session_path) { return replay(read_session(session_path)); }

std::string plot_summary_csv(const std::vector<std::string>& event_lines) {
  std::ostringstream out;
  out.precision(17);
  out << "sim_time,true_x,true_y,odom_x,odom_y,fix_x,fix_y,discrepancy\n";
  for (const auto& line : event_lines) {
    const EventRecord r = parse_event(line);
    if (r.type != "fix") continue;
    try {
      const Json& truth = r.data.at("truth").at("odom");
      const Json& odom = r.data.at("odom");
      out << r.t << ',' << truth.at("x").get<double>() << ',' << truth.at("y").get<double>() << ','
          << odom.at("x").get<double>() << ',' << odom.at("y").get<double>() << ',';
      if (r.data.contains("fix_odom")) {
        out << r.data["fix_odom"].at("x").get<double>() << ',' << r.data["fix_odom"].at("y").get<double>()
            << ',' << r.data.at("discrepancy").get<double>();
      } else {
        out << ",,";
      }
      out << '\n';
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::SessionCorrupt, "event " + std::to_string(r.seq) + ": " + e.what());
    }
  }
  return out.str();
}

}  // namespace uwbloc::gateway
