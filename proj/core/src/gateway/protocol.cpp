#include "uwbloc/gateway/protocol.hpp"

#include "uwbloc/error.hpp"

namespace uwbloc::gateway::protocol {

namespace {

Json point(const Point2& p) { return Json{{"x", p.x}, {"y", p.y}}; }
Point2 point(const Json& j) { return {j.at("x").get<double>(), j.at("y").get<double>()}; }

template <typename T, typename F>
Json optional_json(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : Json(nullptr);
}

template <typename T, typename F>
std::optional<T> optional_from(const Json& j, const char* key, F&& f) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return f(j.at(key));
}

Json script_json(const std::optional<DriveScript>& script) {
  if (!script) return nullptr;
  Json out = Json::array();
  for (const auto& s : *script) {
    out.push_back(Json{{"linear", s.twist.linear}, {"angular", s.twist.angular}, {"duration", s.duration}});
  }
  return out;
}

std::optional<DriveScript> script_from(const Json& j) {
  if (!j.contains("script") || j.at("script").is_null()) return std::nullopt;
  DriveScript out;
  for (const auto& s : j.at("script")) {
    out.push_back({{s.at("linear").get<double>(), s.at("angular").get<double>()}, s.at("duration").get<double>()});
  }
  return out;
}

Json flags_json(const CommandFlags& f) {
  return Json{{"deploy", f.deploy},
              {"calibrate", f.calibrate},
              {"set_waypoint", f.set_waypoint},
              {"reset", f.reset},
              {"skip_reset", f.skip_reset}};
}

CommandFlags flags_from(const Json& j) {
  return {j.at("deploy").get<bool>(), j.at("calibrate").get<bool>(), j.at("set_waypoint").get<bool>(),
          j.at("reset").get<bool>(), j.at("skip_reset").get<bool>()};
}

struct Encoder {
  Json operator()(const Hello& m) const {
    return {{"agent", m.agent}, {"protocol_version", m.protocol_version}, {"scenario", m.scenario}};
  }
  Json operator()(const StateSnapshot& m) const {
    Json anchors = Json::array();
    for (const auto& a : m.anchors) anchors.push_back(Json{{"id", a.id}, {"uwb", point(a.uwb)}});
    return {{"sim_time", m.sim_time},
            {"phase", m.phase},
            {"odom", {{"x", m.odom.position.x}, {"y", m.odom.position.y}, {"heading", m.odom.heading}}},
            {"source", m.source},
            {"visual_healthy", m.visual_healthy},
            {"fix", optional_json(m.fix,
                                  [](const FixInfo& f) {
                                    return Json{{"t", f.t},
                                                {"uwb", point(f.uwb)},
                                                {"odom", optional_json(f.odom, [](const Point2& p) { return point(p); })},
                                                {"residual_rms", f.residual_rms},
                                                {"gdop", f.gdop}};
                                  })},
            {"discrepancy", optional_json(m.discrepancy, [](double d) { return Json(d); })},
            {"target", optional_json(m.target, [](const Point2& p) { return point(p); })},
            {"alignment", optional_json(m.alignment,
                                        [](const FrameTransform& t) {
                                          return Json{{"theta", t.rotation},
                                                      {"tx", t.translation.x},
                                                      {"ty", t.translation.y}};
                                        })},
            {"anchors", anchors},
            {"flags", flags_json(m.flags)},
            {"busy", m.busy},
            {"paused", m.paused},
            {"event_count", m.event_count}};
  }
  Json operator()(const Event& m) const { return {{"record", m.record}}; }
  Json operator()(const CommandDeploy&) const { return Json::object(); }
  Json operator()(const CommandCalibrate& m) const {
    Json j = Json::object();
    if (m.script) j["script"] = script_json(m.script);
    return j;
  }
  Json operator()(const SetWaypoint& m) const { return {{"x", m.x}, {"y", m.y}}; }
  Json operator()(const CommandReset&) const { return Json::object(); }
  Json operator()(const SkipReset&) const { return Json::object(); }
  Json operator()(const Pause&) const { return Json::object(); }
  Json operator()(const Resume&) const { return Json::object(); }
  Json operator()(const ErrorMessage& m) const {
    return {{"code", m.code}, {"message", m.message}, {"request", m.request}};
  }
};

StateSnapshot snapshot_from(const Json& j) {
  StateSnapshot s;
  s.sim_time = j.at("sim_time").get<double>();
  s.phase = j.at("phase").get<std::string>();
  const Json& o = j.at("odom");
  s.odom = {{o.at("x").get<double>(), o.at("y").get<double>()}, o.at("heading").get<double>()};
  s.source = j.at("source").get<std::string>();
  s.visual_healthy = j.at("visual_healthy").get<bool>();
  s.fix = optional_from<FixInfo>(j, "fix", [](const Json& f) {
    return FixInfo{f.at("t").get<double>(), point(f.at("uwb")),
                   optional_from<Point2>(f, "odom", [](const Json& p) { return point(p); }),
                   f.at("residual_rms").get<double>(), f.at("gdop").get<double>()};
  });
  s.discrepancy = optional_from<double>(j, "discrepancy", [](const Json& d) { return d.get<double>(); });
  s.target = optional_from<Point2>(j, "target", [](const Json& p) { return point(p); });
  s.alignment = optional_from<FrameTransform>(j, "alignment", [](const Json& t) {
    return FrameTransform{t.at("theta").get<double>(), {t.at("tx").get<double>(), t.at("ty").get<double>()}};
  });
  for (const auto& a : j.at("anchors")) {
    s.anchors.push_back({a.at("id").get<std::uint32_t>(), point(a.at("uwb"))});
  }
  s.flags = flags_from(j.at("flags"));
  s.busy = j.at("busy").get<bool>();
  s.paused = j.at("paused").get<bool>();
  s.event_count = j.at("event_count").get<std::size_t>();
  return s;
}

}  // namespace

bool CommandCalibrate::operator==(const CommandCalibrate& o) const {
  return command::Calibrate{script} == command::Calibrate{o.script};
}

std::string_view message_type(const Message& m) noexcept {
  static constexpr std::string_view kNames[] = {"hello",      "state_snapshot", "event",
                                                "command_deploy", "command_calibrate", "set_waypoint",
                                                "command_reset",  "skip_reset",    "pause",
                                                "resume",     "error"};
  return kNames[m.index()];
}

Json to_json(const Message& m) {
  Json j{{"type", message_type(m)}};
  j.update(std::visit(Encoder{}, m));
  return j;
}

std::string encode(const Message& m) { return to_json(m).dump(); }

Message from_json(const Json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::ProtocolError, "message must be a JSON object");
    const auto type = j.at("type").get<std::string>();
    if (type == "hello") {
      return Hello{j.at("agent").get<std::string>(), j.at("protocol_version").get<int>(),
                   j.value("scenario", std::string{})};
    }
    if (type == "state_snapshot") return snapshot_from(j);
    if (type == "event") return Event{j.at("record")};
    if (type == "command_deploy") return CommandDeploy{};
    if (type == "command_calibrate") return CommandCalibrate{script_from(j)};
    if (type == "set_waypoint") return SetWaypoint{j.at("x").get<double>(), j.at("y").get<double>()};
    if (type == "command_reset") return CommandReset{};
    if (type == "skip_reset") return SkipReset{};
    if (type == "pause") return Pause{};
    if (type == "resume") return Resume{};
    if (type == "error") {
      return ErrorMessage{j.at("code").get<std::string>(), j.at("message").get<std::string>(),
                          j.value("request", std::string{})};
    }
    throw Error(ErrorCode::ProtocolError, "unknown message type '" + type + "'");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed message: ") + e.what());
  }
}

Message decode(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("frame is not JSON: ") + e.what());
  }
  return from_json(j);
}

std::optional<Command> to_command(const Message& m) {
  if (std::holds_alternative<CommandDeploy>(m)) return command::Deploy{};
  if (const auto* c = std::get_if<CommandCalibrate>(&m)) return command::Calibrate{c->script};
  if (const auto* w = std::get_if<SetWaypoint>(&m)) return command::SetWaypoint{{{w->x, w->y}}};
  if (std::holds_alternative<CommandReset>(m)) return command::Reset{};
  if (std::holds_alternative<SkipReset>(m)) return command::SkipReset{};
  return std::nullopt;
}

StateSnapshot make_snapshot(const Mission& mission, bool paused) {
  const MissionState& st = mission.state();
  StateSnapshot s;
  s.sim_time = mission.sim_time();
  s.phase = std::string(to_string(st.phase));
  s.odom = st.odom.pose.value;
  s.source = std::string(to_string(st.odom.active_source));
  s.visual_healthy = st.odom.visual_healthy;
  if (st.latest_fix) {
    FixInfo f{st.latest_fix->timestamp, st.latest_fix->position.value, std::nullopt,
              st.latest_fix->residual_rms, st.latest_fix->gdop};
    if (st.alignment) f.odom = st.alignment->transform(st.latest_fix->position).value;
    s.fix = f;
  }
  s.discrepancy = st.discrepancy;
  if (st.target) s.target = st.target->value;
  if (st.alignment) s.alignment = st.alignment->transform.transform;
  if (mission.anchor_map()) {
    for (const auto& a : mission.anchor_map()->anchors()) s.anchors.push_back({a.id.value, a.position.value});
  }
  s.flags = mission.flags();
  s.busy = mission.busy();
  s.paused = paused;
  s.event_count = mission.log().size();
  return s;
}

}  // namespace uwbloc::gateway::protocol
