#include "uwbloc/mission.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uwbloc/error.hpp"

namespace uwbloc {

namespace {

constexpr double kTimeEpsilon = 1e-9;

Json point_json(const Point2& p) { return Json{{"x", p.x}, {"y", p.y}}; }

Json pose_json(const Pose2& p) {
  return Json{{"x", p.position.x}, {"y", p.position.y}, {"heading", p.heading}};
}

Json transform_json(const FrameTransform& t) {
  return Json{{"theta", t.rotation}, {"tx", t.translation.x}, {"ty", t.translation.y}};
}

Json script_json(const DriveScript& script) {
  Json out = Json::array();
  for (const auto& s : script) {
    out.push_back(Json{{"linear", s.twist.linear}, {"angular", s.twist.angular}, {"duration", s.duration}});
  }
  return out;
}

}  // namespace

std::string_view to_string(MissionPhase phase) noexcept {
  switch (phase) {
    case MissionPhase::Idle: return "Idle";
    case MissionPhase::Deploying: return "Deploying";
    case MissionPhase::CalibrationDrive: return "CalibrationDrive";
    case MissionPhase::AwaitWaypoint: return "AwaitWaypoint";
    case MissionPhase::Driving: return "Driving";
    case MissionPhase::AwaitResetDecision: return "AwaitResetDecision";
    case MissionPhase::Faulted: return "Faulted";
  }
  return "Unknown";
}

std::optional<MissionPhase> phase_from_string(std::string_view name) noexcept {
  for (MissionPhase p : {MissionPhase::Idle, MissionPhase::Deploying, MissionPhase::CalibrationDrive,
                         MissionPhase::AwaitWaypoint, MissionPhase::Driving,
                         MissionPhase::AwaitResetDecision, MissionPhase::Faulted}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

bool is_legal_transition(MissionPhase from, MissionPhase to) noexcept {
  using P = MissionPhase;
  if (to == P::Faulted) return from != P::Faulted;
  switch (from) {
    case P::Idle: return to == P::Deploying;
    case P::Deploying: return to == P::CalibrationDrive;
    case P::CalibrationDrive: return to == P::AwaitWaypoint;
    case P::AwaitWaypoint: return to == P::Driving;
    case P::Driving: return to == P::AwaitResetDecision;
    case P::AwaitResetDecision: return to == P::AwaitWaypoint;
    case P::Faulted: return false;
  }
  return false;
}

DriveScript default_calibration_script(const CalibrationConfig& c) {
  const double leg = c.leg_length / c.speed;
  const double turn = std::abs(c.turn_deg) * std::numbers::pi / 180.0 / c.turn_rate;
  const double turn_sign = c.turn_deg >= 0.0 ? 1.0 : -1.0;
  return {{{c.speed, 0.0}, leg}, {{0.0, turn_sign * c.turn_rate}, turn}, {{c.speed, 0.0}, leg}};
}

DriveScript straight_calibration_script(const CalibrationConfig& c) {
  return {{{c.speed, 0.0}, 2.0 * c.leg_length / c.speed}};
}

bool command::Calibrate::operator==(const Calibrate& o) const {
  if (script.has_value() != o.script.has_value()) return false;
  if (!script) return true;
  if (script->size() != o.script->size()) return false;
  for (std::size_t i = 0; i < script->size(); ++i) {
    const auto& a = (*script)[i];
    const auto& b = (*o.script)[i];
    if (!(a.twist == b.twist) || a.duration != b.duration) return false;
  }
  return true;
}

std::string_view command_name(const Command& c) noexcept {
  struct Visitor {
    std::string_view operator()(const command::Deploy&) const { return "deploy"; }
    std::string_view operator()(const command::Calibrate&) const { return "calibrate"; }
    std::string_view operator()(const command::SetWaypoint&) const { return "set_waypoint"; }
    std::string_view operator()(const command::Reset&) const { return "reset"; }
    std::string_view operator()(const command::SkipReset&) const { return "skip_reset"; }
  };
  return std::visit(Visitor{}, c);
}

Json command_to_json(const Command& c) {
  Json j{{"type", command_name(c)}};
  if (const auto* cal = std::get_if<command::Calibrate>(&c); cal && cal->script) {
    j["script"] = script_json(*cal->script);
  }
  if (const auto* wp = std::get_if<command::SetWaypoint>(&c)) {
    j["x"] = wp->target.value.x;
    j["y"] = wp->target.value.y;
  }
  return j;
}

Command command_from_json(const Json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "deploy") return command::Deploy{};
    if (type == "reset") return command::Reset{};
    if (type == "skip_reset") return command::SkipReset{};
    if (type == "set_waypoint") {
      return command::SetWaypoint{{{j.at("x").get<double>(), j.at("y").get<double>()}}};
    }
    if (type == "calibrate") {
      command::Calibrate cal;
      if (j.contains("script")) {
        DriveScript script;
        for (const auto& s : j.at("script")) {
          DriveSegment seg{{s.at("linear").get<double>(), s.at("angular").get<double>()},
                           s.at("duration").get<double>()};
          if (!(seg.duration >= 0.0)) throw Error(ErrorCode::ScriptInvalid, "negative segment duration");
          script.push_back(seg);
        }
        cal.script = std::move(script);
      }
      return cal;
    }
    throw Error(ErrorCode::ScriptInvalid, "unknown command '" + type + "'");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ScriptInvalid, std::string("malformed command: ") + e.what());
  }
}

Mission::Mission(const ScenarioConfig& config) : config_(config), world_(config) {
  const RandomStreams streams(config.seed);
  wheel_rng_ = streams.stream("wheel");
  visual_rng_ = streams.stream("visual");
  health_rng_ = streams.stream("health");
  state_.odom = update_health(state_.odom, 0.0, config_.odometry.visual, health_rng_);
  log_.append(0.0, "session_start",
              Json{{"scenario", config_.name},
                   {"seed", config_.seed},
                   {"start", pose_json(config_.start_pose())},
                   {"source", to_string(state_.odom.active_source)}});
}

bool Mission::busy() const noexcept {
  return calibrating_ || settling_ || state_.phase == MissionPhase::Driving;
}

bool Mission::fix_is_fresh() const noexcept {
  return state_.latest_fix &&
         sim_time() - state_.latest_fix->timestamp <= config_.mission.fix_staleness + kTimeEpsilon;
}

CommandFlags Mission::flags() const noexcept {
  CommandFlags f;
  if (busy()) return f;
  f.deploy = state_.phase == MissionPhase::Idle;
  f.calibrate = state_.phase == MissionPhase::CalibrationDrive;
  f.set_waypoint = state_.phase == MissionPhase::AwaitWaypoint;
  f.skip_reset = state_.phase == MissionPhase::AwaitResetDecision;
  f.reset = f.skip_reset && state_.alignment.has_value() && fix_is_fresh();
  return f;
}

void Mission::require(MissionPhase phase, std::string_view command) const {
  if (state_.phase != phase) {
    throw Error(ErrorCode::WrongPhase, std::string(command) + " is not accepted in phase " +
                                           std::string(to_string(state_.phase)));
  }
  require_idle(command);
}

void Mission::require_idle(std::string_view command) const {
  if (busy()) {
    throw Error(ErrorCode::WrongPhase, std::string(command) + " is not accepted while phase " +
                                           std::string(to_string(state_.phase)) + " is in progress");
  }
}

void Mission::transition(MissionPhase to) {
  if (!is_legal_transition(state_.phase, to)) {
    throw std::logic_error("illegal mission transition " + std::string(to_string(state_.phase)) +
                           " -> " + std::string(to_string(to)));
  }
  const MissionPhase from = state_.phase;
  state_.phase = to;
  log_.append(sim_time(), "phase",
              Json{{"from", to_string(from)}, {"to", to_string(to)}, {"odom", odom_json()},
                   {"truth", truth_json()}});
}

void Mission::enter_fault(const std::string& cause) {
  fault_ = cause;
  calibrating_ = false;
  settling_ = false;
  log_.append(sim_time(), "fault", Json{{"cause", cause}});
  transition(MissionPhase::Faulted);
}

void Mission::log_command(const Command& c) {
  log_.append(sim_time(), "command", command_to_json(c));
}

void Mission::apply(const Command& c) {
  std::visit(
      [this](const auto& cmd) {
        using T = std::decay_t<decltype(cmd)>;
        if constexpr (std::is_same_v<T, command::Deploy>) {
          command_deploy();
        } else if constexpr (std::is_same_v<T, command::Calibrate>) {
          run_calibration_drive(cmd.script);
        } else if constexpr (std::is_same_v<T, command::SetWaypoint>) {
          set_waypoint(cmd.target);
        } else if constexpr (std::is_same_v<T, command::Reset>) {
          command_pose_reset();
        } else {
          skip_reset();
        }
      },
      c);
}

void Mission::command_deploy() {
  require(MissionPhase::Idle, "deploy");
  log_command(command::Deploy{});
  transition(MissionPhase::Deploying);
  try {
    world_.deploy();
    anchors_ = sim::surveyed_anchors(world_.state());
  } catch (const Error& e) {
    enter_fault(e.what());
    return;
  }
  Json anchors = Json::array();
  for (const auto& a : world_.state().anchors) {
    const Anchor* known = anchors_->find(a.id);
    anchors.push_back(Json{{"id", a.id.value},
                           {"world", point_json(a.true_position.value)},
                           {"uwb", point_json(known->position.value)}});
  }
  log_.append(sim_time(), "deploy",
              Json{{"anchors", anchors},
                   {"uwb_to_world", transform_json(sim::uwb_frame(world_.state()).transform)},
                   {"true_alignment", transform_json(world_.true_alignment().transform)}});
  transition(MissionPhase::CalibrationDrive);
}

void Mission::run_calibration_drive(std::optional<DriveScript> script) {
  require(MissionPhase::CalibrationDrive, "calibrate");
  DriveScript chosen = script.value_or(default_calibration_script(config_.calibration));
  for (const auto& s : chosen) {
    if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) {
      throw Error(ErrorCode::ScriptInvalid, "calibration segment duration must be >= 0");
    }
  }
  log_command(command::Calibrate{script});
  script_ = std::move(chosen);
  segment_ = 0;
  segment_steps_left_ = 0;
  calibrating_ = true;
  calibration_failure_.reset();
  log_.append(sim_time(), "calibration_start",
              Json{{"script", script_json(script_)}, {"pairs", pairs_.size()}});
  while (segment_ < script_.size() &&
         (segment_steps_left_ = std::lround(script_[segment_].duration / config_.dt)) <= 0) {
    ++segment_;
  }
  if (segment_ >= script_.size()) finish_calibration();
}

void Mission::set_waypoint(const OdomPoint& target) {
  require(MissionPhase::AwaitWaypoint, "set_waypoint");
  const WorldPoint in_world = world_.odom_frame()(target);
  if (!target.value.finite() || !config_.arena.contains(in_world.value)) {
    throw Error(ErrorCode::TargetOutOfBounds, "waypoint lies outside the arena");
  }
  log_command(command::SetWaypoint{target});
  state_.target = target;
  turning_ = true;
  drive_started_ = sim_time();
  log_.append(sim_time(), "waypoint", Json{{"target", point_json(target.value)}, {"odom", odom_json()}});
  transition(MissionPhase::Driving);
}

void Mission::command_pose_reset() {
  require(MissionPhase::AwaitResetDecision, "reset");
  if (!state_.alignment) throw Error(ErrorCode::NoFixAvailable, "no alignment available");
  if (!fix_is_fresh()) throw Error(ErrorCode::NoFixAvailable, "no UWB fix within the staleness window");
  log_command(command::Reset{});
  const FixResult& fix = *state_.latest_fix;
  const OdomPoint fix_odom = state_.alignment->transform(fix.position);
  const Pose2 prior = state_.odom.pose.value;
  state_.odom = apply_pose_reset(state_.odom, fix_odom);
  log_.append(sim_time(), "reset",
              Json{{"prior", pose_json(prior)},
                   {"new", pose_json(state_.odom.pose.value)},
                   {"fix_uwb", point_json(fix.position.value)},
                   {"fix_odom", point_json(fix_odom.value)},
                   {"fix_time", fix.timestamp},
                   {"truth", truth_json()}});
  transition(MissionPhase::AwaitWaypoint);
  refresh_discrepancy();
}

void Mission::skip_reset() {
  require(MissionPhase::AwaitResetDecision, "skip_reset");
  log_command(command::SkipReset{});
  log_.append(sim_time(), "skip_reset", Json{{"odom", odom_json()}, {"truth", truth_json()}});
  transition(MissionPhase::AwaitWaypoint);
}

Twist Mission::drive_command() {
  const auto& k = config_.controller;
  const Pose2& pose = state_.odom.pose.value;
  const Point2 to_target = state_.target->value - pose.position;
  const double dist = to_target.norm();
  const double bearing_error = normalize_angle(std::atan2(to_target.y, to_target.x) - pose.heading);
  if (turning_ && std::abs(bearing_error) < k.heading_gate) turning_ = false;
  if (!turning_ && std::abs(bearing_error) > 5.0 * k.heading_gate) turning_ = true;
  if (turning_) return {0.0, std::clamp(k.heading_gain * bearing_error, -k.max_angular, k.max_angular)};
  return {std::min(k.max_linear, k.approach_gain * dist),
          std::clamp(k.heading_gain * bearing_error, -k.max_angular, k.max_angular)};
}

void Mission::step() {
  if (!busy()) throw std::logic_error("Mission::step called while waiting for the operator");

  if (state_.phase == MissionPhase::Driving) {
    if ((state_.target->value - state_.odom.pose.value.position).norm() <
        config_.controller.waypoint_tolerance) {
      arrive();
      return;
    }
    if (sim_time() - drive_started_ > config_.controller.drive_timeout) {
      enter_fault("drive timeout before reaching the waypoint");
      return;
    }
  }

  Twist cmd{};
  if (calibrating_) {
    cmd = script_[segment_].twist;
  } else if (state_.phase == MissionPhase::Driving) {
    cmd = drive_command();
  }

  const sim::StepOutput out = world_.step(cmd, config_.dt);
  process_ticks(out);
  if (out.round) process_round(*out.round);

  if (calibrating_ && --segment_steps_left_ <= 0) {
    ++segment_;
    while (segment_ < script_.size() &&
           (segment_steps_left_ = std::lround(script_[segment_].duration / config_.dt)) <= 0) {
      ++segment_;
    }
    if (segment_ >= script_.size()) finish_calibration();
  }

  if (settling_) {
    const bool fresh = state_.latest_fix && state_.latest_fix->timestamp > arrival_time_ + kTimeEpsilon;
    if (fresh || sim_time() - arrival_time_ >= config_.mission.settle_timeout - kTimeEpsilon) {
      finish_settling();
    }
  }
  refresh_discrepancy();
}

void Mission::run_until_idle() {
  while (busy()) step();
}

void Mission::process_ticks(const sim::StepOutput& out) {
  const auto integrate = [this](const sim::OdometryTick& tick) {
    if (!(tick.dt > 0.0)) return;
    if (tick.source == OdometrySource::Visual) {
      state_.odom = integrate_visual(state_.odom, tick.delta, config_.odometry.visual, visual_rng_);
    } else {
      state_.odom = integrate_wheel(state_.odom, tick.motion, tick.dt, config_.odometry.wheel, wheel_rng_);
    }
  };

  const OdometrySource active = state_.odom.active_source;
  for (const auto& tick : out.ticks) {
    if (tick.source == active) integrate(tick);
  }

  OdometryState health = update_health(state_.odom, sim_time(), config_.odometry.visual, health_rng_);
  if (health.active_source != active) {
    // Hand over exactly at this step boundary: the outgoing source covers
    // everything up to now, the incoming one starts from now.
    integrate(world_.flush_odometry(active));
    world_.restart_odometry(health.active_source);
    health.pose = state_.odom.pose;
    state_.odom = health;
    log_.append(sim_time(), "source",
                Json{{"active", to_string(state_.odom.active_source)},
                     {"visual_healthy", state_.odom.visual_healthy},
                     {"odom", odom_json()}});
  } else {
    health.pose = state_.odom.pose;
    state_.odom = health;
  }
}

void Mission::process_round(const sim::RangingRound& round) {
  const double window = config_.ranging.selection_window;
  std::erase_if(recent_, [&](const RangeMeasurement& m) {
    return m.timestamp < round.time - window - kTimeEpsilon;
  });
  Json measurements = Json::array();
  for (const auto& m : round.measurements) {
    recent_.push_back(m);
    measurements.push_back(Json{{"id", m.anchor_id.value}, {"d", m.distance}, {"q", to_string(m.quality)}});
  }
  log_.append(round.time, "round", Json{{"m", measurements}});
  if (!anchors_) return;

  const auto selected = select_measurements(recent_, window, round.time);
  FixResult fix;
  try {
    fix = trilaterate(*anchors_, selected, std::nullopt, config_.locate);
  } catch (const Error& e) {
    log_.append(round.time, "fix_failed", Json{{"code", to_string(e.code())}, {"reason", e.what()}});
    return;
  }
  fix.timestamp = round.time;
  state_.latest_fix = fix;
  if (calibrating_) pairs_ = record_pair(std::move(pairs_), fix, state_.odom.pose, round.time);

  Json used = Json::array();
  for (const auto& id : fix.used_anchor_ids) used.push_back(id.value);
  const UwbPoint truth = world_.true_position_uwb();
  Json data{{"uwb", point_json(fix.position.value)},
            {"rms", fix.residual_rms},
            {"gdop", fix.gdop},
            {"iterations", fix.iterations},
            {"used", used},
            {"odom", odom_json()},
            {"truth", truth_json()},
            {"error", distance(fix.position.value, truth.value)}};
  if (state_.alignment) {
    const OdomPoint fix_odom = state_.alignment->transform(fix.position);
    data["fix_odom"] = point_json(fix_odom.value);
    data["discrepancy"] = distance(fix_odom.value, state_.odom.pose.value.position);
  }
  if (calibrating_) data["pair"] = pairs_.size();
  log_.append(round.time, "fix", std::move(data));
}

void Mission::finish_calibration() {
  calibrating_ = false;
  try {
    if (pairs_.size() < 3) {
      throw Error(ErrorCode::TooFewPairs, std::to_string(pairs_.size()) + " pairs recorded");
    }
    const Observability obs = assess_observability(pairs_);
    if (!(obs.collinearity_ratio > config_.calibration.min_collinearity)) {
      throw Error(ErrorCode::DegenerateGeometry,
                  "calibration drive collinearity ratio " + std::to_string(obs.collinearity_ratio) +
                      " does not exceed " + std::to_string(config_.calibration.min_collinearity));
    }
    AlignmentResult result = solve_alignment(pairs_, config_.calibration.solver);
    const FrameTransform truth = world_.true_alignment().transform;
    state_.alignment = result;
    log_.append(sim_time(), "alignment",
                Json{{"transform", transform_json(result.transform.transform)},
                     {"closed_form", transform_json(result.closed_form)},
                     {"rms", result.rms_error},
                     {"pairs", result.pair_count},
                     {"iterations", result.iterations},
                     {"spread", obs.spread},
                     {"collinearity_ratio", obs.collinearity_ratio},
                     {"truth", transform_json(truth)},
                     {"rotation_error", std::abs(normalize_angle(result.transform.transform.rotation - truth.rotation))},
                     {"translation_error", (result.transform.transform.translation - truth.translation).norm()}});
  } catch (const Error& e) {
    calibration_failure_ = e.what();
    log_.append(sim_time(), "calibration_failed",
                Json{{"code", to_string(ErrorCode::CalibrationFailed)},
                     {"cause", to_string(e.code())},
                     {"reason", e.what()},
                     {"pairs", pairs_.size()}});
    return;
  }
  transition(MissionPhase::AwaitWaypoint);
}

void Mission::arrive() {
  arrival_time_ = sim_time();
  settling_ = true;
  log_.append(sim_time(), "arrival",
              Json{{"target", point_json(state_.target->value)}, {"odom", odom_json()}, {"truth", truth_json()}});
  transition(MissionPhase::AwaitResetDecision);
}

void Mission::finish_settling() {
  settling_ = false;
  refresh_discrepancy();
  Json data{{"odom", odom_json()}, {"truth", truth_json()}};
  data["discrepancy"] = state_.discrepancy ? Json(*state_.discrepancy) : Json(nullptr);
  if (state_.latest_fix) {
    data["fix_uwb"] = point_json(state_.latest_fix->position.value);
    data["fix_time"] = state_.latest_fix->timestamp;
  }
  log_.append(sim_time(), "discrepancy", std::move(data));
}

void Mission::refresh_discrepancy() {
  if (state_.alignment && fix_is_fresh()) {
    const OdomPoint fix_odom = state_.alignment->transform(state_.latest_fix->position);
    state_.discrepancy = distance(fix_odom.value, state_.odom.pose.value.position);
  } else {
    state_.discrepancy.reset();
  }
}

Json Mission::odom_json() const {
  Json j = pose_json(state_.odom.pose.value);
  j["source"] = to_string(state_.odom.active_source);
  return j;
}

Json Mission::truth_json() const {
  Json j{{"world", pose_json(world_.state().true_pose.value)},
         {"odom", pose_json(world_.true_pose_odom().value)}};
  if (world_.state().deployed()) j["uwb"] = point_json(world_.true_position_uwb().value);
  return j;
}

}  // namespace uwbloc
