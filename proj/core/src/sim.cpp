#include "uwbloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "uwbloc/error.hpp"

namespace uwbloc::sim {

namespace {

constexpr double kScheduleEpsilon = 1e-9;
constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

WorldState deploy_anchors(WorldState world, const DeploymentPlan& plan, const ArenaBounds& arena,
                          Rng& rng) {
  if (world.deployed()) throw Error(ErrorCode::AlreadyDeployed, "anchors are already deployed");
  if (plan.launches.size() + 1 > DeploymentPlan::kMaxAnchors) {
    throw Error(ErrorCode::AnchorCapacity,
                std::to_string(plan.launches.size() + 1) + " anchors exceed the capacity of " +
                    std::to_string(DeploymentPlan::kMaxAnchors));
  }
  const Pose2& rover = world.true_pose.value;
  std::vector<AnchorState> anchors;
  anchors.push_back({AnchorId{0}, {apply_transform(transform_from_pose(rover), plan.origin_drop)}, true});
  for (std::size_t i = 0; i < plan.launches.size(); ++i) {
    const LaunchSpec& l = plan.launches[i];
    const double range = l.nominal_range + draw_gaussian(rng, 0.0, l.scatter_sigma_range);
    const double bearing = rover.heading + l.bearing_deg * kDegToRad +
                           draw_gaussian(rng, 0.0, l.scatter_sigma_bearing_deg * kDegToRad);
    const Point2 landing = rover.position + Point2{std::cos(bearing), std::sin(bearing)} * range;
    anchors.push_back({AnchorId{static_cast<std::uint32_t>(i + 1)}, {landing}, true});
  }
  for (const auto& a : anchors) {
    if (!arena.contains(a.true_position.value)) {
      throw Error(ErrorCode::OutOfArena, "anchor " + std::to_string(a.id.value) + " landed at (" +
                                             std::to_string(a.true_position.value.x) + ", " +
                                             std::to_string(a.true_position.value.y) +
                                             ") outside the arena");
    }
  }
  world.anchors = std::move(anchors);
  return world;
}

std::vector<std::pair<AnchorId, double>> true_ranges(const WorldState& world) {
  if (!world.deployed()) throw Error(ErrorCode::NotDeployed, "no anchors deployed");
  std::vector<std::pair<AnchorId, double>> out;
  for (const auto& a : world.anchors) {
    if (!a.deployed) continue;
    out.emplace_back(a.id, distance(world.true_pose.value.position, a.true_position.value));
  }
  return out;
}

FrameMap<FrameId::Uwb, FrameId::World> uwb_frame(const WorldState& world) {
  if (world.anchors.size() < 2) throw Error(ErrorCode::NotDeployed, "constellation frame needs 2 anchors");
  const Point2 origin = world.anchors[0].true_position.value;
  const Point2 axis = world.anchors[1].true_position.value - origin;
  return {FrameTransform{normalize_angle(std::atan2(axis.y, axis.x)), origin}};
}

AnchorMap surveyed_anchors(const WorldState& world) {
  const auto to_uwb = uwb_frame(world).inverse();
  std::vector<Anchor> anchors;
  for (const auto& a : world.anchors) {
    if (a.deployed) anchors.push_back({a.id, to_uwb(a.true_position)});
  }
  return AnchorMap(std::move(anchors));
}

World::World(const ScenarioConfig& config)
    : config_(config),
      odom_frame_{transform_from_pose(config.start_pose())},
      ranging_period_(1.0 / config.ranging.rate_hz),
      next_round_(1.0 / config.ranging.rate_hz) {
  config_.validate();
  const RandomStreams streams(config.seed);
  deployment_rng_ = streams.stream("deployment");
  ranging_rng_ = streams.stream("ranging");
  Rng clocks = streams.stream("clocks");

  state_.true_pose = {config.start_pose()};
  state_.rng_seed = config.seed;
  const double ppm = config.ranging.clock_drift_ppm * 1e-6;
  auto draw_clock = [&]() {
    const double offset = draw_uniform(clocks, 0.0, 1.0);
    const double drift = ppm > 0.0 ? draw_uniform(clocks, -ppm, ppm) : 0.0;
    return ClockModel(offset, drift);
  };
  state_.tag_clock = draw_clock();
  for (std::size_t i = 0; i < DeploymentPlan::kMaxAnchors; ++i) {
    state_.anchor_clocks.push_back(draw_clock());
  }

  wheel_clock_.period = 1.0 / config.odometry.wheel_rate_hz;
  wheel_clock_.next = wheel_clock_.period;
  wheel_clock_.last_pose = state_.true_pose.value;
  visual_clock_.period = 1.0 / config.odometry.visual_rate_hz;
  visual_clock_.next = visual_clock_.period;
  visual_clock_.last_pose = state_.true_pose.value;
}

void World::deploy() {
  state_ = deploy_anchors(state_, config_.deployment, config_.arena, deployment_rng_);
}

Twist World::clamp(const Twist& command) const {
  return {std::clamp(command.linear, -config_.controller.max_linear, config_.controller.max_linear),
          std::clamp(command.angular, -config_.controller.max_angular,
                     config_.controller.max_angular)};
}

StepOutput World::step(const Twist& command, double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw Error(ErrorCode::InvalidDt, "step dt " + std::to_string(dt) + " outside (0, 0.1]");
  }
  const Twist u = clamp(command);
  state_.true_pose.value = advance_unicycle(state_.true_pose.value, u.linear, u.angular, dt);
  // Quantized to whole nanoseconds so repeated dt sums land exactly on
  // schedule boundaries such as forced dropout windows.
  state_.sim_time = std::round((state_.sim_time + dt) * 1e9) / 1e9;
  for (TickClock* c : {&wheel_clock_, &visual_clock_}) {
    c->distance += u.linear * dt;
    c->turned += u.angular * dt;
  }

  StepOutput out;
  if (state_.sim_time >= wheel_clock_.next - kScheduleEpsilon) {
    out.ticks.push_back(emit_tick(OdometrySource::Wheel, wheel_clock_));
  }
  if (state_.sim_time >= visual_clock_.next - kScheduleEpsilon) {
    out.ticks.push_back(emit_tick(OdometrySource::Visual, visual_clock_));
  }
  if (state_.sim_time >= next_round_ - kScheduleEpsilon) {
    while (next_round_ <= state_.sim_time + kScheduleEpsilon) next_round_ += ranging_period_;
    if (state_.deployed()) out.round = ranging_round();
  }
  return out;
}

OdometryTick World::emit_tick(OdometrySource source, TickClock& clock) {
  const Pose2& now = state_.true_pose.value;
  const Point2 world_delta = now.position - clock.last_pose.position;
  const Point2 odom_delta = rotate(-odom_frame_.transform.rotation, world_delta);
  OdometryTick tick;
  tick.source = source;
  tick.time = state_.sim_time;
  tick.dt = state_.sim_time - clock.last_time;
  tick.delta = {odom_delta.x, odom_delta.y, clock.turned};
  tick.motion = {clock.distance / tick.dt, clock.turned / tick.dt};

  clock.last_time = state_.sim_time;
  clock.last_pose = now;
  clock.distance = 0.0;
  clock.turned = 0.0;
  while (clock.next <= state_.sim_time + kScheduleEpsilon) clock.next += clock.period;
  return tick;
}

World::TickClock& World::clock_for(OdometrySource source) noexcept {
  return source == OdometrySource::Wheel ? wheel_clock_ : visual_clock_;
}

OdometryTick World::flush_odometry(OdometrySource source) {
  TickClock& clock = clock_for(source);
  OdometryTick tick;
  tick.source = source;
  tick.time = state_.sim_time;
  if (state_.sim_time > clock.last_time) {
    tick = emit_tick(source, clock);
  }
  return tick;
}

void World::restart_odometry(OdometrySource source) {
  TickClock& clock = clock_for(source);
  clock.last_time = state_.sim_time;
  clock.last_pose = state_.true_pose.value;
  clock.distance = 0.0;
  clock.turned = 0.0;
}

RangingRound World::ranging_round() {
  RangingRound round;
  round.time = state_.sim_time;
  const auto& r = config_.ranging;
  for (std::size_t i = 0; i < state_.anchors.size(); ++i) {
    const AnchorState& a = state_.anchors[i];
    if (!a.deployed) continue;
    const double d = distance(state_.true_pose.value.position, a.true_position.value);
    const TwrExchange e = simulate_exchange(d, state_.tag_clock, state_.anchor_clocks[i],
                                            r.reply_delay_tag, r.reply_delay_anchor);
    RangeNoiseModel noise = r.noise;
    if (auto it = r.per_anchor_bias.find(a.id.value); it != r.per_anchor_bias.end()) {
      noise.bias += it->second;
    }
    double twr_distance = 0.0;
    bool consistent = true;
    try {
      twr_distance = sds_twr_tof(e) * kSpeedOfLight;
    } catch (const Error&) {
      consistent = false;
    }
    RangeMeasurement m = measure_range(a.id, twr_distance, round.time, noise, ranging_rng_);
    if (!consistent) m.quality = RangeQuality::Rejected;
    round.measurements.push_back(m);
  }
  return round;
}

FrameMap<FrameId::Uwb, FrameId::Odom> World::true_alignment() const {
  return chain(odom_frame_.inverse(), uwb_frame(state_));
}

UwbPoint World::true_position_uwb() const {
  return uwb_frame(state_).inverse()(WorldPoint{state_.true_pose.value.position});
}

OdomPose World::true_pose_odom() const { return odom_frame_.inverse()(state_.true_pose); }

}  // namespace uwbloc::sim
