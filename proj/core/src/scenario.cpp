#include "uwbloc/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

#include "uwbloc/error.hpp"

namespace uwbloc {

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, key + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) invalid(path.empty() ? "<root>" : path, "expected a mapping");
}

void check_keys(const YAML::Node& node, const std::string& path,
                std::initializer_list<const char*> allowed) {
  require_map(node, path);
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known.contains(key)) invalid(join(path, key), "unknown key");
  }
}

template <typename T>
void read(const YAML::Node& parent, const std::string& path, const char* key, T& out) {
  const YAML::Node n = parent[key];
  if (!n) return;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    invalid(join(path, key), "wrong value type");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) invalid(join(path, key), "must be finite");
  }
}

void read_point(const YAML::Node& parent, const std::string& path, const char* key, Point2& out) {
  const YAML::Node n = parent[key];
  if (!n) return;
  const std::string p = join(path, key);
  check_keys(n, p, {"x", "y"});
  read(n, p, "x", out.x);
  read(n, p, "y", out.y);
}

void parse_deployment(const YAML::Node& n, const std::string& path, DeploymentPlan& plan) {
  check_keys(n, path, {"origin_drop", "launches"});
  read_point(n, path, "origin_drop", plan.origin_drop);
  if (const YAML::Node launches = n["launches"]) {
    const std::string lp = join(path, "launches");
    if (!launches.IsSequence()) invalid(lp, "expected a sequence");
    plan.launches.clear();
    for (std::size_t i = 0; i < launches.size(); ++i) {
      const std::string ip = lp + "[" + std::to_string(i) + "]";
      const YAML::Node l = launches[i];
      check_keys(l, ip, {"bearing_deg", "range", "scatter_range", "scatter_bearing_deg"});
      LaunchSpec spec;
      read(l, ip, "bearing_deg", spec.bearing_deg);
      read(l, ip, "range", spec.nominal_range);
      read(l, ip, "scatter_range", spec.scatter_sigma_range);
      read(l, ip, "scatter_bearing_deg", spec.scatter_sigma_bearing_deg);
      plan.launches.push_back(spec);
    }
  }
}

void parse_ranging(const YAML::Node& n, const std::string& path, RangingConfig& r) {
  check_keys(n, path,
             {"rate_hz", "reply_delay_tag", "reply_delay_anchor", "clock_drift_ppm", "noise",
              "per_anchor_bias", "selection_window"});
  read(n, path, "rate_hz", r.rate_hz);
  read(n, path, "reply_delay_tag", r.reply_delay_tag);
  read(n, path, "reply_delay_anchor", r.reply_delay_anchor);
  read(n, path, "clock_drift_ppm", r.clock_drift_ppm);
  read(n, path, "selection_window", r.selection_window);
  if (const YAML::Node noise = n["noise"]) {
    const std::string np = join(path, "noise");
    check_keys(noise, np, {"bias", "sigma", "dropout_probability"});
    read(noise, np, "bias", r.noise.bias);
    read(noise, np, "sigma", r.noise.sigma);
    read(noise, np, "dropout_probability", r.noise.dropout_probability);
  }
  if (const YAML::Node bias = n["per_anchor_bias"]) {
    const std::string bp = join(path, "per_anchor_bias");
    require_map(bias, bp);
    r.per_anchor_bias.clear();
    for (const auto& kv : bias) {
      std::uint32_t id = 0;
      double value = 0.0;
      try {
        id = kv.first.as<std::uint32_t>();
        value = kv.second.as<double>();
      } catch (const YAML::Exception&) {
        invalid(join(bp, kv.first.Scalar()), "expected <anchor id>: <meters>");
      }
      r.per_anchor_bias[id] = value;
    }
  }
}

void parse_odometry(const YAML::Node& n, const std::string& path, OdometryConfig& o) {
  check_keys(n, path, {"wheel", "visual"});
  if (const YAML::Node w = n["wheel"]) {
    const std::string wp = join(path, "wheel");
    check_keys(w, wp, {"rate_hz", "slip_mean", "slip_sigma", "heading_noise_sigma"});
    read(w, wp, "rate_hz", o.wheel_rate_hz);
    read(w, wp, "slip_mean", o.wheel.slip_factor_mean);
    read(w, wp, "slip_sigma", o.wheel.slip_factor_sigma);
    read(w, wp, "heading_noise_sigma", o.wheel.heading_noise_sigma);
  }
  if (const YAML::Node v = n["visual"]) {
    const std::string vp = join(path, "visual");
    check_keys(v, vp,
               {"enabled", "rate_hz", "drift_sigma", "dropout_rate_per_min", "dropout_duration",
                "forced_dropouts"});
    read(v, vp, "enabled", o.visual.enabled);
    read(v, vp, "rate_hz", o.visual_rate_hz);
    read(v, vp, "drift_sigma", o.visual.drift_sigma);
    read(v, vp, "dropout_rate_per_min", o.visual.dropout_rate);
    read(v, vp, "dropout_duration", o.visual.dropout_duration);
    if (const YAML::Node forced = v["forced_dropouts"]) {
      const std::string fp = join(vp, "forced_dropouts");
      if (!forced.IsSequence()) invalid(fp, "expected a sequence");
      o.visual.forced_dropouts.clear();
      for (std::size_t i = 0; i < forced.size(); ++i) {
        const std::string ip = fp + "[" + std::to_string(i) + "]";
        check_keys(forced[i], ip, {"start", "duration"});
        DropoutWindow w;
        read(forced[i], ip, "start", w.start);
        read(forced[i], ip, "duration", w.duration);
        o.visual.forced_dropouts.push_back(w);
      }
    }
  }
}

void positive(double v, const std::string& key) {
  if (!(v > 0.0)) invalid(key, "must be > 0");
}

void non_negative(double v, const std::string& key) {
  if (!(v >= 0.0)) invalid(key, "must be >= 0");
}

}  // namespace

Pose2 ScenarioConfig::start_pose() const {
  return make_pose(start_x, start_y, start_heading_deg * std::numbers::pi / 180.0);
}

void ScenarioConfig::validate() const {
  if (!(dt > 0.0 && dt <= 0.1)) invalid("dt", "must lie in (0, 0.1]");
  if (!(arena.min_x < arena.max_x)) invalid("arena.max_x", "must exceed arena.min_x");
  if (!(arena.min_y < arena.max_y)) invalid("arena.max_y", "must exceed arena.min_y");
  if (!arena.contains({start_x, start_y})) invalid("start", "rover start lies outside the arena");

  if (deployment.launches.empty()) invalid("deployment.launches", "at least one launch is required");
  if (deployment.launches.size() + 1 > DeploymentPlan::kMaxAnchors) {
    invalid("deployment.launches", "at most 4 launches (5 anchors in total)");
  }
  for (std::size_t i = 0; i < deployment.launches.size(); ++i) {
    const std::string p = "deployment.launches[" + std::to_string(i) + "]";
    positive(deployment.launches[i].nominal_range, p + ".range");
    non_negative(deployment.launches[i].scatter_sigma_range, p + ".scatter_range");
    non_negative(deployment.launches[i].scatter_sigma_bearing_deg, p + ".scatter_bearing_deg");
  }

  positive(ranging.rate_hz, "ranging.rate_hz");
  positive(ranging.reply_delay_tag, "ranging.reply_delay_tag");
  positive(ranging.reply_delay_anchor, "ranging.reply_delay_anchor");
  if (!(ranging.clock_drift_ppm >= 0.0 && ranging.clock_drift_ppm <= 100.0)) {
    invalid("ranging.clock_drift_ppm", "must lie in [0, 100]");
  }
  non_negative(ranging.noise.sigma, "ranging.noise.sigma");
  if (!(ranging.noise.dropout_probability >= 0.0 && ranging.noise.dropout_probability <= 1.0)) {
    invalid("ranging.noise.dropout_probability", "must lie in [0, 1]");
  }
  positive(ranging.selection_window, "ranging.selection_window");

  if (locate.max_iterations < 1) invalid("locate.max_iterations", "must be >= 1");
  if (locate.huber_delta && !(*locate.huber_delta > 0.0)) invalid("locate.huber_delta", "must be > 0");

  positive(odometry.wheel_rate_hz, "odometry.wheel.rate_hz");
  positive(odometry.visual_rate_hz, "odometry.visual.rate_hz");
  non_negative(odometry.wheel.slip_factor_sigma, "odometry.wheel.slip_sigma");
  non_negative(odometry.wheel.heading_noise_sigma, "odometry.wheel.heading_noise_sigma");
  if (!(odometry.wheel.slip_factor_mean >= 0.0 && odometry.wheel.slip_factor_mean <= 0.5)) {
    invalid("odometry.wheel.slip_mean", "must lie in [0, 0.5]");
  }
  non_negative(odometry.visual.drift_sigma, "odometry.visual.drift_sigma");
  non_negative(odometry.visual.dropout_rate, "odometry.visual.dropout_rate_per_min");
  non_negative(odometry.visual.dropout_duration, "odometry.visual.dropout_duration");
  for (std::size_t i = 0; i < odometry.visual.forced_dropouts.size(); ++i) {
    non_negative(odometry.visual.forced_dropouts[i].duration,
                 "odometry.visual.forced_dropouts[" + std::to_string(i) + "].duration");
  }

  positive(controller.max_linear, "controller.max_linear");
  positive(controller.max_angular, "controller.max_angular");
  positive(controller.waypoint_tolerance, "controller.waypoint_tolerance");
  positive(controller.heading_gate, "controller.heading_gate");
  positive(controller.heading_gain, "controller.heading_gain");
  positive(controller.approach_gain, "controller.approach_gain");
  positive(controller.drive_timeout, "controller.drive_timeout");

  positive(calibration.leg_length, "calibration.leg_length");
  positive(calibration.speed, "calibration.speed");
  positive(calibration.turn_rate, "calibration.turn_rate");
  non_negative(calibration.min_collinearity, "calibration.min_collinearity");

  non_negative(mission.fix_staleness, "mission.fix_staleness");
  non_negative(mission.settle_timeout, "mission.settle_timeout");
}

ScenarioConfig parse_scenario(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    invalid("<document>", std::string("YAML syntax error: ") + e.what());
  }
  ScenarioConfig c;
  if (!root || root.IsNull()) {
    c.validate();
    return c;
  }
  check_keys(root, "",
             {"name", "seed", "dt", "arena", "start", "deployment", "ranging", "locate",
              "odometry", "controller", "calibration", "mission"});
  read(root, "", "name", c.name);
  read(root, "", "seed", c.seed);
  read(root, "", "dt", c.dt);
  if (const YAML::Node a = root["arena"]) {
    check_keys(a, "arena", {"min_x", "min_y", "max_x", "max_y"});
    read(a, "arena", "min_x", c.arena.min_x);
    read(a, "arena", "min_y", c.arena.min_y);
    read(a, "arena", "max_x", c.arena.max_x);
    read(a, "arena", "max_y", c.arena.max_y);
  }
  if (const YAML::Node s = root["start"]) {
    check_keys(s, "start", {"x", "y", "heading_deg"});
    read(s, "start", "x", c.start_x);
    read(s, "start", "y", c.start_y);
    read(s, "start", "heading_deg", c.start_heading_deg);
  }
  if (const YAML::Node d = root["deployment"]) parse_deployment(d, "deployment", c.deployment);
  if (const YAML::Node r = root["ranging"]) parse_ranging(r, "ranging", c.ranging);
  if (const YAML::Node l = root["locate"]) {
    check_keys(l, "locate", {"max_iterations", "huber_delta"});
    read(l, "locate", "max_iterations", c.locate.max_iterations);
    if (l["huber_delta"] && !l["huber_delta"].IsNull()) {
      double delta = 0.0;
      read(l, "locate", "huber_delta", delta);
      c.locate.huber_delta = delta;
    }
  }
  if (const YAML::Node o = root["odometry"]) parse_odometry(o, "odometry", c.odometry);
  if (const YAML::Node k = root["controller"]) {
    check_keys(k, "controller",
               {"max_linear", "max_angular", "waypoint_tolerance", "heading_gate", "heading_gain",
                "approach_gain", "drive_timeout"});
    read(k, "controller", "max_linear", c.controller.max_linear);
    read(k, "controller", "max_angular", c.controller.max_angular);
    read(k, "controller", "waypoint_tolerance", c.controller.waypoint_tolerance);
    read(k, "controller", "heading_gate", c.controller.heading_gate);
    read(k, "controller", "heading_gain", c.controller.heading_gain);
    read(k, "controller", "approach_gain", c.controller.approach_gain);
    read(k, "controller", "drive_timeout", c.controller.drive_timeout);
  }
  if (const YAML::Node k = root["calibration"]) {
    check_keys(k, "calibration", {"leg_length", "speed", "turn_rate", "turn_deg", "min_collinearity"});
    read(k, "calibration", "leg_length", c.calibration.leg_length);
    read(k, "calibration", "speed", c.calibration.speed);
    read(k, "calibration", "turn_rate", c.calibration.turn_rate);
    read(k, "calibration", "turn_deg", c.calibration.turn_deg);
    read(k, "calibration", "min_collinearity", c.calibration.min_collinearity);
  }
  if (const YAML::Node m = root["mission"]) {
    check_keys(m, "mission", {"fix_staleness", "settle_timeout"});
    read(m, "mission", "fix_staleness", c.mission.fix_staleness);
    read(m, "mission", "settle_timeout", c.mission.settle_timeout);
  }
  c.validate();
  return c;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text_file(path));
}

}  // namespace uwbloc
