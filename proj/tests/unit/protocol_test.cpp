#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "uwbloc/gateway/protocol.hpp"

using namespace uwbloc;
using namespace uwbloc::gateway::protocol;

namespace {

class Generator {
 public:
  explicit Generator(unsigned seed) : rng_(seed) {}

  Message any() {
    switch (pick(11)) {
      case 0: return Hello{text(), pick(3), text()};
      case 1: return snapshot();
      case 2: return Event{Json{{"seq", pick(1000)}, {"t", real()}, {"type", text()}, {"data", {{"v", real()}}}}};
      case 3: return CommandDeploy{};
      case 4: {
        CommandCalibrate c;
        if (coin()) {
          c.script = DriveScript{};
          for (int i = pick(4); i > 0; --i) c.script->push_back({{real(), real()}, std::abs(real())});
        }
        return c;
      }
      case 5: return SetWaypoint{real(), real()};
      case 6: return CommandReset{};
      case 7: return SkipReset{};
      case 8: return Pause{};
      case 9: return Resume{};
      default: return ErrorMessage{text(), text(), text()};
    }
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  bool coin() { return pick(2) == 1; }
  double real() { return std::uniform_real_distribution<double>(-1e3, 1e3)(rng_); }
  Point2 point() { return {real(), real()}; }
  std::string text() {
    static const std::vector<std::string> units = {"a", "b", "X", " ", "_", "\"", "\\", "/", "\n", "\t", "{", "]", ":", ",", "\xc3\xa9"};
    std::string s;
    for (int i = pick(12); i > 0; --i) s += units[pick(static_cast<int>(units.size()))];
    return s;
  }

  StateSnapshot snapshot() {
    StateSnapshot s;
    s.sim_time = std::abs(real());
    s.phase = text();
    s.odom = {point(), real()};
    s.source = coin() ? "visual" : "wheel";
    s.visual_healthy = coin();
    if (coin()) {
      FixInfo f{std::abs(real()), point(), std::nullopt, std::abs(real()), std::abs(real())};
      if (coin()) f.odom = point();
      s.fix = f;
    }
    if (coin()) s.discrepancy = std::abs(real());
    if (coin()) s.target = point();
    if (coin()) s.alignment = FrameTransform{real(), point()};
    for (int i = pick(6); i > 0; --i) s.anchors.push_back({static_cast<std::uint32_t>(pick(100)), point()});
    s.flags = {coin(), coin(), coin(), coin(), coin()};
    s.busy = coin();
    s.paused = coin();
    s.event_count = static_cast<std::size_t>(pick(100000));
    return s;
  }

  std::mt19937 rng_;
};

}  // namespace

TEST(Protocol, RandomMessagesRoundTrip) {
  Generator gen(2024);
  for (int i = 0; i < 2000; ++i) {
    const Message m = gen.any();
    const std::string wire = encode(m);
    const Message back = decode(wire);
    ASSERT_EQ(back.index(), m.index()) << wire;
    EXPECT_TRUE(back == m) << wire;
    EXPECT_EQ(encode(back), wire);
  }
}

TEST(Protocol, EveryMessageCarriesItsType) {
  EXPECT_EQ(to_json(SetWaypoint{1.0, 2.0}).dump(), R"({"type":"set_waypoint","x":1.0,"y":2.0})");
  EXPECT_EQ(encode(CommandDeploy{}), R"({"type":"command_deploy"})");
  EXPECT_EQ(encode(Pause{}), R"({"type":"pause"})");
  EXPECT_EQ(message_type(ErrorMessage{}), "error");
  EXPECT_EQ(message_type(StateSnapshot{}), "state_snapshot");
}

TEST(Protocol, DecodeErrors) {
  EXPECT_ERROR_CODE(decode("{"), ErrorCode::ProtocolError);
  EXPECT_ERROR_CODE(decode("[1,2]"), ErrorCode::ProtocolError);
  EXPECT_ERROR_CODE(decode(R"({"x":1})"), ErrorCode::ProtocolError);
  EXPECT_ERROR_CODE(decode(R"({"type":"launch"})"), ErrorCode::ProtocolError);
  EXPECT_ERROR_CODE(decode(R"({"type":"set_waypoint","x":"far"})"), ErrorCode::ProtocolError);
  EXPECT_ERROR_CODE(decode(R"({"type":"command_calibrate","script":[{"linear":1}]})"), ErrorCode::ProtocolError);
}

TEST(Protocol, OnlyOperatorCommandsMapToMissionCommands) {
  EXPECT_EQ(to_command(SetWaypoint{1.0, -1.0}), (Command{command::SetWaypoint{OdomPoint{{1.0, -1.0}}}}));
  EXPECT_EQ(to_command(CommandDeploy{}), Command{command::Deploy{}});
  EXPECT_EQ(to_command(SkipReset{}), Command{command::SkipReset{}});
  EXPECT_FALSE(to_command(Pause{}).has_value());
  EXPECT_FALSE(to_command(StateSnapshot{}).has_value());
  EXPECT_FALSE(to_command(Hello{}).has_value());
}

TEST(Protocol, SnapshotReflectsTheMission) {
  Mission m(load_scenario(std::string(UWBLOC_SOURCE_DIR) + "/scenarios/demo.yaml"));
  StateSnapshot s = make_snapshot(m, true);
  EXPECT_EQ(s.phase, "Idle");
  EXPECT_TRUE(s.paused);
  EXPECT_TRUE(s.flags.deploy);
  EXPECT_TRUE(s.anchors.empty());
  EXPECT_EQ(s.event_count, m.log().size());
  m.command_deploy();
  s = make_snapshot(m, false);
  EXPECT_EQ(s.phase, "CalibrationDrive");
  EXPECT_EQ(s.anchors.size(), 5u);
  EXPECT_EQ(s.source, "visual");
  EXPECT_TRUE(decode(encode(s)) == Message{s});
}
