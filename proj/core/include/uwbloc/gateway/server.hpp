#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uwbloc/mission.hpp"
#include "uwbloc/scenario.hpp"

namespace uwbloc::gateway {

struct ServerOptions {
  std::string host{"127.0.0.1"};
  std::uint16_t port{8765};  // 0 picks an ephemeral port
  double realtime_factor{1.0};  // sim seconds per wall second; 0 runs unpaced
  double snapshot_hz{10.0};
  bool handle_signals{false};  // stop on SIGINT/SIGTERM
};

/// "host:port" -> (host, port). Throws InvalidArgument.
std::pair<std::string, std::uint16_t> parse_bind(std::string_view bind);

/// Serves one operator at a time over WebSocket. The mission is owned by a
/// single stepper thread; the network side only enqueues commands and
/// forwards what the stepper publishes. Commands are applied once the
/// mission waits for the operator, exactly like a scripted run, so the event
/// log depends only on the command sequence. The stepper pauses while no
/// operator is connected or after a pause request.
class Server {
 public:
  Server(ScenarioConfig config, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and listens. Throws BindFailed.
  void start();
  std::uint16_t port() const;
  /// Runs until stop(). Call start() first.
  void run();
  /// Thread-safe.
  void stop();

  /// Thread-safe copies of the mission's log and accepted commands.
  std::vector<std::string> event_lines() const;
  std::vector<Command> accepted_commands() const;

  struct Impl;  // opaque; defined with the network code

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace uwbloc::gateway
