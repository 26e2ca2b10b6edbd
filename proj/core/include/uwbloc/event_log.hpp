#pragma once

#include <cstddef>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace uwbloc {

using Json = nlohmann::ordered_json;

/// One newline-delimited record: {"seq":..,"t":..,"type":..,"data":{..}}.
struct EventRecord {
  std::size_t seq{0};
  double t{0.0};
  std::string type;
  Json data;
};

/// Append-only event log. Every record is serialized once on append, so the
/// stored lines are exactly what gets written and compared.
class EventLog {
 public:
  using Listener = std::function<void(const std::string& line)>;

  void append(double sim_time, std::string_view type, Json data);

  const std::vector<std::string>& lines() const noexcept { return lines_; }
  std::size_t size() const noexcept { return lines_.size(); }

  /// All lines, each terminated by '\n'.
  std::string text() const;

  void set_listener(Listener listener) { listener_ = std::move(listener); }

 private:
  std::vector<std::string> lines_;
  Listener listener_;
};

/// Throws SessionCorrupt on malformed input.
EventRecord parse_event(std::string_view line);

std::vector<EventRecord> parse_events(const std::vector<std::string>& lines);

}  // namespace uwbloc
