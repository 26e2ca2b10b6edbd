#include "uwbloc/event_log.hpp"

#include "uwbloc/error.hpp"

namespace uwbloc {

void EventLog::append(double sim_time, std::string_view type, Json data) {
  Json record;
  record["seq"] = lines_.size();
  record["t"] = sim_time;
  record["type"] = type;
  record["data"] = std::move(data);
  lines_.push_back(record.dump());
  if (listener_) listener_(lines_.back());
}

std::string EventLog::text() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

EventRecord parse_event(std::string_view line) {
  try {
    const Json j = Json::parse(line);
    EventRecord r;
    r.seq = j.at("seq").get<std::size_t>();
    r.t = j.at("t").get<double>();
    r.type = j.at("type").get<std::string>();
    r.data = j.at("data");
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SessionCorrupt, std::string("malformed event record: ") + e.what());
  }
}

std::vector<EventRecord> parse_events(const std::vector<std::string>& lines) {
  std::vector<EventRecord> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(parse_event(l));
  return out;
}

}  // namespace uwbloc
