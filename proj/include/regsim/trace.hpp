#pragma once

#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "regsim/errors.hpp"
#include "regsim/values.hpp"

namespace regsim {

enum class EventKind : std::uint8_t {
  Invoke,
  Respond,
  Commit,
  Coin,
  Guard,
  Exit,
  Return,
  Nop,
};

inline std::string event_kind_str(EventKind k) {
  switch (k) {
    case EventKind::Invoke:
      return "invoke";
    case EventKind::Respond:
      return "respond";
    case EventKind::Commit:
      return "commit";
    case EventKind::Coin:
      return "coin";
    case EventKind::Guard:
      return "guard";
    case EventKind::Exit:
      return "exit";
    case EventKind::Return:
      return "return";
    case EventKind::Nop:
      return "nop";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(const std::string& s) {
  if (s == "invoke") return EventKind::Invoke;
  if (s == "respond") return EventKind::Respond;
  if (s == "commit") return EventKind::Commit;
  if (s == "coin") return EventKind::Coin;
  if (s == "guard") return EventKind::Guard;
  if (s == "exit") return EventKind::Exit;
  if (s == "return") return EventKind::Return;
  if (s == "nop") return EventKind::Nop;
  return std::nullopt;
}

// One trace record. `clock` is the decision counter at which the event
// occurred; events produced by the same decision share a clock value.
// `round` is the acting process's round at the time of the event.
struct Event {
  long clock = 0;
  int pid = -1;
  EventKind kind = EventKind::Nop;
  std::optional<RegisterId> reg;
  long round = 0;
  std::optional<Value> value;
  std::optional<int> insertion_index;

  friend bool operator==(const Event& a, const Event& b) {
    return a.clock == b.clock && a.pid == b.pid && a.kind == b.kind && a.reg == b.reg &&
           a.round == b.round && a.value == b.value && a.insertion_index == b.insertion_index;
  }
};

// The export field set is fixed: {clock, pid, kind, register, round, value,
// insertion_index}. Checkers and external tools parse exactly this.
inline std::string event_to_json_line(const Event& e) {
  nlohmann::json j;
  j["clock"] = e.clock;
  j["pid"] = e.pid;
  j["kind"] = event_kind_str(e.kind);
  j["register"] = e.reg ? nlohmann::json(e.reg->str()) : nlohmann::json(nullptr);
  j["round"] = e.round;
  j["value"] = e.value ? nlohmann::json(e.value->str()) : nlohmann::json(nullptr);
  j["insertion_index"] =
      e.insertion_index ? nlohmann::json(*e.insertion_index) : nlohmann::json(nullptr);
  return j.dump();
}

inline Event event_from_json_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  Event e;
  e.clock = j.at("clock").get<long>();
  e.pid = j.at("pid").get<int>();
  auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw SimError("unknown event kind in trace line: " + line);
  e.kind = *kind;
  if (!j.at("register").is_null()) {
    auto reg = RegisterId::parse(j.at("register").get<std::string>());
    if (!reg) throw SimError("bad register in trace line: " + line);
    e.reg = *reg;
  }
  e.round = j.at("round").get<long>();
  if (!j.at("value").is_null()) {
    auto v = Value::parse(j.at("value").get<std::string>());
    if (!v) throw SimError("bad value in trace line: " + line);
    e.value = *v;
  }
  if (!j.at("insertion_index").is_null()) e.insertion_index = j.at("insertion_index").get<int>();
  return e;
}

inline std::string export_trace(const std::vector<Event>& events) {
  std::string out;
  for (const Event& e : events) {
    out += event_to_json_line(e);
    out += '\n';
  }
  return out;
}

inline std::vector<Event> parse_trace(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(event_from_json_line(line));
  }
  return events;
}

inline std::vector<Event> parse_trace(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

}  // namespace regsim
