#include "caldesk/calmodel/event.hpp"

#include <tuple>

namespace caldesk::cal {

std::string_view to_string(EventStatus s) {
  switch (s) {
    case EventStatus::Confirmed: return "Confirmed";
    case EventStatus::Tentative: return "Tentative";
    case EventStatus::Conflict: return "Conflict";
  }
  return "Confirmed";
}

std::optional<EventStatus> parse_status(std::string_view text) {
  if (text == "Confirmed") return EventStatus::Confirmed;
  if (text == "Tentative") return EventStatus::Tentative;
  if (text == "Conflict") return EventStatus::Conflict;
  return std::nullopt;
}

std::strong_ordering compare_events(const Event& a, const Event& b) {
  if (auto c = a.version <=> b.version; c != 0) return c;
  if (auto c = a.interval <=> b.interval; c != 0) return c;
  if (auto c = a.summary <=> b.summary; c != 0) return c;
  if (auto c = a.status <=> b.status; c != 0) return c;
  if (auto c = a.origin <=> b.origin; c != 0) return c;
  return a.uid <=> b.uid;
}

bool is_valid_uid(std::string_view uid) {
  if (uid.empty()) return false;
  for (unsigned char c : uid)
    if (c <= 0x20 || c == 0x7f) return false;
  return true;
}

bool is_valid_summary(std::string_view summary) {
  if (summary.size() > kMaxSummaryLength) return false;
  for (unsigned char c : summary)
    if ((c < 0x20 && c != '\n') || c == 0x7f) return false;
  return true;
}

void validate_event(const Event& e) {
  if (!is_valid_uid(e.uid)) throw InvalidEvent("invalid uid: '" + e.uid + "'");
  if (!is_valid_summary(e.summary)) throw InvalidEvent("invalid summary for uid " + e.uid);
}

const Event* Calendar::find(std::string_view uid) const {
  auto it = events_.find(uid);
  return it == events_.end() ? nullptr : &it->second;
}

bool Calendar::insert(Event e) {
  validate_event(e);
  std::string key = e.uid;
  return events_.try_emplace(std::move(key), std::move(e)).second;
}

void Calendar::upsert(Event e) {
  validate_event(e);
  std::string key = e.uid;
  events_.insert_or_assign(std::move(key), std::move(e));
}

bool Calendar::erase(std::string_view uid) {
  auto it = events_.find(uid);
  if (it == events_.end()) return false;
  events_.erase(it);
  return true;
}

}  // namespace caldesk::cal
