#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "caldesk/calmodel/agent.hpp"
#include "caldesk/calmodel/time.hpp"

namespace caldesk::cal {

class MalformedIcs : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedFeature : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedDoc : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OwnerMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidEvent : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class EventStatus { Confirmed, Tentative, Conflict };

std::string_view to_string(EventStatus s);
std::optional<EventStatus> parse_status(std::string_view text);

inline constexpr std::size_t kMaxSummaryLength = 1024;

/// Ordered lexicographically by (sequence, stamped, source_rank).
struct EventVersion {
  std::uint64_t sequence = 0;
  Instant stamped{};
  std::uint32_t source_rank = 0;

  auto operator<=>(const EventVersion&) const = default;
};

struct Event {
  std::string uid;
  Interval interval;
  std::string summary;
  EventStatus status = EventStatus::Confirmed;
  EventVersion version{};
  std::string origin;

  bool operator==(const Event&) const = default;
};

/// Total order used by merge: version first, then the remaining fields so that two
/// distinct events never compare equal.
std::strong_ordering compare_events(const Event& a, const Event& b);

bool is_valid_uid(std::string_view uid);
/// Summary may hold any UTF-8 text plus LF; other control characters are rejected.
bool is_valid_summary(std::string_view summary);
/// Throws InvalidEvent naming the violated invariant.
void validate_event(const Event& e);

/// One owner's events keyed by uid.
class Calendar {
 public:
  using EventMap = std::map<std::string, Event, std::less<>>;

  Calendar() = default;
  explicit Calendar(AgentId owner) : owner_(std::move(owner)) {}

  const AgentId& owner() const { return owner_; }
  void set_owner(AgentId owner) { owner_ = std::move(owner); }

  const EventMap& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  const Event* find(std::string_view uid) const;
  /// Validates and inserts; returns false if the uid is already present.
  bool insert(Event e);
  /// Validates and inserts or replaces.
  void upsert(Event e);
  bool erase(std::string_view uid);

  bool operator==(const Calendar&) const = default;

 private:
  AgentId owner_;
  EventMap events_;
};

}  // namespace caldesk::cal
