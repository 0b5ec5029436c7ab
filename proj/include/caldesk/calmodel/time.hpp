#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace caldesk::cal {

/// A UTC point in time with second precision.
struct Instant {
  std::int64_t seconds = 0;

  constexpr auto operator<=>(const Instant&) const = default;
};

constexpr Instant operator+(Instant t, std::int64_t s) { return Instant{t.seconds + s}; }
constexpr Instant operator-(Instant t, std::int64_t s) { return Instant{t.seconds - s}; }
constexpr std::int64_t operator-(Instant a, Instant b) { return a.seconds - b.seconds; }

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_iso(Instant t);
std::optional<Instant> try_parse_iso(std::string_view text);
/// Throws std::invalid_argument on anything but the exact ISO 8601 UTC form.
Instant parse_iso(std::string_view text);

/// Builds an instant from civil UTC fields; nullopt if the date does not exist.
std::optional<Instant> make_instant(int year, unsigned month, unsigned day, unsigned hour = 0,
                                    unsigned minute = 0, unsigned second = 0);

struct CivilTime {
  int year;
  unsigned month, day, hour, minute, second;
};
CivilTime to_civil(Instant t);

/// `{n}m`, `{n}h` or `{n}s`; returns seconds. Throws std::invalid_argument.
std::int64_t parse_duration(std::string_view text);

class InvalidInterval : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Half-open interval [start, end). Zero-length and reversed intervals cannot be built.
class Interval {
 public:
  Interval(Instant start, Instant end);

  Instant start() const { return start_; }
  Instant end() const { return end_; }
  std::int64_t duration() const { return end_ - start_; }

  bool overlaps(const Interval& other) const {
    return start_ < other.end_ && other.start_ < end_;
  }
  bool contains(const Interval& other) const {
    return start_ <= other.start_ && other.end_ <= end_;
  }
  bool contains(Instant t) const { return start_ <= t && t < end_; }
  std::optional<Interval> intersect(const Interval& other) const;

  auto operator<=>(const Interval&) const = default;

 private:
  Instant start_;
  Instant end_;
};

std::string format_interval(const Interval& iv);

using Clock = std::function<Instant()>;

Clock system_clock();

/// Thread-safe clock that only moves when told to. Tests and scenarios drive time with it.
class ManualClock {
 public:
  explicit ManualClock(Instant start = {}) : now_(start.seconds) {}

  Instant now() const { return Instant{now_.load()}; }
  void set(Instant t) { now_.store(t.seconds); }
  void advance(std::int64_t seconds) { now_.fetch_add(seconds); }
  Clock clock() const {
    return [this] { return now(); };
  }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace caldesk::cal
