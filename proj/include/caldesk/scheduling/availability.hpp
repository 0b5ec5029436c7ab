#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "caldesk/calmodel/freebusy.hpp"

namespace caldesk::sched {

/// A participant's free/busy window does not contain the query window.
class WindowMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Slot {
  cal::Interval interval;

  bool operator==(const Slot&) const = default;
};

/// Grid-aligned slots (anchored at `window.start()`) of exactly `duration` seconds that
/// lie inside `window` and miss every busy interval. Sorted by start.
/// Throws std::invalid_argument unless duration >= granularity > 0 and both are whole
/// minutes; WindowMismatch as documented.
std::vector<Slot> joint_availability(const std::vector<cal::FreeBusy>& freebusies,
                                     const cal::Interval& window, std::int64_t duration,
                                     std::int64_t granularity);

/// Unordered pairs of overlapping Confirmed events, each as (smaller uid, larger uid),
/// sorted. Conflict events are included when `include_conflict` is set, which lets a
/// flagged calendar be re-checked.
std::vector<std::pair<std::string, std::string>> detect_clashes(const cal::Calendar& cal,
                                                                bool include_conflict = false);

}  // namespace caldesk::sched
