#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "caldesk/calmodel/event.hpp"

namespace caldesk::cal {

/// Union of `intervals` as sorted, disjoint, non-adjacent intervals.
std::vector<Interval> coalesce(std::vector<Interval> intervals);

/// Busy-only view of a calendar; carries no event detail.
struct FreeBusy {
  AgentId owner;
  Interval window;
  std::vector<Interval> busy;

  bool operator==(const FreeBusy&) const = default;
};

/// Every event counts as busy regardless of status; intervals are clipped to `window`.
FreeBusy project_freebusy(const Calendar& cal, const Interval& window);

/// Statement-grammar document: owner, windowStart and windowEnd on `<base_iri>`, and
/// start/end on `<base_iri#busy-NNNNNN>` per interval. Sorted, LF-terminated.
std::string format_freebusy(const FreeBusy& fb, std::string_view base_iri);
/// Throws MalformedDoc, including when the busy list violates the FreeBusy invariants.
FreeBusy parse_freebusy(std::string_view text);

}  // namespace caldesk::cal
