#pragma once

#include <string>
#include <string_view>

#include "caldesk/calmodel/event.hpp"

namespace caldesk::cal {

// iCalendar subset: VCALENDAR / VEVENT with UID, DTSTAMP, DTSTART, DTEND, SUMMARY, SEQUENCE
// and STATUS, UTC datetimes only. Folded input lines are accepted; output is never folded
// and uses CRLF line endings.

/// Throws MalformedIcs or UnsupportedFeature. Parsed events get `origin` and source rank 0;
/// neither is carried by the text.
Calendar parse_ics(std::string_view text, AgentId owner = {}, std::string origin = {});

/// Events come out sorted by uid, properties in fixed order.
std::string serialize_ics(const Calendar& cal);

/// A single VEVENT block (CRLF lines, no VCALENDAR wrapper).
std::string serialize_vevent(const Event& e);

/// Accepts either a bare VEVENT block or a VCALENDAR holding exactly one VEVENT.
Event parse_single_event(std::string_view text, std::string origin = {});

}  // namespace caldesk::cal
