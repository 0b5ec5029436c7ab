#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "caldesk/calmodel/event.hpp"

namespace caldesk::cal {

// Inbox notification bodies use the statement grammar. Every body carries one
// `<base> vocab#notificationType "..."` statement.

inline constexpr std::string_view kMeetingRequest = "MeetingRequest";
inline constexpr std::string_view kConflict = "Conflict";

/// Value of the notificationType statement, if any. Throws MalformedDoc.
std::optional<std::string> notification_type(std::string_view body);

/// Calendar statements for one event (owner = organizer) plus the type statement.
std::string format_meeting_request(const Event& event, const AgentId& organizer);
/// Throws MalformedDoc unless the body is a MeetingRequest holding exactly one event.
Event parse_meeting_request(std::string_view body);

using UidPair = std::pair<std::string, std::string>;

/// One notification describing every pair, addressed from `target_iri`.
std::string format_conflict(const std::vector<UidPair>& pairs, std::string_view target_iri);
std::vector<UidPair> parse_conflict(std::string_view body);

}  // namespace caldesk::cal
