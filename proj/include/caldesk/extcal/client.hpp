#pragma once

#include <optional>
#include <string>

#include "caldesk/calmodel/event.hpp"
#include "caldesk/extcal/service.hpp"

namespace caldesk::ext {

struct Fetched {
  cal::Calendar calendar;
  std::string etag;
};

/// GET only. nullopt means the server answered 304 for `cached_etag`. Throws
/// net::Unreachable (including non-200 answers) or cal::MalformedIcs / UnsupportedFeature.
std::optional<Fetched> fetch_ics(const std::string& url, const std::optional<std::string>& cached_etag,
                                 const AgentId& owner = {}, const std::string& origin = {},
                                 const std::string& user_agent = "caldesk");

/// POSTs one VEVENT to `{calendar_url}/events`. Throws NotFound, StaleSequence or
/// net::Unreachable.
std::string create_event(const std::string& calendar_url, const cal::Event& event,
                         const std::string& user_agent = "caldesk");

/// `{calendar_url}.ics`
inline std::string ics_url(const std::string& calendar_url) { return calendar_url + ".ics"; }

}  // namespace caldesk::ext
