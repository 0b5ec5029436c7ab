#include "caldesk/extcal/service.hpp"

#include "caldesk/calmodel/ics.hpp"
#include "caldesk/common/util.hpp"

namespace caldesk::ext {

std::string LogEntry::line() const { return method + " " + path + " " + cal::format_iso(at); }

void CalendarService::add_calendar(const std::string& id, const std::string& owner_label) {
  std::lock_guard lock(mu_);
  calendars_.try_emplace(id, ExternalCalendar{id, owner_label, {}, {}});
}

bool CalendarService::has_calendar(const std::string& id) const {
  std::lock_guard lock(mu_);
  return calendars_.count(id) > 0;
}

CalendarService::ExternalCalendar& CalendarService::find(const std::string& id) {
  auto it = calendars_.find(id);
  if (it == calendars_.end()) throw NotFound("no external calendar '" + id + "'");
  return it->second;
}

const CalendarService::ExternalCalendar& CalendarService::find(const std::string& id) const {
  auto it = calendars_.find(id);
  if (it == calendars_.end()) throw NotFound("no external calendar '" + id + "'");
  return it->second;
}

ServeResult CalendarService::serve_ics(const std::string& id,
                                       const std::optional<std::string>& if_none_match,
                                       const std::string& client) {
  std::lock_guard lock(mu_);
  auto& c = find(id);
  c.request_log.push_back({"GET", "/cal/" + id + ".ics", clock_(), client});
  ServeResult out{cal::serialize_ics(c.events), {}, false};
  out.etag = util::sha256_hex(out.body);
  if (if_none_match && net::unquote_etag(*if_none_match) == out.etag) {
    out.not_modified = true;
    out.body.clear();
  }
  return out;
}

std::string CalendarService::create_event(const std::string& id, cal::Event event,
                                          const std::string& client) {
  std::lock_guard lock(mu_);
  auto& c = find(id);
  c.request_log.push_back({"POST", "/cal/" + id + "/events", clock_(), client});
  cal::validate_event(event);
  if (const auto* existing = c.events.find(event.uid)) {
    if (event.version.sequence <= existing->version.sequence)
      throw StaleSequence("uid " + event.uid + " already at sequence " +
                          std::to_string(existing->version.sequence));
  }
  // Transport-local fields never reach the external service.
  event.origin.clear();
  event.version.source_rank = 0;
  std::string uid = event.uid;
  c.events.upsert(std::move(event));
  return uid;
}

cal::Calendar CalendarService::events(const std::string& id) const {
  std::lock_guard lock(mu_);
  return find(id).events;
}

std::vector<LogEntry> CalendarService::request_log(const std::string& id) const {
  std::lock_guard lock(mu_);
  return find(id).request_log;
}

void CalendarService::log_request(const std::string& id, const std::string& method,
                                  const std::string& path, const std::string& client) {
  std::lock_guard lock(mu_);
  auto it = calendars_.find(id);
  if (it != calendars_.end()) it->second.request_log.push_back({method, path, clock_(), client});
}

}  // namespace caldesk::ext
