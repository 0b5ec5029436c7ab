#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caldesk/calmodel/event.hpp"
#include "caldesk/common/http.hpp"

namespace caldesk::ext {

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incoming sequence is not above the stored one for the same uid.
class StaleSequence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogEntry {
  std::string method;
  std::string path;
  cal::Instant at;
  std::string client;  // User-Agent, kept for filtering; not part of the text form

  /// `{method} {path} {iso-instant}`
  std::string line() const;
};

struct ServeResult {
  std::string body;
  std::string etag;
  bool not_modified = false;
};

/// Mock centralized calendar service. Each calendar serializes its own operations and
/// keeps an append-only request log.
class CalendarService {
 public:
  explicit CalendarService(cal::Clock clock = cal::system_clock()) : clock_(std::move(clock)) {}

  /// No-op if the calendar already exists.
  void add_calendar(const std::string& id, const std::string& owner_label);
  bool has_calendar(const std::string& id) const;

  /// Throws NotFound. `if_none_match` equal to the current etag yields not_modified.
  ServeResult serve_ics(const std::string& id, const std::optional<std::string>& if_none_match = {},
                        const std::string& client = {});
  /// Throws NotFound or StaleSequence. Returns the uid.
  std::string create_event(const std::string& id, cal::Event event, const std::string& client = {});

  cal::Calendar events(const std::string& id) const;
  std::vector<LogEntry> request_log(const std::string& id) const;
  /// Records a request that failed before reaching a calendar operation.
  void log_request(const std::string& id, const std::string& method, const std::string& path,
                   const std::string& client);

 private:
  struct ExternalCalendar {
    std::string id;
    std::string owner_label;
    cal::Calendar events;
    std::vector<LogEntry> request_log;
  };

  ExternalCalendar& find(const std::string& id);
  const ExternalCalendar& find(const std::string& id) const;

  cal::Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, ExternalCalendar> calendars_;
};

/// HTTP front end:
///   GET  /cal/{id}.ics       text/calendar with ETag; honours If-None-Match (304)
///   POST /cal/{id}/events    body: one VEVENT; 201 + uid, 409 stale sequence
///   GET  /cal/{id}/_log      request log, one line per request (not itself logged)
///   PUT  /cal/{id}           create a calendar, body is the owner label
///   GET  /_health
class CalendarServer {
 public:
  explicit CalendarServer(CalendarService& service);

  int start(const std::string& host = "127.0.0.1", int port = 0) { return http_.start(host, port); }
  void stop() { http_.stop(); }
  std::string base_url() const { return http_.base_url(); }
  /// `{base}/cal/{id}`; append `.ics` to fetch, `/events` to book.
  std::string calendar_url(const std::string& id) const { return base_url() + "/cal/" + id; }
  net::HttpService& http() { return http_; }

 private:
  CalendarService& service_;
  net::HttpService http_;
};

}  // namespace caldesk::ext
