#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "caldesk/calmodel/time.hpp"

namespace caldesk::orch {

enum class SyncMode { HybridExternalFirst, SolidOnly, SolidFirstHybrid };
enum class InboxRoute { SeparateResource, IcsInPod, SeparateRemoteCalendar };

std::string to_string(SyncMode m);
std::string to_string(InboxRoute r);
std::optional<SyncMode> parse_mode(std::string_view s);
std::optional<InboxRoute> parse_route(std::string_view s);

/// Pod resources holding consumed inbox events for the two pod-side routes.
inline constexpr std::string_view kInboxCalendarPath = "/calendar/inbox";
inline constexpr std::string_view kInboxIcsPath = "/calendar/inbox.ics";

inline constexpr std::int64_t kDefaultIntervalSeconds = 300;

struct Source {
  std::string url;  // an `.ics` URL
  std::string label;

  bool operator==(const Source&) const = default;
};

struct SyncConfig {
  SyncMode mode = SyncMode::HybridExternalFirst;
  std::vector<Source> sources;
  std::string target_path = "/calendar/combined";
  std::optional<std::string> freebusy_path;
  std::optional<InboxRoute> inbox_route;
  std::optional<std::string> push_url;  // external calendar URL, without `.ics`
  std::optional<cal::Interval> window_filter;
  std::int64_t interval_seconds = kDefaultIntervalSeconds;

  bool operator==(const SyncConfig&) const = default;
};

/// The pod resource the configured inbox route writes, if any.
std::optional<std::string> route_resource(const SyncConfig& cfg);

class ConfigMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every violated rule, one message each.
class ConfigInvalid : public std::runtime_error {
 public:
  explicit ConfigInvalid(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses and validates a config document. Throws ConfigInvalid listing all problems.
SyncConfig validate_config(std::string_view doc);
/// Inverse of validate_config. `base_iri` is the document's own IRI.
std::string format_config(const SyncConfig& cfg, std::string_view base_iri);

}  // namespace caldesk::orch
