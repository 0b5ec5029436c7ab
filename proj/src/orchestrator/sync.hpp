#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "caldesk/orchestrator/orchestrator.hpp"
#include "caldesk/podstore/client.hpp"

namespace caldesk::orch {

/// Last good copy of an external calendar, kept in memory per user and URL.
struct SourceCache {
  std::string etag;
  cal::Calendar calendar;
};
using SourceCaches = std::map<std::string, SourceCache>;

/// One sync of one user. Failures end up in the report instead of being thrown.
class SyncRun {
 public:
  SyncRun(const Registration& reg, SourceCaches& caches, const OrchestratorOptions& opts);

  SyncReport run();
  /// The config that was loaded, when loading succeeded.
  const std::optional<SyncConfig>& config() const { return config_; }

 private:
  struct Consumed {
    std::string id;
    cal::Event event;
  };

  SyncConfig load_config();
  void run_mode(const SyncConfig& cfg);

  std::vector<Consumed> consume();
  void mark_processed(const std::vector<Consumed>& consumed);
  /// Writes consumed events to the route; false when the remote calendar was unreachable.
  bool route_out(const SyncConfig& cfg, const std::vector<Consumed>& consumed);
  /// Pulls every source (plus the route calendar) and writes the result. Returns false
  /// when a source without a cached copy was unreachable and nothing was written.
  void pull(const SyncConfig& cfg);
  std::optional<cal::Calendar> fetch(const std::string& url, const std::string& label);
  std::optional<cal::Calendar> read_route(const SyncConfig& cfg);
  /// Writes the filtered, clash-flagged calendar and its projection, then reports new clashes.
  /// Window filter, clash flagging, target and free/busy writes, conflict notification.
  void publish(const SyncConfig& cfg, cal::Calendar cal);
  std::optional<cal::Calendar> stored_target(const SyncConfig& cfg);
  bool write_if_changed(const std::string& path, const std::string& body, const std::string& content_type);

  Registration reg_;
  SourceCaches& caches_;
  const OrchestratorOptions& opts_;
  pod::PodClient pod_;
  SyncReport report_;
  std::optional<SyncConfig> config_;
  bool degraded_ = false;     // some upstream could not be reached
  bool incomplete_ = false;   // ... and there was no cached copy to stand in
};

}  // namespace caldesk::orch
