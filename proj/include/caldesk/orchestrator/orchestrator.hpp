#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "caldesk/calmodel/notification.hpp"
#include "caldesk/orchestrator/config.hpp"
#include "caldesk/orchestrator/registry.hpp"

namespace caldesk::orch {

class GrantRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class PodUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SourceOutcome { Fetched, Cached, Unreachable };
std::string to_string(SourceOutcome o);

struct SourceReport {
  std::string label;
  SourceOutcome outcome = SourceOutcome::Fetched;
  std::string detail;  // error text when unreachable
};

struct SyncReport {
  AgentId user;
  cal::Instant started;
  cal::Instant finished;
  LastStatus status = LastStatus::Never;
  std::string detail;
  std::optional<SyncMode> mode;
  std::vector<SourceReport> per_source;
  bool wrote_target = false;
  bool wrote_freebusy = false;
  std::vector<cal::UidPair> conflicts_flagged;
  std::size_t notifications_consumed = 0;
};

struct OrchestratorOptions {
  /// The identity tokens are issued to.
  AgentId agent;
  /// Local storage file; registrations live in memory only when unset.
  std::optional<std::filesystem::path> storage;
  cal::Clock clock = cal::system_clock();
  /// Used until a user's config has been read.
  std::int64_t default_interval = kDefaultIntervalSeconds;
  /// Sent on every outgoing request so servers can tell orchestrator traffic apart.
  std::string user_agent = "caldesk-orchestrator";
};

/// Registration view without the token.
struct UserStatus {
  AgentId user;
  std::string pod_base_url;
  cal::Instant created;
  std::optional<cal::Instant> last_sync;
  LastStatus last_status = LastStatus::Never;
  std::optional<SyncReport> last_report;
};

/// The long-living sync service. Syncs of different users may run concurrently; syncs
/// of one user never overlap.
class Orchestrator {
 public:
  /// Throws pod::CorruptState when the storage file cannot be parsed.
  explicit Orchestrator(OrchestratorOptions opts);
  ~Orchestrator();

  const AgentId& agent() const { return opts_.agent; }

  /// `grant` is the pod owner secret (a token is issued to this orchestrator) or a token
  /// already issued to it. Throws PodUnreachable, GrantRejected or AlreadyRegistered.
  Registration register_user(const AgentId& user, const std::string& pod_base_url, const std::string& grant);
  /// Throws NotRegistered.
  void deregister(const AgentId& user);

  /// Runs one sync now, waiting for any sync of the same user in progress. Throws
  /// NotRegistered; every other failure is reported.
  SyncReport sync_user(const AgentId& user);

  /// Syncs every due user concurrently. Users whose sync is still running elsewhere are
  /// skipped. Reports come back ordered by user.
  std::vector<SyncReport> tick();
  /// Calls tick() each time `next_tick` returns true; returns once it returns false.
  void run_loop(const std::function<bool()>& next_tick);

  std::vector<UserStatus> status() const;
  std::optional<Registration> registration(const AgentId& user) const;

 private:
  struct UserState;

  std::shared_ptr<UserState> state_of(const AgentId& user) const;
  SyncReport run_sync(UserState& st);
  void record(UserState& st, const SyncReport& report);

  OrchestratorOptions opts_;
  mutable std::mutex mu_;  // guards registry_ and users_
  Registry registry_;
  std::map<AgentId, std::shared_ptr<UserState>> users_;
};

}  // namespace caldesk::orch
