#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caldesk/extcal/service.hpp"
#include "caldesk/orchestrator/orchestrator.hpp"
#include "caldesk/orchestrator/server.hpp"
#include "caldesk/podstore/client.hpp"
#include "caldesk/podstore/server.hpp"

namespace caldesk::scenario {

/// In-process servers for a multi-party run: a pod per user plus the shared services,
/// on ephemeral ports and a manual clock.
class World {
 public:
  struct User {
    std::string name;
    AgentId id;
    std::string secret;
    std::unique_ptr<pod::Store> store;
    std::unique_ptr<pod::PodServer> server;
    std::vector<pod::AclEntry> acl;
    std::map<AgentId, std::string> tokens;  // tokens this pod issued, by holder

    std::string pod_url() const { return server->base_url(); }
    pod::PodClient owner() const { return pod::PodClient(pod_url(), pod::Credential::owner(secret)); }
  };

  explicit World(cal::Instant start, std::optional<std::filesystem::path> orch_storage = std::nullopt);
  ~World();

  cal::ManualClock& clock() { return clock_; }
  cal::Instant now() const { return clock_.now(); }

  static AgentId agent_for(const std::string& name);
  static AgentId orchestrator_agent();

  User& add_user(const std::string& name);
  User& user(const std::string& name);
  bool has_user(const std::string& name) const { return users_.count(name) > 0; }
  std::vector<std::string> user_names() const;

  /// Creates `{name}` on the external service if needed; returns its calendar URL.
  std::string external_calendar(const std::string& name);
  ext::CalendarService& external() { return *ext_; }
  ext::CalendarServer& external_server() { return *ext_server_; }

  orch::Orchestrator& orchestrator() { return *orch_; }
  orch::OrchestratorServer& orchestrator_server() { return *orch_server_; }

  /// Grants the orchestrator what a sync needs on this user's pod.
  void grant_orchestrator(const std::string& user);
  /// Removes every ACL entry naming the orchestrator.
  void revoke_orchestrator(const std::string& user);
  /// `holder` may read `owner`'s free/busy and append to their inbox.
  void share(const std::string& owner, const std::string& holder);
  void add_acl(const std::string& user, pod::AclEntry entry);
  /// Token issued by `owner`'s pod to `holder`, created on first use.
  std::string token(const std::string& owner, const AgentId& holder);

  void write_config(const std::string& user, const orch::SyncConfig& cfg);
  orch::Registration register_user(const std::string& user);

 private:
  cal::ManualClock clock_;
  std::map<std::string, std::unique_ptr<User>> users_;
  std::unique_ptr<ext::CalendarService> ext_;
  std::unique_ptr<ext::CalendarServer> ext_server_;
  std::unique_ptr<orch::Orchestrator> orch_;
  std::unique_ptr<orch::OrchestratorServer> orch_server_;
};

}  // namespace caldesk::scenario
