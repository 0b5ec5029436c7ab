#include "caldesk/orchestrator/orchestrator.hpp"

#include <future>

#include "caldesk/common/http.hpp"
#include "caldesk/podstore/client.hpp"
#include "sync.hpp"

namespace caldesk::orch {

struct Orchestrator::UserState {
  explicit UserState(AgentId u, std::int64_t interval) : user(std::move(u)), interval(interval) {}

  AgentId user;
  std::mutex sync_mu;  // held for a whole sync
  SourceCaches caches;  // guarded by sync_mu

  // Guarded by Orchestrator::mu_.
  std::int64_t interval;
  std::optional<cal::Instant> last_attempt;
  std::optional<SyncReport> last_report;
};

std::string to_string(SourceOutcome o) {
  switch (o) {
    case SourceOutcome::Fetched: return "fetched";
    case SourceOutcome::Cached: return "cached";
    case SourceOutcome::Unreachable: return "unreachable";
  }
  return "?";
}

Orchestrator::Orchestrator(OrchestratorOptions opts) : opts_(std::move(opts)), registry_(opts_.storage) {
  for (const auto& [user, _] : registry_.all())
    users_.emplace(user, std::make_shared<UserState>(user, opts_.default_interval));
}

Orchestrator::~Orchestrator() = default;

Registration Orchestrator::register_user(const AgentId& user, const std::string& pod_base_url,
                                         const std::string& grant) {
  if (user.empty()) throw std::invalid_argument("user must be set");
  if (!net::parse_url(pod_base_url)) throw std::invalid_argument("pod url must be an http URL");
  std::string pod_url = pod_base_url;
  while (pod_url.ends_with('/')) pod_url.pop_back();
  {
    std::lock_guard lock(mu_);
    if (registry_.find(user)) throw AlreadyRegistered(user.iri() + " is already registered");
  }

  std::string token;
  try {
    token = pod::PodClient(pod_url, pod::Credential::owner(grant), opts_.user_agent).issue_token(opts_.agent);
  } catch (const pod::StoreError& e) {
    if (e.code() != pod::ErrorCode::Unauthorized) throw GrantRejected(e.what());
    token = grant;  // not the owner secret; maybe a token issued to us already
  } catch (const net::Unreachable& e) {
    throw PodUnreachable(e.what());
  }

  // Verify by reading, never writing. Missing or unreadable config is fine for now.
  try {
    pod::PodClient(pod_url, pod::Credential::bearer(token), opts_.user_agent).get(pod::kConfigPath);
  } catch (const pod::StoreError& e) {
    if (e.code() == pod::ErrorCode::Unauthorized) throw GrantRejected("grant is neither the owner secret nor a valid token");
  } catch (const net::Unreachable& e) {
    throw PodUnreachable(e.what());
  }

  Registration reg{user, pod_url, token, opts_.clock(), std::nullopt, LastStatus::Never};
  std::lock_guard lock(mu_);
  registry_.add(reg);
  users_[user] = std::make_shared<UserState>(user, opts_.default_interval);
  return reg;
}

void Orchestrator::deregister(const AgentId& user) {
  std::lock_guard lock(mu_);
  registry_.remove(user);
  users_.erase(user);
}

std::shared_ptr<Orchestrator::UserState> Orchestrator::state_of(const AgentId& user) const {
  std::lock_guard lock(mu_);
  auto it = users_.find(user);
  if (it == users_.end()) throw NotRegistered(user.iri() + " is not registered");
  return it->second;
}

SyncReport Orchestrator::sync_user(const AgentId& user) {
  auto st = state_of(user);
  std::lock_guard sync_lock(st->sync_mu);
  return run_sync(*st);
}

SyncReport Orchestrator::run_sync(UserState& st) {
  Registration reg;
  {
    std::lock_guard lock(mu_);
    const auto* r = registry_.find(st.user);
    if (!r) throw NotRegistered(st.user.iri() + " is not registered");
    reg = *r;
  }
  SyncRun run(reg, st.caches, opts_);
  auto report = run.run();
  {
    std::lock_guard lock(mu_);
    if (run.config()) st.interval = run.config()->interval_seconds;
    record(st, report);
  }
  return report;
}

void Orchestrator::record(UserState& st, const SyncReport& report) {
  st.last_attempt = report.started;
  st.last_report = report;
  // Deregistered while syncing: nothing left to update.
  if (registry_.find(st.user)) registry_.set_status(st.user, report.status, report.started);
}

std::vector<SyncReport> Orchestrator::tick() {
  const auto now = opts_.clock();
  std::vector<std::shared_ptr<UserState>> due;
  {
    std::lock_guard lock(mu_);
    for (const auto& [_, st] : users_)
      if (!st->last_attempt || now >= *st->last_attempt + st->interval) due.push_back(st);
  }

  std::vector<std::future<std::optional<SyncReport>>> running;
  for (const auto& st : due) {
    running.push_back(std::async(std::launch::async, [this, st]() -> std::optional<SyncReport> {
      std::unique_lock sync_lock(st->sync_mu, std::try_to_lock);
      if (!sync_lock.owns_lock()) return std::nullopt;  // still busy from elsewhere
      try {
        return run_sync(*st);
      } catch (const NotRegistered&) {
        return std::nullopt;
      }
    }));
  }
  std::vector<SyncReport> reports;
  for (auto& f : running)
    if (auto r = f.get()) reports.push_back(std::move(*r));
  return reports;
}

void Orchestrator::run_loop(const std::function<bool()>& next_tick) {
  while (next_tick()) tick();
}

std::vector<UserStatus> Orchestrator::status() const {
  std::lock_guard lock(mu_);
  std::vector<UserStatus> out;
  for (const auto& [user, reg] : registry_.all()) {
    UserStatus s{user, reg.pod_base_url, reg.created, reg.last_sync, reg.last_status, std::nullopt};
    if (auto it = users_.find(user); it != users_.end()) s.last_report = it->second->last_report;
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<Registration> Orchestrator::registration(const AgentId& user) const {
  std::lock_guard lock(mu_);
  const auto* r = registry_.find(user);
  return r ? std::optional(*r) : std::nullopt;
}

}  // namespace caldesk::orch
