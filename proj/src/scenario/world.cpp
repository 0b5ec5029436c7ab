#include "caldesk/scenario/world.hpp"

#include <algorithm>

#include "caldesk/orchestrator/config.hpp"

namespace caldesk::scenario {

World::World(cal::Instant start, std::optional<std::filesystem::path> orch_storage) : clock_(start) {
  ext_ = std::make_unique<ext::CalendarService>(clock_.clock());
  ext_server_ = std::make_unique<ext::CalendarServer>(*ext_);
  ext_server_->start();
  orch_ = std::make_unique<orch::Orchestrator>(
      orch::OrchestratorOptions{orchestrator_agent(), std::move(orch_storage), clock_.clock()});
  orch_server_ = std::make_unique<orch::OrchestratorServer>(*orch_);
  orch_server_->start();
}

World::~World() {
  orch_server_->stop();
  ext_server_->stop();
  for (auto& [_, u] : users_) u->server->stop();
}

AgentId World::agent_for(const std::string& name) { return AgentId::parse("http://" + name + ".example/profile#me"); }

AgentId World::orchestrator_agent() { return AgentId::parse("http://orchestrator.example/agent#me"); }

World::User& World::add_user(const std::string& name) {
  if (users_.count(name)) throw std::invalid_argument("user '" + name + "' already exists");
  auto u = std::make_unique<User>();
  u->name = name;
  u->id = agent_for(name);
  u->secret = "secret-" + name;
  u->store = std::make_unique<pod::Store>(pod::PodOptions{u->id, u->secret, std::nullopt, clock_.clock()});
  u->server = std::make_unique<pod::PodServer>(*u->store);
  u->server->start();
  u->acl = pod::default_acl();
  u->store->set_acl(u->secret, u->acl);
  return *users_.emplace(name, std::move(u)).first->second;
}

World::User& World::user(const std::string& name) {
  auto it = users_.find(name);
  if (it == users_.end()) throw std::invalid_argument("unknown user '" + name + "'");
  return *it->second;
}

std::vector<std::string> World::user_names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : users_) out.push_back(n);
  return out;
}

std::string World::external_calendar(const std::string& name) {
  ext_->add_calendar(name, name);
  return ext_server_->calendar_url(name);
}

void World::add_acl(const std::string& name, pod::AclEntry entry) {
  auto& u = user(name);
  u.acl.push_back(std::move(entry));
  u.store->set_acl(u.secret, u.acl);
}

void World::grant_orchestrator(const std::string& name) {
  using pod::Mode;
  auto o = orchestrator_agent();
  add_acl(name, {std::string(pod::kConfigPath), o, {Mode::Read}});
  add_acl(name, {"/calendar/", o, {Mode::Read, Mode::Write}});
  add_acl(name, {"/inbox/", o, {Mode::Read, Mode::Write, Mode::Append}});
}

void World::revoke_orchestrator(const std::string& name) {
  auto& u = user(name);
  auto o = orchestrator_agent();
  std::erase_if(u.acl, [&](const pod::AclEntry& e) { return e.agent == o; });
  u.store->set_acl(u.secret, u.acl);
}

void World::share(const std::string& owner, const std::string& holder) {
  using pod::Mode;
  auto h = user(holder).id;
  add_acl(owner, {std::string(pod::kFreeBusyPath), h, {Mode::Read}});
  add_acl(owner, {"/inbox/", h, {Mode::Append}});
}

std::string World::token(const std::string& owner, const AgentId& holder) {
  auto& u = user(owner);
  auto it = u.tokens.find(holder);
  if (it != u.tokens.end()) return it->second;
  auto t = u.store->issue_token(u.secret, holder).value;
  u.tokens.emplace(holder, t);
  return t;
}

void World::write_config(const std::string& name, const orch::SyncConfig& cfg) {
  auto& u = user(name);
  auto client = u.owner();
  client.put(pod::kConfigPath, orch::format_config(cfg, client.iri(pod::kConfigPath)), "text/plain");
}

orch::Registration World::register_user(const std::string& name) {
  auto& u = user(name);
  return orch_->register_user(u.id, u.pod_url(), u.secret);
}

}  // namespace caldesk::scenario
