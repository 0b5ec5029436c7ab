#include "caldesk/orchestrator/registry.hpp"

#include "caldesk/common/http.hpp"
#include "caldesk/common/util.hpp"
#include "caldesk/podstore/store.hpp"

namespace caldesk::orch {

std::string to_string(LastStatus s) {
  switch (s) {
    case LastStatus::Never: return "Never";
    case LastStatus::Ok: return "Ok";
    case LastStatus::PermissionDenied: return "PermissionDenied";
    case LastStatus::SourceUnreachable: return "SourceUnreachable";
    case LastStatus::ConfigMissing: return "ConfigMissing";
    case LastStatus::ConfigInvalid: return "ConfigInvalid";
    case LastStatus::PodUnreachable: return "PodUnreachable";
  }
  return "?";
}

std::optional<LastStatus> parse_last_status(std::string_view s) {
  for (auto v : {LastStatus::Never, LastStatus::Ok, LastStatus::PermissionDenied, LastStatus::SourceUnreachable,
                 LastStatus::ConfigMissing, LastStatus::ConfigInvalid, LastStatus::PodUnreachable})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::string format_registrations(const std::vector<Registration>& regs) {
  std::string out;
  for (const auto& r : regs)
    out += r.user.iri() + " " + r.pod_base_url + " " + r.token + " " + cal::format_iso(r.created) + " " +
           to_string(r.last_status) + "\n";
  return out;
}

std::vector<Registration> parse_registrations(std::string_view text) {
  std::vector<Registration> out;
  int line_no = 0;
  for (const auto& raw : util::split(text, '\n')) {
    ++line_no;
    auto line = util::trim(raw);
    if (line.empty()) continue;
    auto bad = [&](const std::string& why) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + why);
    };
    auto f = util::split(line, ' ');
    if (f.size() != 5) bad("expected 5 fields");
    Registration r;
    try {
      r.user = AgentId::parse(f[0]);
    } catch (const std::invalid_argument& e) {
      bad(e.what());
    }
    if (!net::parse_url(f[1])) bad("bad pod url");
    r.pod_base_url = f[1];
    if (f[2].empty()) bad("empty token");
    r.token = f[2];
    auto created = cal::try_parse_iso(f[3]);
    if (!created) bad("bad created instant");
    r.created = *created;
    auto status = parse_last_status(f[4]);
    if (!status) bad("bad status");
    r.last_status = *status;
    out.push_back(std::move(r));
  }
  return out;
}

Registry::Registry(std::optional<std::filesystem::path> file) : file_(std::move(file)) {
  if (!file_ || !std::filesystem::exists(*file_)) return;
  auto text = util::read_file(*file_);
  if (!text) throw pod::CorruptState(*file_, "unreadable");
  try {
    for (auto& r : parse_registrations(*text)) {
      auto user = r.user;
      if (!regs_.emplace(user, std::move(r)).second) throw std::invalid_argument("duplicate user " + user.iri());
    }
  } catch (const std::exception& e) {
    throw pod::CorruptState(*file_, e.what());
  }
}

const Registration* Registry::find(const AgentId& user) const {
  auto it = regs_.find(user);
  return it == regs_.end() ? nullptr : &it->second;
}

void Registry::add(Registration r) {
  if (regs_.count(r.user)) throw AlreadyRegistered(r.user.iri() + " is already registered");
  auto user = r.user;
  regs_.emplace(user, std::move(r));
  save();
}

void Registry::remove(const AgentId& user) {
  if (!regs_.erase(user)) throw NotRegistered(user.iri() + " is not registered");
  save();
}

void Registry::set_status(const AgentId& user, LastStatus status, cal::Instant when) {
  auto it = regs_.find(user);
  if (it == regs_.end()) return;
  it->second.last_sync = when;
  if (it->second.last_status == status) return;
  it->second.last_status = status;
  save();
}

void Registry::save() const {
  if (!file_) return;
  std::vector<Registration> regs;
  for (const auto& [_, r] : regs_) regs.push_back(r);
  util::write_file_atomic(*file_, format_registrations(regs));
}

}  // namespace caldesk::orch
