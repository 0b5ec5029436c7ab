#include "caldesk/podstore/store.hpp"

#include <algorithm>
#include <cstdio>

#include "caldesk/common/http.hpp"
#include "caldesk/common/util.hpp"

namespace caldesk::pod {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& what) { throw StoreError(code, what); }

std::string normalized_or_throw(std::string_view path) {
  auto p = normalize_path(path);
  if (!p) fail(ErrorCode::BadRequest, "invalid path '" + std::string(path) + "'");
  return *p;
}

bool is_inbox_path(std::string_view path) { return path_covers(kInboxPath, path) || path == "/inbox"; }

std::string notification_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "n-%06llu", static_cast<unsigned long long>(n));
  return buf;
}

std::string inbox_item_path(std::string_view id) { return std::string(kInboxPath) + std::string(id); }

}  // namespace

std::vector<AclEntry> default_acl() {
  return {AclEntry{std::string(kProfilePath), {}, {Mode::Read}}};
}

Store::Store(PodOptions opts) : opts_(std::move(opts)) {
  if (opts_.owner.empty()) throw std::invalid_argument("pod needs an owner");
  if (opts_.owner_secret.empty()) throw std::invalid_argument("pod needs an owner secret");
  acl_ = default_acl();
  if (opts_.data_dir) load();
}

AgentId Store::authenticate_locked(const Credential& cred) const {
  switch (cred.kind) {
    case Credential::Kind::Anonymous: return {};
    case Credential::Kind::Owner:
      if (!util::secure_equals(cred.secret, opts_.owner_secret))
        fail(ErrorCode::Unauthorized, "bad owner secret");
      return opts_.owner;
    case Credential::Kind::Bearer: {
      auto it = tokens_.find(cred.secret);
      if (it == tokens_.end() || it->second.revoked)
        fail(ErrorCode::Unauthorized, "unknown or revoked token");
      return it->second.agent;
    }
  }
  fail(ErrorCode::Unauthorized, "unsupported credential");
}

AgentId Store::authenticate(const Credential& cred) const {
  std::shared_lock lock(mu_);
  return authenticate_locked(cred);
}

Decision Store::check_access(const AgentId& agent, std::string_view path, Mode mode) const {
  std::shared_lock lock(mu_);
  return pod::check_access(acl_, opts_.owner, agent, path, mode);
}

// Caller holds mu_ (shared or unique).
AgentId Store::authorize(const Credential& cred, std::string_view path, Mode mode) const {
  AgentId agent = authenticate_locked(cred);
  if (pod::check_access(acl_, opts_.owner, agent, path, mode) == Decision::Allow) return agent;
  if (agent.empty())
    fail(ErrorCode::Unauthorized, "authentication required for " + std::string(path));
  fail(ErrorCode::Forbidden,
       agent.iri() + " lacks " + std::string(to_string(mode)) + " on " + std::string(path));
}

Resource Store::get_resource(const Credential& cred, std::string_view raw_path) const {
  std::string path = normalized_or_throw(raw_path);
  std::shared_ptr<const Resource> found;
  {
    std::shared_lock lock(mu_);
    authorize(cred, path, Mode::Read);
    auto it = resources_.find(path);
    if (it == resources_.end()) fail(ErrorCode::NotFound, "no resource at " + path);
    found = it->second;
  }
  return *found;
}

std::string Store::put_resource(const Credential& cred, std::string_view raw_path, std::string body,
                                std::string content_type, const std::optional<std::string>& if_match) {
  std::string path = normalized_or_throw(raw_path);
  if (path.ends_with('/')) fail(ErrorCode::BadRequest, "cannot put a container: " + path);
  std::unique_lock lock(mu_);
  authorize(cred, path, Mode::Write);
  if (is_inbox_path(path)) fail(ErrorCode::Forbidden, "inbox items are append-only");
  if (path.starts_with("/_admin")) fail(ErrorCode::Forbidden, "reserved path " + path);

  auto it = resources_.find(path);
  if (if_match) {
    std::string expected = net::unquote_etag(*if_match);
    if (it == resources_.end())
      fail(ErrorCode::PreconditionFailed, "If-Match on missing resource " + path);
    if (expected != "*" && expected != it->second->etag)
      fail(ErrorCode::PreconditionFailed, "etag mismatch on " + path);
  }
  auto r = std::make_shared<Resource>();
  r->path = path;
  r->etag = util::sha256_hex(body);
  r->body = std::move(body);
  r->content_type = content_type.empty() ? "text/plain" : std::move(content_type);
  persist_resource(*r);
  std::string etag = r->etag;
  resources_.insert_or_assign(path, std::move(r));
  return etag;
}

std::string Store::post_inbox(const Credential& cred, std::string body, std::string content_type) {
  std::unique_lock lock(mu_);
  AgentId sender = authorize(cred, kInboxPath, Mode::Append);
  Notification n{notification_id(next_notification_++), sender, opts_.clock(), std::move(body),
                 content_type.empty() ? "text/plain" : std::move(content_type), false};
  persist_notification(n);
  std::string id = n.id;
  inbox_.emplace(id, std::move(n));
  return id;
}

std::vector<Notification> Store::list_inbox(const Credential& cred) const {
  std::shared_lock lock(mu_);
  authorize(cred, kInboxPath, Mode::Read);
  std::vector<Notification> out;
  for (const auto& [id, n] : inbox_) out.push_back(n);
  std::stable_sort(out.begin(), out.end(), [](const Notification& a, const Notification& b) {
    return a.received < b.received;
  });
  return out;
}

Notification Store::get_notification(const Credential& cred, std::string_view id) const {
  std::shared_lock lock(mu_);
  authorize(cred, inbox_item_path(id), Mode::Read);
  auto it = inbox_.find(id);
  if (it == inbox_.end()) fail(ErrorCode::NotFound, "no notification " + std::string(id));
  return it->second;
}

void Store::mark_processed(const Credential& cred, std::string_view id) {
  std::unique_lock lock(mu_);
  authorize(cred, inbox_item_path(id), Mode::Write);
  auto it = inbox_.find(id);
  if (it == inbox_.end()) fail(ErrorCode::NotFound, "no notification " + std::string(id));
  if (it->second.processed) return;
  it->second.processed = true;
  persist_notification(it->second);
}

void Store::require_owner(std::string_view secret) const {
  if (!util::secure_equals(secret, opts_.owner_secret))
    fail(ErrorCode::Unauthorized, "bad owner secret");
}

Token Store::issue_token(std::string_view owner_secret, const AgentId& agent) {
  require_owner(owner_secret);
  if (agent.empty()) fail(ErrorCode::BadRequest, "token needs an agent");
  std::unique_lock lock(mu_);
  Token t{util::random_hex(32), agent, opts_.clock(), false};
  while (tokens_.count(t.value)) t.value = util::random_hex(32);
  tokens_.emplace(t.value, t);
  persist_tokens();
  return t;
}

void Store::revoke_token(std::string_view owner_secret, std::string_view value) {
  require_owner(owner_secret);
  std::unique_lock lock(mu_);
  auto it = tokens_.find(value);
  if (it == tokens_.end()) fail(ErrorCode::NotFound, "unknown token");
  it->second.revoked = true;
  persist_tokens();
}

void Store::set_acl(std::string_view owner_secret, std::vector<AclEntry> acl) {
  require_owner(owner_secret);
  for (const auto& e : acl)
    if (e.modes.empty() || !normalize_path(e.path))
      fail(ErrorCode::BadRequest, "invalid ACL entry for '" + e.path + "'");
  std::unique_lock lock(mu_);
  acl_ = std::move(acl);
  persist_acl();
}

std::vector<AclEntry> Store::acl(std::string_view owner_secret) const {
  require_owner(owner_secret);
  std::shared_lock lock(mu_);
  return acl_;
}

// --- persistence -----------------------------------------------------------------------

void Store::persist_resource(const Resource& r) const {
  if (!opts_.data_dir) return;
  util::write_file_atomic(*opts_.data_dir / "resources" / net::percent_encode(r.path),
                          r.content_type + "\n" + r.body);
}

void Store::persist_notification(const Notification& n) const {
  if (!opts_.data_dir) return;
  std::string text = "sender " + (n.sender.empty() ? std::string("-") : n.sender.iri()) + "\n" +
                     "received " + cal::format_iso(n.received) + "\n" + "content-type " +
                     n.content_type + "\n" + "processed " + (n.processed ? "1" : "0") + "\n\n" +
                     n.body;
  util::write_file_atomic(*opts_.data_dir / "inbox" / n.id, text);
}

void Store::persist_acl() const {
  if (!opts_.data_dir) return;
  util::write_file_atomic(*opts_.data_dir / "acl.txt", format_acl(acl_));
}

void Store::persist_tokens() const {
  if (!opts_.data_dir) return;
  std::string text;
  for (const auto& [value, t] : tokens_)
    text += value + " " + t.agent.iri() + " " + cal::format_iso(t.issued) + " " +
            (t.revoked ? "1" : "0") + "\n";
  util::write_file_atomic(*opts_.data_dir / "tokens.txt", text);
}

void Store::load() {
  const fs::path& dir = *opts_.data_dir;
  fs::create_directories(dir / "resources");
  fs::create_directories(dir / "inbox");

  if (auto text = util::read_file(dir / "acl.txt")) {
    try {
      acl_ = parse_acl(*text);
    } catch (const std::invalid_argument& e) {
      throw CorruptState(dir / "acl.txt", e.what());
    }
  } else {
    persist_acl();
  }

  if (auto text = util::read_file(dir / "tokens.txt")) {
    std::size_t line_no = 0;
    for (const auto& line : util::split(*text, '\n')) {
      ++line_no;
      if (line.empty()) continue;
      auto f = util::split(line, ' ');
      auto issued = f.size() == 4 ? cal::try_parse_iso(f[2]) : std::nullopt;
      if (f.size() != 4 || !issued || (f[3] != "0" && f[3] != "1") || f[0].empty())
        throw CorruptState(dir / "tokens.txt", "bad record on line " + std::to_string(line_no));
      try {
        tokens_.emplace(f[0], Token{f[0], AgentId::parse(f[1]), *issued, f[3] == "1"});
      } catch (const std::invalid_argument& e) {
        throw CorruptState(dir / "tokens.txt", e.what());
      }
    }
  }

  for (const auto& entry : fs::directory_iterator(dir / "resources")) {
    if (!entry.is_regular_file() || entry.path().extension() == ".tmp") continue;
    auto name = entry.path().filename().string();
    auto path = net::percent_decode(name);
    if (!path || !normalize_path(*path)) throw CorruptState(entry.path(), "bad resource file name");
    auto text = util::read_file(entry.path());
    std::size_t nl = text ? text->find('\n') : std::string::npos;
    if (nl == std::string::npos) throw CorruptState(entry.path(), "missing content-type line");
    auto r = std::make_shared<Resource>();
    r->path = *path;
    r->content_type = text->substr(0, nl);
    r->body = text->substr(nl + 1);
    r->etag = util::sha256_hex(r->body);
    resources_.emplace(*path, std::move(r));
  }

  for (const auto& entry : fs::directory_iterator(dir / "inbox")) {
    if (!entry.is_regular_file() || entry.path().extension() == ".tmp") continue;
    auto text = util::read_file(entry.path());
    std::size_t split_at = text ? text->find("\n\n") : std::string::npos;
    if (split_at == std::string::npos) throw CorruptState(entry.path(), "missing header block");
    Notification n;
    n.id = entry.path().filename().string();
    n.body = text->substr(split_at + 2);
    int seen = 0;
    for (const auto& line : util::split(std::string_view(*text).substr(0, split_at), '\n')) {
      std::size_t sp = line.find(' ');
      if (sp == std::string::npos) throw CorruptState(entry.path(), "bad header '" + line + "'");
      std::string key = line.substr(0, sp), value = line.substr(sp + 1);
      try {
        if (key == "sender") {
          if (value != "-") n.sender = AgentId::parse(value);
        } else if (key == "received") {
          n.received = cal::parse_iso(value);
        } else if (key == "content-type") {
          n.content_type = value;
        } else if (key == "processed") {
          if (value != "0" && value != "1") throw std::invalid_argument("bad processed flag");
          n.processed = value == "1";
        } else {
          throw std::invalid_argument("unknown header '" + key + "'");
        }
      } catch (const std::invalid_argument& e) {
        throw CorruptState(entry.path(), e.what());
      }
      ++seen;
    }
    unsigned long long counter = 0;
    if (seen != 4 || std::sscanf(n.id.c_str(), "n-%llu", &counter) != 1)
      throw CorruptState(entry.path(), "incomplete notification");
    next_notification_ = std::max<std::uint64_t>(next_notification_, counter + 1);
    inbox_.emplace(n.id, std::move(n));
  }
}

}  // namespace caldesk::pod
