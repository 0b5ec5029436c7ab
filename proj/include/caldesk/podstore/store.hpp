#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "caldesk/calmodel/time.hpp"
#include "caldesk/podstore/acl.hpp"

namespace caldesk::pod {

// Fixed pod layout.
inline constexpr std::string_view kProfilePath = "/profile";
inline constexpr std::string_view kConfigPath = "/settings/orchestrator";
inline constexpr std::string_view kCombinedPath = "/calendar/combined";
inline constexpr std::string_view kFreeBusyPath = "/calendar/freebusy";
inline constexpr std::string_view kInboxPath = "/inbox/";

enum class ErrorCode {
  BadRequest = 400,
  Unauthorized = 401,
  Forbidden = 403,
  NotFound = 404,
  PreconditionFailed = 412,
};

class StoreError : public std::runtime_error {
 public:
  StoreError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  int http_status() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

/// Persisted state that fails to load. Names the offending file.
class CorruptState : public std::runtime_error {
 public:
  CorruptState(std::filesystem::path file, const std::string& why)
      : std::runtime_error(file.string() + ": " + why), file_(std::move(file)) {}
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
};

struct Resource {
  std::string path;
  std::string body;
  std::string content_type;
  std::string etag;  // hex SHA-256 of body
};

struct Token {
  std::string value;
  AgentId agent;
  cal::Instant issued;
  bool revoked = false;
};

struct Notification {
  std::string id;
  AgentId sender;  // unset for anonymous senders
  cal::Instant received;
  std::string body;
  std::string content_type;
  bool processed = false;
};

/// How a request authenticates itself.
struct Credential {
  enum class Kind { Anonymous, Bearer, Owner };
  Kind kind = Kind::Anonymous;
  std::string secret;

  static Credential anonymous() { return {}; }
  static Credential bearer(std::string token) { return {Kind::Bearer, std::move(token)}; }
  static Credential owner(std::string secret) { return {Kind::Owner, std::move(secret)}; }
};

struct PodOptions {
  AgentId owner;
  std::string owner_secret;
  /// Persist state here when set; loaded on construction.
  std::optional<std::filesystem::path> data_dir;
  cal::Clock clock = cal::system_clock();
};

/// The simulated personal data store. Thread-safe: reads share a lock, mutations are
/// serialized, and bodies are swapped whole so readers never observe a partial put.
class Store {
 public:
  /// Throws CorruptState when persisted files cannot be parsed.
  explicit Store(PodOptions opts);

  const AgentId& owner() const { return opts_.owner; }

  /// Resolves a credential to its agent (unset for anonymous). Throws Unauthorized for a
  /// wrong owner secret or an unknown or revoked token.
  AgentId authenticate(const Credential& cred) const;

  Decision check_access(const AgentId& agent, std::string_view path, Mode mode) const;

  Resource get_resource(const Credential& cred, std::string_view path) const;
  /// Returns the new etag. `if_match` of `*` requires the resource to exist.
  std::string put_resource(const Credential& cred, std::string_view path, std::string body,
                           std::string content_type,
                           const std::optional<std::string>& if_match = std::nullopt);

  /// Needs Append on the inbox. Returns the new notification id.
  std::string post_inbox(const Credential& cred, std::string body, std::string content_type);
  /// Needs Read on the inbox. Sorted by received time, then id.
  std::vector<Notification> list_inbox(const Credential& cred) const;
  Notification get_notification(const Credential& cred, std::string_view id) const;
  /// Needs Write on the inbox. Idempotent.
  void mark_processed(const Credential& cred, std::string_view id);

  Token issue_token(std::string_view owner_secret, const AgentId& agent);
  void revoke_token(std::string_view owner_secret, std::string_view value);

  void set_acl(std::string_view owner_secret, std::vector<AclEntry> acl);
  std::vector<AclEntry> acl(std::string_view owner_secret) const;

 private:
  void require_owner(std::string_view secret) const;
  AgentId authorize(const Credential& cred, std::string_view path, Mode mode) const;
  AgentId authenticate_locked(const Credential& cred) const;

  void load();
  void persist_resource(const Resource& r) const;
  void persist_notification(const Notification& n) const;
  void persist_acl() const;
  void persist_tokens() const;

  PodOptions opts_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const Resource>, std::less<>> resources_;
  std::map<std::string, Notification, std::less<>> inbox_;
  std::map<std::string, Token, std::less<>> tokens_;
  std::vector<AclEntry> acl_;
  std::uint64_t next_notification_ = 1;
};

/// The ACL a fresh pod starts with: `/profile` readable by everyone.
std::vector<AclEntry> default_acl();

}  // namespace caldesk::pod
