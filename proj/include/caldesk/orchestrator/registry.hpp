#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caldesk/calmodel/agent.hpp"
#include "caldesk/calmodel/time.hpp"

namespace caldesk::orch {

enum class LastStatus { Never, Ok, PermissionDenied, SourceUnreachable, ConfigMissing, ConfigInvalid, PodUnreachable };

std::string to_string(LastStatus s);
std::optional<LastStatus> parse_last_status(std::string_view s);

/// What the orchestrator keeps about a user. Never calendar content.
struct Registration {
  AgentId user;
  std::string pod_base_url;
  std::string token;
  cal::Instant created;
  std::optional<cal::Instant> last_sync;  // in memory only
  LastStatus last_status = LastStatus::Never;

  bool operator==(const Registration&) const = default;
};

class AlreadyRegistered : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NotRegistered : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One line per registration: `{user-iri} {pod-url} {token} {created-iso} {last-status}`.
std::string format_registrations(const std::vector<Registration>& regs);
/// Throws std::invalid_argument naming the bad line.
std::vector<Registration> parse_registrations(std::string_view text);

/// The local storage file. Every save replaces the file atomically. Not thread-safe.
class Registry {
 public:
  /// Loads `file` when it exists. Throws pod::CorruptState when it cannot be parsed.
  explicit Registry(std::optional<std::filesystem::path> file = std::nullopt);

  const std::map<AgentId, Registration>& all() const { return regs_; }
  const Registration* find(const AgentId& user) const;

  void add(Registration r);
  void remove(const AgentId& user);
  void set_status(const AgentId& user, LastStatus status, cal::Instant when);

 private:
  void save() const;

  std::optional<std::filesystem::path> file_;
  std::map<AgentId, Registration> regs_;
};

}  // namespace caldesk::orch
