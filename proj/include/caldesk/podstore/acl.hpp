#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caldesk/calmodel/agent.hpp"

namespace caldesk::pod {

enum class Mode : std::uint8_t { Read = 1, Write = 2, Append = 4, Control = 8 };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view text);

inline constexpr Mode kAllModes[] = {Mode::Read, Mode::Write, Mode::Append, Mode::Control};

class ModeSet {
 public:
  ModeSet() = default;
  ModeSet(std::initializer_list<Mode> modes) {
    for (Mode m : modes) insert(m);
  }

  void insert(Mode m) { bits_ |= static_cast<std::uint8_t>(m); }
  bool contains(Mode m) const { return bits_ & static_cast<std::uint8_t>(m); }
  bool empty() const { return bits_ == 0; }

  bool operator==(const ModeSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

/// Grants `modes` on `path` and everything below it. An unset agent means `*`.
struct AclEntry {
  std::string path;
  AgentId agent;
  ModeSet modes;

  bool wildcard() const { return agent.empty(); }
  bool operator==(const AclEntry&) const = default;
};

enum class Decision { Allow, Deny };

/// True if `entry_path` covers `path` on segment boundaries: `/calendar/` and `/calendar`
/// both cover `/calendar/combined`, neither covers `/calendars`.
bool path_covers(std::string_view entry_path, std::string_view path);

/// Deny by default. The owner is always allowed. Otherwise, among the entries naming
/// `agent` or `*` whose path covers `path`, only those with the longest path count; the
/// request is allowed if one of them holds `mode`. An unset `agent` is anonymous and only
/// matches `*` entries.
Decision check_access(const std::vector<AclEntry>& acl, const AgentId& owner, const AgentId& agent,
                      std::string_view path, Mode mode);

/// One entry per line: `{path} {agent-iri|*} {Mode,Mode...}`; `#` starts a comment line.
/// Throws std::invalid_argument with the offending line number.
std::vector<AclEntry> parse_acl(std::string_view text);
std::string format_acl(const std::vector<AclEntry>& acl);

/// Absolute, `/`-rooted, duplicate slashes collapsed; `.`/`..` segments are rejected.
/// A trailing `/` is kept. nullopt if the path cannot be normalized.
std::optional<std::string> normalize_path(std::string_view path);

}  // namespace caldesk::pod
