#include "caldesk/podstore/acl.hpp"

#include <stdexcept>

#include "caldesk/common/util.hpp"

namespace caldesk::pod {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Read: return "Read";
    case Mode::Write: return "Write";
    case Mode::Append: return "Append";
    case Mode::Control: return "Control";
  }
  return "Read";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (Mode m : kAllModes)
    if (to_string(m) == text) return m;
  return std::nullopt;
}

bool path_covers(std::string_view entry_path, std::string_view path) {
  if (!path.starts_with(entry_path)) return false;
  if (path.size() == entry_path.size()) return true;
  if (entry_path.ends_with('/')) return true;
  return path[entry_path.size()] == '/';
}

Decision check_access(const std::vector<AclEntry>& acl, const AgentId& owner, const AgentId& agent,
                      std::string_view path, Mode mode) {
  if (!agent.empty() && agent == owner) return Decision::Allow;
  std::size_t best = 0;
  bool matched = false;
  bool allowed = false;
  for (const auto& e : acl) {
    if (!(e.wildcard() || (!agent.empty() && e.agent == agent))) continue;
    if (!path_covers(e.path, path)) continue;
    if (!matched || e.path.size() > best) {
      matched = true;
      best = e.path.size();
      allowed = e.modes.contains(mode);
    } else if (e.path.size() == best) {
      allowed = allowed || e.modes.contains(mode);
    }
  }
  return allowed ? Decision::Allow : Decision::Deny;
}

std::vector<AclEntry> parse_acl(std::string_view text) {
  std::vector<AclEntry> out;
  std::size_t line_no = 0;
  for (const auto& raw : util::split(text, '\n')) {
    ++line_no;
    auto line = util::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("acl line " + std::to_string(line_no) + ": " + why);
    };
    auto fields = util::split(line, ' ');
    std::erase_if(fields, [](const std::string& f) { return f.empty(); });
    if (fields.size() != 3) fail("expected '{path} {agent|*} {modes}'");
    auto path = normalize_path(fields[0]);
    if (!path) fail("bad path '" + fields[0] + "'");
    AclEntry e{*path, {}, {}};
    if (fields[1] != "*") {
      try {
        e.agent = AgentId::parse(fields[1]);
      } catch (const std::invalid_argument& ex) {
        fail(ex.what());
      }
    }
    for (const auto& m : util::split(fields[2], ',')) {
      auto mode = parse_mode(m);
      if (!mode) fail("unknown mode '" + m + "'");
      e.modes.insert(*mode);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string format_acl(const std::vector<AclEntry>& acl) {
  std::string out;
  for (const auto& e : acl) {
    out += e.path;
    out += ' ';
    out += e.wildcard() ? std::string("*") : e.agent.iri();
    out += ' ';
    bool first = true;
    for (Mode m : kAllModes) {
      if (!e.modes.contains(m)) continue;
      if (!first) out += ',';
      out += to_string(m);
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::optional<std::string> normalize_path(std::string_view path) {
  if (path.empty() || path.front() != '/') return std::nullopt;
  std::string out = "/";
  for (const auto& seg : util::split(path.substr(1), '/')) {
    if (seg.empty()) continue;
    if (seg == "." || seg == "..") return std::nullopt;
    for (unsigned char c : seg)
      if (c < 0x20 || c == 0x7f) return std::nullopt;
    if (out.size() > 1) out += '/';
    out += seg;
  }
  if (path.size() > 1 && path.back() == '/' && out.size() > 1) out += '/';
  return out;
}

}  // namespace caldesk::pod
