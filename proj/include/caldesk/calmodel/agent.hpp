#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace caldesk {

/// True for `http://host...` / `https://host...` with a non-empty authority and no whitespace.
bool is_absolute_http_iri(std::string_view iri);

/// WebID-like agent identity. A default-constructed AgentId is "unset" and is the only
/// way to get an empty one.
class AgentId {
 public:
  AgentId() = default;

  /// Throws std::invalid_argument unless `iri` is an absolute HTTP IRI.
  static AgentId parse(std::string_view iri);

  const std::string& iri() const { return iri_; }
  bool empty() const { return iri_.empty(); }

  auto operator<=>(const AgentId&) const = default;

 private:
  explicit AgentId(std::string iri) : iri_(std::move(iri)) {}

  std::string iri_;
};

}  // namespace caldesk
