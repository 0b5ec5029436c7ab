#include "caldesk/calmodel/agent.hpp"

#include <stdexcept>

namespace caldesk {

bool is_absolute_http_iri(std::string_view iri) {
  std::string_view rest;
  if (iri.starts_with("http://"))
    rest = iri.substr(7);
  else if (iri.starts_with("https://"))
    rest = iri.substr(8);
  else
    return false;
  if (rest.empty() || rest.front() == '/' || rest.front() == ':') return false;
  for (unsigned char c : iri)
    if (c <= 0x20 || c == 0x7f || c == '<' || c == '>' || c == '"') return false;
  return true;
}

AgentId AgentId::parse(std::string_view iri) {
  if (!is_absolute_http_iri(iri))
    throw std::invalid_argument("agent id is not an absolute HTTP IRI: '" + std::string(iri) + "'");
  return AgentId{std::string(iri)};
}

}  // namespace caldesk
