#include "caldesk/calmodel/notification.hpp"

#include <algorithm>
#include <map>

#include "caldesk/calmodel/linked.hpp"

namespace caldesk::cal {

namespace {

const std::string& type_predicate() {
  static const std::string p = vocab("notificationType");
  return p;
}

}  // namespace

std::optional<std::string> notification_type(std::string_view body) {
  std::optional<std::string> type;
  for (const auto& st : parse_statements(body)) {
    if (st.predicate != type_predicate()) continue;
    if (type && *type != st.object) throw MalformedDoc("conflicting notification types");
    type = st.object;
  }
  return type;
}

std::string format_meeting_request(const Event& event, const AgentId& organizer) {
  Calendar cal(organizer);
  cal.upsert(event);
  std::string base = "urn:caldesk:meeting:" + iri_escape(event.uid);
  auto statements = calendar_statements(cal, base);
  statements.push_back({base, type_predicate(), std::string(kMeetingRequest)});
  return format_statements(statements);
}

Event parse_meeting_request(std::string_view body) {
  auto statements = parse_statements(body);
  auto type = std::find_if(statements.begin(), statements.end(),
                           [](const Statement& s) { return s.predicate == type_predicate(); });
  if (type == statements.end() || type->object != kMeetingRequest)
    throw MalformedDoc("not a meeting request");
  statements.erase(std::remove_if(statements.begin(), statements.end(),
                                  [](const Statement& s) { return s.predicate == type_predicate(); }),
                   statements.end());
  auto cal = from_statements(statements);
  if (cal.size() != 1) throw MalformedDoc("meeting request must hold exactly one event");
  return cal.events().begin()->second;
}

std::string format_conflict(const std::vector<UidPair>& pairs, std::string_view target_iri) {
  std::string base(target_iri);
  std::vector<Statement> statements{{base, type_predicate(), std::string(kConflict)}};
  for (const auto& [a, b] : pairs) {
    std::string subject = base + "#clash-" + iri_escape(a) + "-" + iri_escape(b);
    statements.push_back({subject, vocab("clashFirst"), a});
    statements.push_back({subject, vocab("clashSecond"), b});
  }
  return format_statements(statements);
}

std::vector<UidPair> parse_conflict(std::string_view body) {
  std::map<std::string, UidPair> by_subject;
  bool typed = false;
  for (const auto& st : parse_statements(body)) {
    if (st.predicate == type_predicate()) {
      typed = st.object == kConflict;
    } else if (st.predicate == vocab("clashFirst")) {
      by_subject[st.subject].first = st.object;
    } else if (st.predicate == vocab("clashSecond")) {
      by_subject[st.subject].second = st.object;
    }
  }
  if (!typed) throw MalformedDoc("not a conflict notification");
  std::vector<UidPair> out;
  for (auto& [_, pair] : by_subject) out.push_back(std::move(pair));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace caldesk::cal
