#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "caldesk/calmodel/event.hpp"

namespace caldesk::cal {

inline constexpr std::string_view kVocab = "http://caldesk.example/vocab#";

/// `http://caldesk.example/vocab#{term}`
std::string vocab(std::string_view term);

/// One `<subject> <predicate> "object" .` line. Objects are always string literals.
struct Statement {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Statement&) const = default;
};

std::string format_statement(const Statement& s);
/// Throws MalformedDoc.
Statement parse_statement(std::string_view line);
/// Parses LF-separated statements; blank lines are skipped. Throws MalformedDoc.
std::vector<Statement> parse_statements(std::string_view text);
/// Formats, sorts and LF-terminates every statement.
std::string format_statements(const std::vector<Statement>& statements);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string iri_escape(std::string_view s);

/// Sorted statement lines describing a Calendar.
struct LinkedCalendarDoc {
  std::vector<std::string> lines;

  /// Each line LF-terminated.
  std::string text() const;
  /// Splits text into lines and checks each against the statement grammar.
  static LinkedCalendarDoc parse(std::string_view text);

  bool operator==(const LinkedCalendarDoc&) const = default;
};

/// One owner statement on `<base_iri>` plus eight statements per event on
/// `<base_iri#ev-{uid}>`. Source rank is not represented.
LinkedCalendarDoc to_linked(const Calendar& cal, std::string_view base_iri);
LinkedCalendarDoc to_linked(const std::vector<Statement>& statements);

/// Inverse of to_linked (source rank comes back as 0). Throws MalformedDoc.
Calendar from_linked(const LinkedCalendarDoc& doc);
Calendar from_statements(const std::vector<Statement>& statements);

/// Statements to_linked would emit, unsorted.
std::vector<Statement> calendar_statements(const Calendar& cal, std::string_view base_iri);

}  // namespace caldesk::cal
