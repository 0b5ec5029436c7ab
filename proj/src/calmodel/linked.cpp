#include "caldesk/calmodel/linked.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>

namespace caldesk::cal {

namespace {

constexpr std::string_view kEventFragment = "#ev-";

std::string escape_literal(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

[[noreturn]] void bad(std::string_view line, const std::string& why) {
  throw MalformedDoc(why + ": '" + std::string(line) + "'");
}

// Reads `<...>` at pos; returns the IRI and advances pos past '>'.
std::string read_iri(std::string_view line, std::size_t& pos) {
  if (pos >= line.size() || line[pos] != '<') bad(line, "expected '<'");
  std::size_t close = line.find('>', pos + 1);
  if (close == std::string_view::npos) bad(line, "unterminated IRI");
  std::string iri(line.substr(pos + 1, close - pos - 1));
  if (iri.empty()) bad(line, "empty IRI");
  for (unsigned char c : iri)
    if (c <= 0x20 || c == '<' || c == '"') bad(line, "invalid character in IRI");
  pos = close + 1;
  return iri;
}

std::uint64_t parse_uint(std::string_view text, std::string_view line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    bad(line, "not a non-negative integer");
  return v;
}

}  // namespace

std::string vocab(std::string_view term) {
  std::string out(kVocab);
  out += term;
  return out;
}

std::string iri_escape(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '.' || c == '_' || c == '~';
    if (unreserved) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

std::string format_statement(const Statement& s) {
  return "<" + s.subject + "> <" + s.predicate + "> \"" + escape_literal(s.object) + "\" .";
}

Statement parse_statement(std::string_view line) {
  Statement st;
  std::size_t pos = 0;
  st.subject = read_iri(line, pos);
  if (pos >= line.size() || line[pos] != ' ') bad(line, "expected space after subject");
  ++pos;
  st.predicate = read_iri(line, pos);
  if (pos >= line.size() || line[pos] != ' ') bad(line, "expected space after predicate");
  ++pos;
  if (pos >= line.size() || line[pos] != '"') bad(line, "expected string literal");
  ++pos;
  bool closed = false;
  while (pos < line.size()) {
    char c = line[pos++];
    if (c == '"') {
      closed = true;
      break;
    }
    if (c == '\\') {
      if (pos >= line.size()) bad(line, "dangling escape");
      char e = line[pos++];
      if (e == '"' || e == '\\')
        st.object += e;
      else if (e == 'n')
        st.object += '\n';
      else
        bad(line, "unknown escape");
    } else if (c == '\n' || c == '\r') {
      bad(line, "raw line break in literal");
    } else {
      st.object += c;
    }
  }
  if (!closed) bad(line, "unterminated literal");
  if (line.substr(pos) != " .") bad(line, "expected ' .' terminator");
  return st;
}

std::vector<Statement> parse_statements(std::string_view text) {
  std::vector<Statement> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    out.push_back(parse_statement(line));
  }
  return out;
}

std::string format_statements(const std::vector<Statement>& statements) {
  return to_linked(statements).text();
}

std::string LinkedCalendarDoc::text() const {
  std::string out;
  for (const auto& l : lines) out.append(l).push_back('\n');
  return out;
}

LinkedCalendarDoc LinkedCalendarDoc::parse(std::string_view text) {
  LinkedCalendarDoc doc;
  for (const auto& st : parse_statements(text)) doc.lines.push_back(format_statement(st));
  return doc;
}

std::vector<Statement> calendar_statements(const Calendar& cal, std::string_view base_iri) {
  std::vector<Statement> out;
  std::string base(base_iri);
  out.push_back({base, vocab("owner"), cal.owner().iri()});
  for (const auto& [uid, e] : cal.events()) {
    std::string subject = base + std::string(kEventFragment) + iri_escape(uid);
    out.push_back({subject, vocab("uid"), e.uid});
    out.push_back({subject, vocab("start"), format_iso(e.interval.start())});
    out.push_back({subject, vocab("end"), format_iso(e.interval.end())});
    out.push_back({subject, vocab("summary"), e.summary});
    out.push_back({subject, vocab("sequence"), std::to_string(e.version.sequence)});
    out.push_back({subject, vocab("stamped"), format_iso(e.version.stamped)});
    out.push_back({subject, vocab("status"), std::string(to_string(e.status))});
    out.push_back({subject, vocab("origin"), e.origin});
  }
  return out;
}

LinkedCalendarDoc to_linked(const std::vector<Statement>& statements) {
  LinkedCalendarDoc doc;
  doc.lines.reserve(statements.size());
  for (const auto& st : statements) doc.lines.push_back(format_statement(st));
  std::sort(doc.lines.begin(), doc.lines.end());
  doc.lines.erase(std::unique(doc.lines.begin(), doc.lines.end()), doc.lines.end());
  return doc;
}

LinkedCalendarDoc to_linked(const Calendar& cal, std::string_view base_iri) {
  return to_linked(calendar_statements(cal, base_iri));
}

Calendar from_statements(const std::vector<Statement>& statements) {
  // subject -> predicate term -> object
  std::map<std::string, std::map<std::string, std::string>> by_subject;
  std::optional<std::string> base;
  std::string owner;
  for (const auto& st : statements) {
    if (!st.predicate.starts_with(kVocab))
      throw MalformedDoc("unknown predicate <" + st.predicate + ">");
    std::string term = st.predicate.substr(kVocab.size());
    static const std::vector<std::string> kEventTerms = {
        "uid", "start", "end", "summary", "sequence", "stamped", "status", "origin"};
    if (term == "owner") {
      if (base && (*base != st.subject || owner != st.object))
        throw MalformedDoc("conflicting owner statements");
      base = st.subject;
      owner = st.object;
      continue;
    }
    if (std::find(kEventTerms.begin(), kEventTerms.end(), term) == kEventTerms.end())
      throw MalformedDoc("unknown predicate <" + st.predicate + ">");
    auto& fields = by_subject[st.subject];
    auto [it, inserted] = fields.emplace(term, st.object);
    if (!inserted && it->second != st.object)
      throw MalformedDoc("conflicting '" + term + "' statements for <" + st.subject + ">");
  }
  if (!base) throw MalformedDoc("document has no owner statement");

  Calendar cal;
  if (!owner.empty()) {
    try {
      cal.set_owner(AgentId::parse(owner));
    } catch (const std::invalid_argument& e) {
      throw MalformedDoc(e.what());
    }
  }
  const std::string prefix = *base + std::string(kEventFragment);
  for (const auto& [subject, fields] : by_subject) {
    if (!subject.starts_with(prefix)) throw MalformedDoc("unexpected subject <" + subject + ">");
    auto get = [&](const char* term) -> const std::string* {
      auto it = fields.find(term);
      return it == fields.end() ? nullptr : &it->second;
    };
    for (const char* required : {"uid", "start", "end"})
      if (!get(required))
        throw MalformedDoc(std::string("missing '") + required + "' for <" + subject + ">");
    const std::string& uid = *get("uid");
    if (subject != prefix + iri_escape(uid))
      throw MalformedDoc("subject <" + subject + "> does not match uid '" + uid + "'");

    auto instant = [&](const std::string& v) {
      auto t = try_parse_iso(v);
      if (!t) throw MalformedDoc("bad instant '" + v + "' for <" + subject + ">");
      return *t;
    };
    Instant start = instant(*get("start"));
    Instant end = instant(*get("end"));
    if (!(start < end)) throw MalformedDoc("empty interval for <" + subject + ">");

    Event e{uid, Interval{start, end}, "", EventStatus::Confirmed, {}, ""};
    if (auto* v = get("summary")) e.summary = *v;
    if (auto* v = get("sequence")) e.version.sequence = parse_uint(*v, subject);
    if (auto* v = get("stamped")) e.version.stamped = instant(*v);
    if (auto* v = get("status")) {
      auto s = parse_status(*v);
      if (!s) throw MalformedDoc("unknown status '" + *v + "'");
      e.status = *s;
    }
    if (auto* v = get("origin")) e.origin = *v;
    try {
      cal.insert(std::move(e));
    } catch (const InvalidEvent& ex) {
      throw MalformedDoc(ex.what());
    }
  }
  return cal;
}

Calendar from_linked(const LinkedCalendarDoc& doc) {
  std::vector<Statement> statements;
  statements.reserve(doc.lines.size());
  for (const auto& line : doc.lines) statements.push_back(parse_statement(line));
  return from_statements(statements);
}

}  // namespace caldesk::cal
