#include "caldesk/calmodel/ics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <optional>
#include <vector>

namespace caldesk::cal {

namespace {

constexpr std::string_view kCrlf = "\r\n";
constexpr std::string_view kConflictStatus = "X-CALDESK-CONFLICT";

struct ContentLine {
  std::size_t line_no;
  std::string name;                 // upper-cased
  std::vector<std::string> params;  // raw `KEY=VALUE`, key upper-cased
  std::string value;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw MalformedIcs("line " + std::to_string(line_no) + ": " + what);
}

[[noreturn]] void unsupported(std::size_t line_no, const std::string& what) {
  throw UnsupportedFeature("line " + std::to_string(line_no) + ": " + what);
}

// Splits on LF (CR optional) and joins continuation lines that start with space or tab.
std::vector<std::pair<std::size_t, std::string>> unfold(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (!raw.empty() && (raw.front() == ' ' || raw.front() == '\t')) {
      if (lines.empty()) malformed(line_no, "continuation line without a preceding line");
      lines.back().second.append(raw.substr(1));
      continue;
    }
    if (raw.empty()) continue;
    lines.emplace_back(line_no, std::string(raw));
  }
  return lines;
}

ContentLine split_content_line(std::size_t line_no, const std::string& line) {
  // The value starts after the first ':' that is not inside a quoted parameter value.
  bool quoted = false;
  std::size_t colon = std::string::npos;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == ':' && !quoted) {
      colon = i;
      break;
    }
  }
  if (colon == std::string::npos) malformed(line_no, "missing ':' in content line");
  ContentLine out{line_no, {}, {}, line.substr(colon + 1)};
  std::string_view head(line.data(), colon);
  std::size_t semi = head.find(';');
  out.name = upper(head.substr(0, semi));
  if (out.name.empty()) malformed(line_no, "empty property name");
  while (semi != std::string_view::npos) {
    std::size_t next = head.find(';', semi + 1);
    std::string_view param = head.substr(semi + 1, next == std::string_view::npos ? next : next - semi - 1);
    std::size_t eq = param.find('=');
    if (eq == std::string_view::npos) malformed(line_no, "parameter without '='");
    out.params.push_back(upper(param.substr(0, eq)) + "=" + std::string(param.substr(eq + 1)));
    semi = next;
  }
  return out;
}

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ';': out += "\\;"; break;
      case ',': out += "\\,"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_text(std::size_t line_no, std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) malformed(line_no, "dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case ';': out += ';'; break;
      case ',': out += ','; break;
      case 'n':
      case 'N': out += '\n'; break;
      default: malformed(line_no, std::string("unknown escape \\") + s[i]);
    }
  }
  return out;
}

std::string format_ics_datetime(Instant t) {
  auto c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02u%02uT%02u%02u%02uZ", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

Instant parse_ics_datetime(const ContentLine& cl) {
  for (const auto& p : cl.params) {
    if (p.starts_with("TZID=")) unsupported(cl.line_no, "TZID parameter on " + cl.name);
    if (p == "VALUE=DATE") unsupported(cl.line_no, "all-day date on " + cl.name);
  }
  const std::string& v = cl.value;
  auto digits = [&](std::size_t pos, std::size_t n) -> unsigned {
    unsigned out = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(v[i])))
        malformed(cl.line_no, "bad datetime '" + v + "'");
      out = out * 10 + static_cast<unsigned>(v[i] - '0');
    }
    return out;
  };
  if (v.size() == 8) {
    digits(0, 8);
    unsupported(cl.line_no, "all-day date on " + cl.name);
  }
  if (v.size() == 15 && v[8] == 'T') {
    digits(0, 8);
    digits(9, 6);
    unsupported(cl.line_no, "floating (non-UTC) datetime on " + cl.name);
  }
  if (v.size() != 16 || v[8] != 'T' || v[15] != 'Z')
    malformed(cl.line_no, "bad datetime '" + v + "'");
  auto t = make_instant(static_cast<int>(digits(0, 4)), digits(4, 2), digits(6, 2), digits(9, 2),
                        digits(11, 2), digits(13, 2));
  if (!t) malformed(cl.line_no, "bad datetime '" + v + "'");
  return *t;
}

struct PendingEvent {
  std::size_t begin_line = 0;
  std::optional<std::string> uid;
  std::optional<Instant> start, end, stamped;
  std::optional<std::string> summary;
  std::optional<std::uint64_t> sequence;
  std::optional<EventStatus> status;
};

template <typename T>
void set_once(std::optional<T>& slot, T value, const ContentLine& cl) {
  if (slot) malformed(cl.line_no, "duplicate " + cl.name);
  slot = std::move(value);
}

void apply_property(PendingEvent& ev, const ContentLine& cl) {
  const std::string& n = cl.name;
  if (n == "RRULE" || n == "RDATE" || n == "EXDATE" || n == "EXRULE")
    unsupported(cl.line_no, n + " (recurrence)");
  if (n == "UID") {
    set_once(ev.uid, unescape_text(cl.line_no, cl.value), cl);
  } else if (n == "DTSTART") {
    set_once(ev.start, parse_ics_datetime(cl), cl);
  } else if (n == "DTEND") {
    set_once(ev.end, parse_ics_datetime(cl), cl);
  } else if (n == "DTSTAMP") {
    set_once(ev.stamped, parse_ics_datetime(cl), cl);
  } else if (n == "SUMMARY") {
    set_once(ev.summary, unescape_text(cl.line_no, cl.value), cl);
  } else if (n == "SEQUENCE") {
    std::uint64_t seq = 0;
    const auto* first = cl.value.data();
    const auto* last = first + cl.value.size();
    auto [ptr, ec] = std::from_chars(first, last, seq);
    if (cl.value.empty() || ec != std::errc{} || ptr != last)
      malformed(cl.line_no, "bad SEQUENCE '" + cl.value + "'");
    set_once(ev.sequence, seq, cl);
  } else if (n == "STATUS") {
    std::string v = upper(cl.value);
    EventStatus s;
    if (v == "CONFIRMED")
      s = EventStatus::Confirmed;
    else if (v == "TENTATIVE")
      s = EventStatus::Tentative;
    else if (v == kConflictStatus)
      s = EventStatus::Conflict;
    else if (v == "CANCELLED")
      unsupported(cl.line_no, "STATUS:CANCELLED");
    else
      malformed(cl.line_no, "unknown STATUS '" + cl.value + "'");
    set_once(ev.status, s, cl);
  } else {
    for (const auto& p : cl.params)
      if (p.starts_with("TZID=")) unsupported(cl.line_no, "TZID parameter on " + n);
    // Other properties are outside the subset and dropped.
  }
}

Event finish_event(const PendingEvent& p, const std::string& origin) {
  auto missing = [&](const char* what) {
    malformed(p.begin_line, std::string("VEVENT without ") + what);
  };
  if (!p.uid) missing("UID");
  if (!p.start) missing("DTSTART");
  if (!p.end) missing("DTEND");
  if (!(*p.start < *p.end)) malformed(p.begin_line, "VEVENT " + *p.uid + " has DTEND <= DTSTART");
  Event e{*p.uid,
          Interval{*p.start, *p.end},
          p.summary.value_or(""),
          p.status.value_or(EventStatus::Confirmed),
          EventVersion{p.sequence.value_or(0), p.stamped.value_or(Instant{}), 0},
          origin};
  try {
    validate_event(e);
  } catch (const InvalidEvent& ex) {
    malformed(p.begin_line, ex.what());
  }
  return e;
}

std::vector<Event> parse_events(std::string_view text, const std::string& origin,
                                bool allow_bare_vevent) {
  auto lines = unfold(text);
  if (lines.empty()) throw MalformedIcs("empty input");

  std::vector<Event> events;
  enum class State { Start, Calendar, Event, Done } state = State::Start;
  bool bare = false;
  PendingEvent pending;

  for (const auto& [line_no, line] : lines) {
    ContentLine cl = split_content_line(line_no, line);
    std::string value = upper(cl.value);
    switch (state) {
      case State::Start:
        if (cl.name == "BEGIN" && value == "VCALENDAR") {
          state = State::Calendar;
        } else if (allow_bare_vevent && cl.name == "BEGIN" && value == "VEVENT") {
          bare = true;
          pending = PendingEvent{};
          pending.begin_line = line_no;
          state = State::Event;
        } else {
          malformed(line_no, "expected BEGIN:VCALENDAR");
        }
        break;
      case State::Calendar:
        if (cl.name == "BEGIN") {
          if (value == "VEVENT") {
            pending = PendingEvent{};
          pending.begin_line = line_no;
            state = State::Event;
          } else {
            unsupported(line_no, "component " + value);
          }
        } else if (cl.name == "END") {
          if (value != "VCALENDAR") malformed(line_no, "END:" + value + " inside VCALENDAR");
          state = State::Done;
        }
        // VERSION, PRODID, CALSCALE and X- calendar properties are ignored.
        break;
      case State::Event:
        if (cl.name == "BEGIN") {
          unsupported(line_no, "component " + value + " inside VEVENT");
        } else if (cl.name == "END") {
          if (value != "VEVENT") malformed(line_no, "END:" + value + " inside VEVENT");
          events.push_back(finish_event(pending, origin));
          state = bare ? State::Done : State::Calendar;
        } else {
          apply_property(pending, cl);
        }
        break;
      case State::Done:
        malformed(line_no, "content after end of calendar");
    }
  }
  if (state == State::Event) malformed(pending.begin_line, "unterminated VEVENT");
  if (state != State::Done) throw MalformedIcs("unterminated VCALENDAR");
  return events;
}

}  // namespace

Calendar parse_ics(std::string_view text, AgentId owner, std::string origin) {
  Calendar cal(std::move(owner));
  for (auto& e : parse_events(text, origin, false)) {
    std::string uid = e.uid;
    if (!cal.insert(std::move(e))) throw MalformedIcs("duplicate UID " + uid);
  }
  return cal;
}

std::string serialize_vevent(const Event& e) {
  std::string out;
  auto line = [&](std::string_view name, std::string_view value) {
    out.append(name).append(":").append(value).append(kCrlf);
  };
  line("BEGIN", "VEVENT");
  line("UID", escape_text(e.uid));
  line("DTSTAMP", format_ics_datetime(e.version.stamped));
  line("DTSTART", format_ics_datetime(e.interval.start()));
  line("DTEND", format_ics_datetime(e.interval.end()));
  line("SUMMARY", escape_text(e.summary));
  line("SEQUENCE", std::to_string(e.version.sequence));
  switch (e.status) {
    case EventStatus::Confirmed: line("STATUS", "CONFIRMED"); break;
    case EventStatus::Tentative: line("STATUS", "TENTATIVE"); break;
    case EventStatus::Conflict: line("STATUS", kConflictStatus); break;
  }
  line("END", "VEVENT");
  return out;
}

std::string serialize_ics(const Calendar& cal) {
  std::string out;
  out.append("BEGIN:VCALENDAR").append(kCrlf);
  out.append("VERSION:2.0").append(kCrlf);
  out.append("PRODID:-//caldesk//caldesk 1.0//EN").append(kCrlf);
  // std::map iteration is already uid-ordered.
  for (const auto& [uid, e] : cal.events()) out += serialize_vevent(e);
  out.append("END:VCALENDAR").append(kCrlf);
  return out;
}

Event parse_single_event(std::string_view text, std::string origin) {
  auto events = parse_events(text, origin, true);
  if (events.size() != 1)
    throw MalformedIcs("expected exactly one VEVENT, got " + std::to_string(events.size()));
  return std::move(events.front());
}

}  // namespace caldesk::cal
