#include "caldesk/calmodel/time.hpp"

#include <chrono>
#include <cstdio>

namespace caldesk::cal {

namespace {

bool parse_digits(std::string_view text, std::size_t pos, std::size_t count, unsigned& out) {
  if (pos + count > text.size()) return false;
  unsigned value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<unsigned>(c - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::optional<Instant> make_instant(int year, unsigned month, unsigned day, unsigned hour,
                                    unsigned minute, unsigned second) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) return std::nullopt;
  auto days = sys_days{ymd}.time_since_epoch().count();
  return Instant{static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second};
}

CivilTime to_civil(Instant t) {
  using namespace std::chrono;
  std::int64_t days = t.seconds / 86400;
  std::int64_t rem = t.seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  return CivilTime{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                   static_cast<unsigned>(ymd.day()), static_cast<unsigned>(rem / 3600),
                   static_cast<unsigned>(rem % 3600 / 60), static_cast<unsigned>(rem % 60)};
}

std::string format_iso(Instant t) {
  auto c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02uZ", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

std::optional<Instant> try_parse_iso(std::string_view text) {
  // 0123456789012345678
  // YYYY-MM-DDTHH:MM:SSZ
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z')
    return std::nullopt;
  unsigned y, mo, d, h, mi, s;
  if (!parse_digits(text, 0, 4, y) || !parse_digits(text, 5, 2, mo) ||
      !parse_digits(text, 8, 2, d) || !parse_digits(text, 11, 2, h) ||
      !parse_digits(text, 14, 2, mi) || !parse_digits(text, 17, 2, s))
    return std::nullopt;
  return make_instant(static_cast<int>(y), mo, d, h, mi, s);
}

Instant parse_iso(std::string_view text) {
  if (auto t = try_parse_iso(text)) return *t;
  throw std::invalid_argument("not an ISO 8601 UTC instant: '" + std::string(text) + "'");
}

std::int64_t parse_duration(std::string_view text) {
  if (text.size() < 2) throw std::invalid_argument("bad duration: '" + std::string(text) + "'");
  std::int64_t unit = 0;
  switch (text.back()) {
    case 's': unit = 1; break;
    case 'm': unit = 60; break;
    case 'h': unit = 3600; break;
    default: throw std::invalid_argument("bad duration unit: '" + std::string(text) + "'");
  }
  std::int64_t n = 0;
  for (char c : text.substr(0, text.size() - 1)) {
    if (c < '0' || c > '9' || n > 1'000'000'000)
      throw std::invalid_argument("bad duration: '" + std::string(text) + "'");
    n = n * 10 + (c - '0');
  }
  return n * unit;
}

Interval::Interval(Instant start, Instant end) : start_(start), end_(end) {
  if (!(start < end))
    throw InvalidInterval("interval start must precede end: " + format_iso(start) + " / " +
                          format_iso(end));
}

std::optional<Interval> Interval::intersect(const Interval& other) const {
  Instant s = std::max(start_, other.start_);
  Instant e = std::min(end_, other.end_);
  if (!(s < e)) return std::nullopt;
  return Interval{s, e};
}

std::string format_interval(const Interval& iv) {
  return format_iso(iv.start()) + " " + format_iso(iv.end());
}

Clock system_clock() {
  return [] {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    return Instant{std::chrono::duration_cast<std::chrono::seconds>(now).count()};
  };
}

}  // namespace caldesk::cal
