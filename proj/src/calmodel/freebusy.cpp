#include "caldesk/calmodel/freebusy.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>

#include "caldesk/calmodel/linked.hpp"

namespace caldesk::cal {

std::vector<Interval> coalesce(std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end());
  std::vector<Interval> out;
  for (const auto& iv : intervals) {
    if (!out.empty() && iv.start() <= out.back().end()) {
      if (iv.end() > out.back().end()) out.back() = Interval{out.back().start(), iv.end()};
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

FreeBusy project_freebusy(const Calendar& cal, const Interval& window) {
  std::vector<Interval> clipped;
  for (const auto& [uid, e] : cal.events())
    if (auto part = e.interval.intersect(window)) clipped.push_back(*part);
  return FreeBusy{cal.owner(), window, coalesce(std::move(clipped))};
}

std::string format_freebusy(const FreeBusy& fb, std::string_view base_iri) {
  std::string base(base_iri);
  std::vector<Statement> st;
  st.push_back({base, vocab("owner"), fb.owner.iri()});
  st.push_back({base, vocab("windowStart"), format_iso(fb.window.start())});
  st.push_back({base, vocab("windowEnd"), format_iso(fb.window.end())});
  for (std::size_t i = 0; i < fb.busy.size(); ++i) {
    char frag[32];
    std::snprintf(frag, sizeof frag, "#busy-%06zu", i);
    st.push_back({base + frag, vocab("start"), format_iso(fb.busy[i].start())});
    st.push_back({base + frag, vocab("end"), format_iso(fb.busy[i].end())});
  }
  return format_statements(st);
}

FreeBusy parse_freebusy(std::string_view text) {
  std::optional<std::string> owner;
  std::optional<Instant> wstart, wend;
  std::map<std::string, std::pair<std::optional<Instant>, std::optional<Instant>>> busy;

  auto instant = [](const std::string& v) {
    auto t = try_parse_iso(v);
    if (!t) throw MalformedDoc("bad instant '" + v + "' in free/busy document");
    return *t;
  };
  for (const auto& s : parse_statements(text)) {
    if (!s.predicate.starts_with(kVocab)) throw MalformedDoc("unknown predicate <" + s.predicate + ">");
    std::string term = s.predicate.substr(kVocab.size());
    if (term == "owner")
      owner = s.object;
    else if (term == "windowStart")
      wstart = instant(s.object);
    else if (term == "windowEnd")
      wend = instant(s.object);
    else if (term == "start")
      busy[s.subject].first = instant(s.object);
    else if (term == "end")
      busy[s.subject].second = instant(s.object);
    else
      throw MalformedDoc("unknown predicate <" + s.predicate + ">");
  }
  if (!owner || !wstart || !wend) throw MalformedDoc("free/busy document lacks owner or window");
  if (!(*wstart < *wend)) throw MalformedDoc("free/busy window is empty");

  FreeBusy fb{{}, Interval{*wstart, *wend}, {}};
  if (!owner->empty()) {
    try {
      fb.owner = AgentId::parse(*owner);
    } catch (const std::invalid_argument& e) {
      throw MalformedDoc(e.what());
    }
  }
  // Subjects carry zero-padded indices, so map order is list order.
  for (const auto& [subject, ends] : busy) {
    if (!ends.first || !ends.second || !(*ends.first < *ends.second))
      throw MalformedDoc("incomplete busy interval <" + subject + ">");
    Interval iv{*ends.first, *ends.second};
    if (!fb.window.contains(iv)) throw MalformedDoc("busy interval outside window");
    if (!fb.busy.empty() && !(fb.busy.back().end() < iv.start()))
      throw MalformedDoc("busy intervals not sorted, disjoint and coalesced");
    fb.busy.push_back(iv);
  }
  return fb;
}

}  // namespace caldesk::cal
