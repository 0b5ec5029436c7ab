#include "caldesk/orchestrator/config.hpp"

#include <charconv>
#include <map>
#include <set>

#include "caldesk/calmodel/linked.hpp"
#include "caldesk/common/http.hpp"
#include "caldesk/podstore/acl.hpp"

namespace caldesk::orch {

namespace {

constexpr std::string_view kSourceFragment = "#source-";

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool is_http_url(std::string_view s) { return net::parse_url(s).has_value(); }

}  // namespace

std::string to_string(SyncMode m) {
  switch (m) {
    case SyncMode::HybridExternalFirst: return "HybridExternalFirst";
    case SyncMode::SolidOnly: return "SolidOnly";
    case SyncMode::SolidFirstHybrid: return "SolidFirstHybrid";
  }
  return "?";
}

std::string to_string(InboxRoute r) {
  switch (r) {
    case InboxRoute::SeparateResource: return "SeparateResource";
    case InboxRoute::IcsInPod: return "IcsInPod";
    case InboxRoute::SeparateRemoteCalendar: return "SeparateRemoteCalendar";
  }
  return "?";
}

std::optional<SyncMode> parse_mode(std::string_view s) {
  for (auto m : {SyncMode::HybridExternalFirst, SyncMode::SolidOnly, SyncMode::SolidFirstHybrid})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::optional<InboxRoute> parse_route(std::string_view s) {
  for (auto r : {InboxRoute::SeparateResource, InboxRoute::IcsInPod, InboxRoute::SeparateRemoteCalendar})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

std::optional<std::string> route_resource(const SyncConfig& cfg) {
  if (cfg.mode != SyncMode::SolidFirstHybrid || !cfg.inbox_route) return std::nullopt;
  switch (*cfg.inbox_route) {
    case InboxRoute::SeparateResource: return std::string(kInboxCalendarPath);
    case InboxRoute::IcsInPod: return std::string(kInboxIcsPath);
    case InboxRoute::SeparateRemoteCalendar: return std::nullopt;
  }
  return std::nullopt;
}

ConfigInvalid::ConfigInvalid(std::vector<std::string> problems)
    : std::runtime_error("invalid orchestrator config: " + join(problems)), problems_(std::move(problems)) {}

SyncConfig validate_config(std::string_view doc) {
  std::vector<cal::Statement> statements;
  try {
    statements = cal::parse_statements(doc);
  } catch (const std::exception& e) {
    throw ConfigInvalid({e.what()});
  }

  std::vector<std::string> problems;
  // Document-level terms live on the subject carrying `mode`; everything else must be a
  // source subject below it.
  std::optional<std::string> base;
  for (const auto& st : statements)
    if (st.predicate == cal::vocab("mode")) base = st.subject;
  if (!base) {
    problems.push_back("missing mode");
    throw ConfigInvalid(problems);
  }

  std::map<std::string, std::string> doc_terms;
  struct RawSource {
    std::optional<std::string> url, label, index;
  };
  std::map<std::string, RawSource> raw_sources;
  for (const auto& st : statements) {
    if (!st.predicate.starts_with(cal::kVocab)) {
      problems.push_back("unknown predicate <" + st.predicate + ">");
      continue;
    }
    std::string term = st.predicate.substr(cal::kVocab.size());
    if (st.subject == *base) {
      static const std::set<std::string> kDocTerms = {"mode", "target", "freebusy", "inboxRoute", "pushUrl",
                                                       "windowStart", "windowEnd", "interval"};
      if (!kDocTerms.count(term)) {
        problems.push_back("unknown setting '" + term + "'");
      } else if (auto [it, ok] = doc_terms.emplace(term, st.object); !ok && it->second != st.object) {
        problems.push_back("conflicting values for '" + term + "'");
      }
      continue;
    }
    if (!st.subject.starts_with(*base + std::string(kSourceFragment))) {
      problems.push_back("unexpected subject <" + st.subject + ">");
      continue;
    }
    auto& src = raw_sources[st.subject];
    std::optional<std::string>* slot = term == "source"        ? &src.url
                                       : term == "sourceLabel" ? &src.label
                                       : term == "sourceIndex" ? &src.index
                                                               : nullptr;
    if (!slot) {
      problems.push_back("unknown source property '" + term + "'");
    } else if (*slot && **slot != st.object) {
      problems.push_back("conflicting '" + term + "' for <" + st.subject + ">");
    } else {
      *slot = st.object;
    }
  }

  SyncConfig cfg;
  auto mode = parse_mode(doc_terms["mode"]);
  if (!mode) problems.push_back("unknown mode '" + doc_terms["mode"] + "'");
  else cfg.mode = *mode;

  std::map<std::int64_t, Source> ordered;
  for (const auto& [subject, raw] : raw_sources) {
    if (!raw.url) problems.push_back("source <" + subject + "> has no url");
    else if (!is_http_url(*raw.url)) problems.push_back("source url '" + *raw.url + "' is not an http URL");
    if (!raw.label || raw.label->empty()) problems.push_back("source <" + subject + "> has no label");
    auto index = raw.index ? parse_int(*raw.index) : std::nullopt;
    if (!index || *index < 0) {
      problems.push_back("source <" + subject + "> needs a non-negative sourceIndex");
      continue;
    }
    if (!ordered.emplace(*index, Source{raw.url.value_or(""), raw.label.value_or("")}).second)
      problems.push_back("duplicate sourceIndex " + std::to_string(*index));
  }
  for (auto& [_, s] : ordered) cfg.sources.push_back(std::move(s));
  std::set<std::string> labels;
  for (const auto& s : cfg.sources)
    if (!s.label.empty() && !labels.insert(s.label).second) problems.push_back("duplicate source label '" + s.label + "'");

  auto check_path = [&](const char* what, const std::string& p) -> std::optional<std::string> {
    auto norm = pod::normalize_path(p);
    if (!norm || norm->ends_with('/')) {
      problems.push_back(std::string(what) + " path '" + p + "' is not a resource path");
      return std::nullopt;
    }
    if (norm->starts_with("/inbox/") || *norm == "/settings/orchestrator" || *norm == "/profile" ||
        *norm == kInboxCalendarPath || *norm == kInboxIcsPath) {
      problems.push_back(std::string(what) + " path '" + p + "' is reserved");
      return std::nullopt;
    }
    return norm;
  };
  if (doc_terms.count("target")) {
    if (auto p = check_path("target", doc_terms["target"])) cfg.target_path = *p;
  }
  if (doc_terms.count("freebusy")) {
    cfg.freebusy_path = check_path("freebusy", doc_terms["freebusy"]);
    if (cfg.freebusy_path && *cfg.freebusy_path == cfg.target_path)
      problems.push_back("freebusy path equals target path");
  }
  if (doc_terms.count("inboxRoute")) {
    cfg.inbox_route = parse_route(doc_terms["inboxRoute"]);
    if (!cfg.inbox_route) problems.push_back("unknown inboxRoute '" + doc_terms["inboxRoute"] + "'");
  }
  if (doc_terms.count("pushUrl")) {
    cfg.push_url = doc_terms["pushUrl"];
    if (!is_http_url(*cfg.push_url)) problems.push_back("pushUrl '" + *cfg.push_url + "' is not an http URL");
  }
  if (doc_terms.count("interval")) {
    auto v = parse_int(doc_terms["interval"]);
    if (!v || *v <= 0) problems.push_back("interval must be a positive integer");
    else cfg.interval_seconds = *v;
  }
  if (doc_terms.count("windowStart") || doc_terms.count("windowEnd")) {
    auto s = cal::try_parse_iso(doc_terms["windowStart"]);
    auto e = cal::try_parse_iso(doc_terms["windowEnd"]);
    if (!s || !e) problems.push_back("windowStart and windowEnd must both be UTC instants");
    else if (!(*s < *e)) problems.push_back("windowStart must precede windowEnd");
    else cfg.window_filter = cal::Interval{*s, *e};
  }

  if (mode == SyncMode::HybridExternalFirst && cfg.sources.empty() && raw_sources.empty())
    problems.push_back("HybridExternalFirst needs at least one source");
  if (mode == SyncMode::SolidFirstHybrid) {
    if (!doc_terms.count("inboxRoute")) problems.push_back("SolidFirstHybrid needs an inboxRoute");
    if (cfg.inbox_route == InboxRoute::SeparateRemoteCalendar && !doc_terms.count("pushUrl"))
      problems.push_back("SeparateRemoteCalendar needs a pushUrl");
  }

  if (!problems.empty()) throw ConfigInvalid(problems);
  return cfg;
}

std::string format_config(const SyncConfig& cfg, std::string_view base_iri) {
  std::string base(base_iri);
  std::vector<cal::Statement> st;
  auto add = [&](const char* term, std::string value) { st.push_back({base, cal::vocab(term), std::move(value)}); };
  add("mode", to_string(cfg.mode));
  add("target", cfg.target_path);
  if (cfg.freebusy_path) add("freebusy", *cfg.freebusy_path);
  if (cfg.inbox_route) add("inboxRoute", to_string(*cfg.inbox_route));
  if (cfg.push_url) add("pushUrl", *cfg.push_url);
  if (cfg.window_filter) {
    add("windowStart", cal::format_iso(cfg.window_filter->start()));
    add("windowEnd", cal::format_iso(cfg.window_filter->end()));
  }
  add("interval", std::to_string(cfg.interval_seconds));
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    std::string subject = base + std::string(kSourceFragment) + std::to_string(i);
    st.push_back({subject, cal::vocab("source"), cfg.sources[i].url});
    st.push_back({subject, cal::vocab("sourceLabel"), cfg.sources[i].label});
    st.push_back({subject, cal::vocab("sourceIndex"), std::to_string(i)});
  }
  return cal::format_statements(st);
}

}  // namespace caldesk::orch
