#include "sync.hpp"

#include <set>

#include "caldesk/calmodel/freebusy.hpp"
#include "caldesk/calmodel/ics.hpp"
#include "caldesk/calmodel/linked.hpp"
#include "caldesk/calmodel/merge.hpp"
#include "caldesk/common/util.hpp"
#include "caldesk/extcal/client.hpp"
#include "caldesk/scheduling/availability.hpp"

namespace caldesk::orch {

namespace {

constexpr std::string_view kInboxOrigin = "inbox";
constexpr int kWriteAttempts = 5;

// Free/busy window used when the config sets no window filter.
const cal::Interval& default_freebusy_window() {
  static const cal::Interval w{cal::parse_iso("1970-01-01T00:00:00Z"), cal::parse_iso("2100-01-01T00:00:00Z")};
  return w;
}

cal::Calendar relabel(const cal::Calendar& in, const AgentId& owner, std::uint32_t rank, std::string_view origin) {
  cal::Calendar out(owner);
  for (const auto& [_, e] : in.events()) {
    auto copy = e;
    copy.version.source_rank = rank;
    copy.origin = std::string(origin);
    out.upsert(std::move(copy));
  }
  return out;
}

bool is_permission(const pod::StoreError& e) {
  return e.code() == pod::ErrorCode::Unauthorized || e.code() == pod::ErrorCode::Forbidden;
}

}  // namespace

SyncRun::SyncRun(const Registration& reg, SourceCaches& caches, const OrchestratorOptions& opts)
    : reg_(reg),
      caches_(caches),
      opts_(opts),
      pod_(reg.pod_base_url, pod::Credential::bearer(reg.token), opts.user_agent) {}

SyncReport SyncRun::run() {
  report_ = SyncReport{};
  report_.user = reg_.user;
  report_.started = opts_.clock();
  try {
    config_ = load_config();
    report_.mode = config_->mode;
    run_mode(*config_);
    report_.status = degraded_ ? LastStatus::SourceUnreachable : LastStatus::Ok;
  } catch (const ConfigMissing& e) {
    report_.status = LastStatus::ConfigMissing;
    report_.detail = e.what();
  } catch (const ConfigInvalid& e) {
    report_.status = LastStatus::ConfigInvalid;
    report_.detail = e.what();
  } catch (const pod::StoreError& e) {
    report_.status = is_permission(e) ? LastStatus::PermissionDenied : LastStatus::PodUnreachable;
    report_.detail = e.what();
  } catch (const net::Unreachable& e) {
    report_.status = LastStatus::PodUnreachable;
    report_.detail = e.what();
  } catch (const std::exception& e) {
    // Unreadable pod content (a corrupt target document, for instance).
    report_.status = LastStatus::PodUnreachable;
    report_.detail = e.what();
  }
  report_.finished = opts_.clock();
  return report_;
}

SyncConfig SyncRun::load_config() {
  std::optional<pod::Resource> res;
  try {
    res = pod_.get(pod::kConfigPath);
  } catch (const pod::StoreError& e) {
    if (e.code() == pod::ErrorCode::NotFound) throw ConfigMissing(e.what());
    // Without read access the config is as good as missing until the first good sync;
    // after that, losing access means the user revoked it.
    bool never_synced = reg_.last_status == LastStatus::Never || reg_.last_status == LastStatus::ConfigMissing;
    if (e.code() == pod::ErrorCode::Forbidden && never_synced) throw ConfigMissing(e.what());
    throw;
  }
  return validate_config(res->body);
}

void SyncRun::run_mode(const SyncConfig& cfg) {
  switch (cfg.mode) {
    case SyncMode::HybridExternalFirst:
      pull(cfg);
      return;
    case SyncMode::SolidOnly: {
      auto consumed = consume();
      auto cal = stored_target(cfg).value_or(cal::Calendar(reg_.user));
      for (const auto& c : consumed) {
        cal::Calendar one(reg_.user);
        one.upsert(c.event);
        cal = cal::merge(cal, one).calendar;
      }
      publish(cfg, std::move(cal));
      mark_processed(consumed);
      return;
    }
    case SyncMode::SolidFirstHybrid: {
      auto consumed = consume();
      if (route_out(cfg, consumed)) mark_processed(consumed);
      pull(cfg);
      return;
    }
  }
}

std::vector<SyncRun::Consumed> SyncRun::consume() {
  std::vector<Consumed> out;
  for (const auto& id : pod_.list_inbox()) {
    auto n = pod_.get_notification(id);
    if (n.processed) continue;
    try {
      if (cal::notification_type(n.body) != cal::kMeetingRequest) continue;
      auto e = cal::parse_meeting_request(n.body);
      e.origin = std::string(kInboxOrigin);
      e.version.source_rank = 0;
      out.push_back({id, std::move(e)});
    } catch (const std::exception&) {
      // Not ours to interpret; it stays unprocessed for the owner to look at.
    }
  }
  report_.notifications_consumed = out.size();
  return out;
}

void SyncRun::mark_processed(const std::vector<Consumed>& consumed) {
  for (const auto& c : consumed) pod_.mark_processed(c.id);
}

bool SyncRun::route_out(const SyncConfig& cfg, const std::vector<Consumed>& consumed) {
  if (consumed.empty()) return true;
  auto route = cfg.inbox_route.value_or(InboxRoute::SeparateResource);
  if (route == InboxRoute::SeparateRemoteCalendar) {
    for (const auto& c : consumed) {
      try {
        ext::create_event(*cfg.push_url, c.event, opts_.user_agent);
      } catch (const ext::StaleSequence&) {
        // Already there from an earlier attempt.
      } catch (const std::exception& e) {
        degraded_ = true;
        report_.per_source.push_back({std::string(kInboxOrigin), SourceOutcome::Unreachable, e.what()});
        return false;
      }
    }
    return true;
  }

  auto existing = read_route(cfg).value_or(cal::Calendar(reg_.user));
  for (const auto& c : consumed) {
    cal::Calendar one(reg_.user);
    one.upsert(c.event);
    existing = cal::merge(existing, one).calendar;
  }
  auto path = *route_resource(cfg);
  if (route == InboxRoute::IcsInPod)
    write_if_changed(path, cal::serialize_ics(existing), "text/calendar");
  else
    write_if_changed(path, cal::to_linked(existing, pod_.iri(path)).text(), "text/plain");
  return true;
}

std::optional<cal::Calendar> SyncRun::read_route(const SyncConfig& cfg) {
  if (cfg.mode != SyncMode::SolidFirstHybrid) return std::nullopt;
  if (cfg.inbox_route == InboxRoute::SeparateRemoteCalendar) {
    auto cal = fetch(ext::ics_url(*cfg.push_url), std::string(kInboxOrigin));
    if (!cal) return std::nullopt;
    return relabel(*cal, reg_.user, 0, kInboxOrigin);
  }
  auto path = route_resource(cfg);
  auto res = pod_.get_if_exists(*path);
  if (!res) return std::nullopt;
  cal::Calendar cal = cfg.inbox_route == InboxRoute::IcsInPod
                          ? cal::parse_ics(res->body, reg_.user, std::string(kInboxOrigin))
                          : cal::from_linked(cal::LinkedCalendarDoc::parse(res->body));
  return relabel(cal, reg_.user, 0, kInboxOrigin);
}

std::optional<cal::Calendar> SyncRun::fetch(const std::string& url, const std::string& label) {
  auto cached = caches_.find(url);
  std::optional<std::string> etag;
  if (cached != caches_.end()) etag = cached->second.etag;
  try {
    auto got = ext::fetch_ics(url, etag, reg_.user, label, opts_.user_agent);
    if (!got) {
      report_.per_source.push_back({label, SourceOutcome::Cached, {}});
      return cached->second.calendar;
    }
    caches_[url] = SourceCache{got->etag, got->calendar};
    report_.per_source.push_back({label, SourceOutcome::Fetched, {}});
    return std::move(got->calendar);
  } catch (const std::exception& e) {
    degraded_ = true;
    report_.per_source.push_back({label, SourceOutcome::Unreachable, e.what()});
    if (cached != caches_.end()) return cached->second.calendar;
    incomplete_ = true;
    return std::nullopt;
  }
}

void SyncRun::pull(const SyncConfig& cfg) {
  cal::Calendar merged(reg_.user);
  for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
    const auto& src = cfg.sources[i];
    if (auto cal = fetch(src.url, src.label))
      merged = cal::merge(merged, relabel(*cal, reg_.user, static_cast<std::uint32_t>(i), src.label)).calendar;
  }
  if (auto route = read_route(cfg)) {
    auto rank = static_cast<std::uint32_t>(cfg.sources.size());
    merged = cal::merge(merged, relabel(*route, reg_.user, rank, kInboxOrigin)).calendar;
  }
  // Writing a partial union would drop events of the missing source; keep what the pod has.
  if (incomplete_) return;
  publish(cfg, std::move(merged));
}

std::optional<cal::Calendar> SyncRun::stored_target(const SyncConfig& cfg) {
  auto res = pod_.get_if_exists(cfg.target_path);
  if (!res) return std::nullopt;
  auto cal = cal::from_linked(cal::LinkedCalendarDoc::parse(res->body));
  cal.set_owner(reg_.user);
  return cal;
}

void SyncRun::publish(const SyncConfig& cfg, cal::Calendar cal) {
  if (cfg.window_filter) {
    std::vector<std::string> outside;
    for (const auto& [uid, e] : cal.events())
      if (!e.interval.overlaps(*cfg.window_filter)) outside.push_back(uid);
    for (const auto& uid : outside) cal.erase(uid);
  }

  // Flags are recomputed from scratch so a clash that went away is cleared again.
  auto clashes = sched::detect_clashes(cal, true);
  std::set<std::string> clashing;
  for (const auto& [a, b] : clashes) clashing.insert(a), clashing.insert(b);
  std::vector<cal::Event> restatus;
  for (const auto& [uid, e] : cal.events()) {
    bool flag = clashing.count(uid) > 0;
    if (flag && e.status != cal::EventStatus::Conflict) {
      restatus.push_back(e);
      restatus.back().status = cal::EventStatus::Conflict;
    } else if (!flag && e.status == cal::EventStatus::Conflict) {
      restatus.push_back(e);
      restatus.back().status = cal::EventStatus::Confirmed;
    }
  }
  for (auto& e : restatus) cal.upsert(std::move(e));

  auto before = stored_target(cfg);
  auto flagged_before = [&](const std::string& uid) {
    const cal::Event* e = before ? before->find(uid) : nullptr;
    return e && e->status == cal::EventStatus::Conflict;
  };
  for (const auto& pair : clashes)
    if (!(flagged_before(pair.first) && flagged_before(pair.second))) report_.conflicts_flagged.push_back(pair);

  report_.wrote_target =
      write_if_changed(cfg.target_path, cal::to_linked(cal, pod_.iri(cfg.target_path)).text(), "text/plain");
  if (cfg.freebusy_path) {
    auto fb = cal::project_freebusy(cal, cfg.window_filter.value_or(default_freebusy_window()));
    report_.wrote_freebusy =
        write_if_changed(*cfg.freebusy_path, cal::format_freebusy(fb, pod_.iri(*cfg.freebusy_path)), "text/plain");
  }
  if (!report_.conflicts_flagged.empty())
    pod_.post_inbox(cal::format_conflict(report_.conflicts_flagged, pod_.iri(cfg.target_path)), "text/plain");
}

bool SyncRun::write_if_changed(const std::string& path, const std::string& body, const std::string& content_type) {
  const auto wanted = util::sha256_hex(body);
  for (int attempt = 0;; ++attempt) {
    auto existing = pod_.get_if_exists(path);
    if (existing && existing->etag == wanted) return false;
    try {
      pod_.put(path, body, content_type, existing ? std::optional(existing->etag) : std::nullopt);
      return true;
    } catch (const pod::StoreError& e) {
      if (e.code() != pod::ErrorCode::PreconditionFailed || attempt + 1 >= kWriteAttempts) throw;
    }
  }
}

}  // namespace caldesk::orch
