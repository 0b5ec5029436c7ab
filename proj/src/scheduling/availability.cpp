#include "caldesk/scheduling/availability.hpp"

#include <algorithm>

namespace caldesk::sched {

std::vector<Slot> joint_availability(const std::vector<cal::FreeBusy>& freebusies,
                                     const cal::Interval& window, std::int64_t duration,
                                     std::int64_t granularity) {
  if (granularity <= 0 || duration < granularity)
    throw std::invalid_argument("need duration >= granularity > 0");
  if (duration % 60 != 0 || granularity % 60 != 0)
    throw std::invalid_argument("duration and granularity must be whole minutes");

  std::vector<cal::Interval> all;
  for (const auto& fb : freebusies) {
    if (!fb.window.contains(window))
      throw WindowMismatch("free/busy window " + cal::format_interval(fb.window) + " of " +
                           fb.owner.iri() + " does not cover " + cal::format_interval(window));
    all.insert(all.end(), fb.busy.begin(), fb.busy.end());
  }
  auto busy = cal::coalesce(std::move(all));

  std::vector<Slot> slots;
  auto next_busy = busy.begin();
  for (cal::Instant start = window.start(); start + duration <= window.end(); start = start + granularity) {
    cal::Interval candidate{start, start + duration};
    // Busy intervals ending at or before this start can never matter again.
    while (next_busy != busy.end() && next_busy->end() <= start) ++next_busy;
    if (next_busy != busy.end() && next_busy->overlaps(candidate)) continue;
    slots.push_back({candidate});
  }
  return slots;
}

std::vector<std::pair<std::string, std::string>> detect_clashes(const cal::Calendar& cal,
                                                                bool include_conflict) {
  std::vector<const cal::Event*> events;
  for (const auto& [_, e] : cal.events()) {
    if (e.status == cal::EventStatus::Confirmed ||
        (include_conflict && e.status == cal::EventStatus::Conflict))
      events.push_back(&e);
  }
  std::sort(events.begin(), events.end(), [](const cal::Event* a, const cal::Event* b) {
    return a->interval.start() < b->interval.start();
  });

  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<const cal::Event*> active;
  for (const auto* e : events) {
    std::erase_if(active, [&](const cal::Event* a) { return a->interval.end() <= e->interval.start(); });
    for (const auto* a : active) pairs.push_back(std::minmax(a->uid, e->uid));
    active.push_back(e);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace caldesk::sched
