#include "caldesk/calmodel/merge.hpp"

namespace caldesk::cal {

MergeResult merge(const Calendar& base, const Calendar& incoming) {
  if (base.owner() != incoming.owner())
    throw OwnerMismatch("cannot merge calendars of '" + base.owner().iri() + "' and '" +
                        incoming.owner().iri() + "'");
  MergeResult result{base, {}};
  for (const auto& [uid, e] : incoming.events()) {
    const Event* current = base.find(uid);
    if (!current) {
      result.calendar.upsert(e);
      result.changes.added.push_back(uid);
    } else if (compare_events(e, *current) > 0) {
      result.calendar.upsert(e);
      result.changes.updated.push_back(uid);
    }
  }
  return result;
}

}  // namespace caldesk::cal
