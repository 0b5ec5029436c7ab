#pragma once

#include <string>
#include <vector>

#include "caldesk/calmodel/event.hpp"

namespace caldesk::cal {

/// Uids of `base` that the merge added or replaced, each sorted.
struct ChangeSet {
  std::vector<std::string> added;
  std::vector<std::string> updated;

  bool empty() const { return added.empty() && updated.empty(); }
  bool operator==(const ChangeSet&) const = default;
};

struct MergeResult {
  Calendar calendar;
  ChangeSet changes;
};

/// Per-uid maximum under compare_events, so merging forms a join semilattice on the
/// resulting calendar. Throws OwnerMismatch.
MergeResult merge(const Calendar& base, const Calendar& incoming);

}  // namespace caldesk::cal
