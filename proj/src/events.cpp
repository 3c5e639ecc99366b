#include "ctvsim/events.hpp"

#include <algorithm>

namespace ctvsim {

std::string_view to_string(EventCategory c) {
  switch (c) {
    case EventCategory::L1Hit: return "L1_hit";
    case EventCategory::L2Hit: return "L2_hit";
    case EventCategory::L3Hit: return "L3_hit";
    case EventCategory::DramFetch: return "dram_fetch";
    case EventCategory::RemoteSnoop: return "remote_snoop";
    case EventCategory::CacheToCacheTransfer: return "cache_to_cache_transfer";
    case EventCategory::DirectoryLookup: return "directory_lookup";
    case EventCategory::InvalidationBroadcast: return "invalidation_broadcast";
    case EventCategory::Writeback: return "writeback";
    case EventCategory::FlushLine: return "flush_line";
  }
  return "?";
}

std::optional<EventCategory> parse_event_category(std::string_view s) {
  for (auto c : kAllEventCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::size_t EventTrace::count(EventCategory c) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [c](const Event& e) { return e.category == c; }));
}

}  // namespace ctvsim
