#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ctvsim/cache_model.hpp"

namespace ctvsim {

enum class EventCategory : std::uint8_t {
  L1Hit,
  L2Hit,
  L3Hit,
  DramFetch,
  RemoteSnoop,
  CacheToCacheTransfer,
  DirectoryLookup,
  InvalidationBroadcast,
  Writeback,
  FlushLine,
};

inline constexpr std::size_t kEventCategoryCount = 10;

inline constexpr std::array<EventCategory, kEventCategoryCount> kAllEventCategories{
    EventCategory::L1Hit,          EventCategory::L2Hit,
    EventCategory::L3Hit,          EventCategory::DramFetch,
    EventCategory::RemoteSnoop,    EventCategory::CacheToCacheTransfer,
    EventCategory::DirectoryLookup, EventCategory::InvalidationBroadcast,
    EventCategory::Writeback,      EventCategory::FlushLine};

/// Names used in latency tables and traces ("L1_hit", "dram_fetch", ...).
std::string_view to_string(EventCategory c);
std::optional<EventCategory> parse_event_category(std::string_view s);

/// Level 0 stands for main memory / no particular cache.
struct Event {
  EventCategory category;
  int level = 0;
  bool remote = false;
  Addr addr = 0;

  bool operator==(const Event&) const = default;
};

struct EventTrace {
  std::vector<Event> events;
  /// Data word returned by a read (or written by a write).
  std::uint64_t value = 0;

  void push(EventCategory c, int level, bool remote, Addr addr) {
    events.push_back({c, level, remote, addr});
  }
  void append(const EventTrace& other) {
    events.insert(events.end(), other.events.begin(), other.events.end());
  }
  std::size_t count(EventCategory c) const;
  bool contains(EventCategory c) const { return count(c) > 0; }
};

}  // namespace ctvsim
