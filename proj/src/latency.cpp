#include "ctvsim/latency.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"

namespace ctvsim {

std::int64_t LatencyTable::at(EventCategory c) const {
  auto v = get(c);
  if (!v) throw ConfigError(fmt::format("latency.{}: category is not priced", to_string(c)));
  return *v;
}

void LatencyTable::validate(bool has_l3) const {
  for (auto c : kAllEventCategories) {
    auto v = at(c);
    if (v < 0) throw ConfigError(fmt::format("latency.{}: must be non-negative", to_string(c)));
  }
  if (base_op_overhead < 0) throw ConfigError("latency.base_op_overhead: must be non-negative");
  if (jitter < 0) throw ConfigError("jitter: must be non-negative");
  const auto l1 = at(EventCategory::L1Hit);
  const auto l2 = at(EventCategory::L2Hit);
  const auto l3 = at(EventCategory::L3Hit);
  const auto dram = at(EventCategory::DramFetch);
  if (!(l1 < l2)) throw ConfigError("latency.L2_hit: must exceed L1_hit");
  if (has_l3) {
    if (!(l2 < l3)) throw ConfigError("latency.L3_hit: must exceed L2_hit");
    if (!(l3 < dram)) throw ConfigError("latency.dram_fetch: must exceed L3_hit");
  } else if (!(l2 < dram)) {
    throw ConfigError("latency.dram_fetch: must exceed L2_hit");
  }
  if (at(EventCategory::Writeback) <= 0) throw ConfigError("latency.writeback: must be positive");
}

std::int64_t cost(const EventTrace& trace, const LatencyTable& table, std::mt19937_64* rng) {
  std::int64_t total = table.base_op_overhead;
  for (const auto& e : trace.events) total += table.at(e.category);
  if (rng && table.jitter > 0) {
    const auto span = static_cast<std::uint64_t>(2 * table.jitter + 1);
    total += static_cast<std::int64_t>((*rng)() % span) - table.jitter;
  }
  return std::max<std::int64_t>(total, 0);
}

}  // namespace ctvsim
