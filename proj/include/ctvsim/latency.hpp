#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>

#include "ctvsim/events.hpp"

namespace ctvsim {

/// Cycle cost per event category, a fixed per-operation overhead and an
/// optional uniform integer noise of half-width `jitter`.
struct LatencyTable {
  std::array<std::optional<std::int64_t>, kEventCategoryCount> cycles{};
  std::int64_t base_op_overhead = 0;
  std::int64_t jitter = 0;

  void set(EventCategory c, std::int64_t v) { cycles[static_cast<std::size_t>(c)] = v; }
  std::optional<std::int64_t> get(EventCategory c) const {
    return cycles[static_cast<std::size_t>(c)];
  }
  /// Price of `c`; throws ConfigError when the category is unpriced.
  std::int64_t at(EventCategory c) const;

  /// Checks every category is priced, read-path monotonicity
  /// (L1 < L2 < L3 < DRAM, L3 skipped when absent) and writeback > 0.
  void validate(bool has_l3) const;

  bool operator==(const LatencyTable&) const = default;
};

/// base_op_overhead + sum of event prices (+ one jitter draw when `rng` is
/// given and jitter > 0). Never negative.
std::int64_t cost(const EventTrace& trace, const LatencyTable& table,
                  std::mt19937_64* rng = nullptr);

}  // namespace ctvsim
