#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctvsim/cache_model.hpp"
#include "ctvsim/events.hpp"
#include "ctvsim/machine.hpp"

namespace ctvsim {

/// Parameters of the sliding-window eviction strategy: `addresses` congruent
/// addresses are walked in overlapping groups of `window`, each group accessed
/// `accesses_per_address` times, and the whole walk repeated `rounds` times.
struct EvictionParams {
  std::uint32_t addresses = 1;
  std::uint32_t accesses_per_address = 1;
  std::uint32_t window = 1;
  std::uint32_t rounds = 1;

  void validate() const;
  std::string label() const;
  bool operator==(const EvictionParams&) const = default;
};

/// Shipped defaults. `upstream_ways` is the associativity of the private level
/// above a victim-cache level (0 for L1): lines only reach such a level once
/// they leave the level above, so the sweep has to be longer by that much.
EvictionParams default_eviction_params(PolicyKind policy, std::uint32_t ways,
                                       std::uint32_t upstream_ways = 0);

/// `count` distinct addresses in the same set as `base`, all with tags
/// different from base's: base + k * S * b for k = 1..count.
std::vector<Addr> congruent_addresses(const CacheGeometry& g, Addr base, std::uint32_t count);

/// Emits the access order of the eviction strategy over `addrs`.
template <typename AccessFn>
void run_eviction_pattern(std::span<const Addr> addrs, const EvictionParams& p, AccessFn&& access) {
  const std::size_t n = addrs.size();
  const std::size_t window = std::min<std::size_t>(p.window, n);
  for (std::uint32_t r = 0; r < p.rounds; ++r)
    for (std::size_t i = 0; i + window <= n; ++i)
      for (std::uint32_t a = 0; a < p.accesses_per_address; ++a)
        for (std::size_t j = 0; j < window; ++j) access(addrs[i + j]);
}

struct EvictionResult {
  EventTrace trace;
  bool evicted = false;
};

/// Base of the address region reserved for eviction sweeps.
inline constexpr Addr kScratchRegion = Addr{1} << 40;

/// Walks fresh congruent addresses from `core` until the configured pattern
/// is done, then checks whether `target` is still cached at `level` as seen
/// from `core`.
EvictionResult evict(SimMachine& machine, int core, Addr target, int level,
                     const EvictionParams& params);

/// Same, with the shipped defaults for the level, retrying up to `attempts`
/// times until the target is gone. Used wherever eviction stands in for a
/// flush.
EvictionResult evict_until_gone(SimMachine& machine, int core, Addr target, int level,
                                int attempts = 16);

/// Evicts `target` from `core`'s L1 and every shared level below it.
EvictionResult evict_all_levels(SimMachine& machine, int core, Addr target);

/// Defaults for one level of a machine.
EvictionParams default_eviction_params(const SimMachine& machine, int level);

/// One row of the parameter sweep report.
struct SweepRow {
  int level = 1;
  PolicyKind policy = PolicyKind::LRU;
  EvictionParams params;
  double eviction_rate = 0.0;
  double mean_cycles = 0.0;
};

/// Measures eviction rate and mean sweep cost of each parameter set at one
/// level of `spec`, over `seeds` independently seeded machines.
std::vector<SweepRow> sweep_eviction(const TargetSpec& spec, int level,
                                     std::span<const EvictionParams> grid, std::uint32_t seeds);

/// Default grid explored by the sweep harness for a level of `ways` ways.
std::vector<EvictionParams> default_sweep_grid(std::uint32_t ways, std::uint32_t upstream_ways);

}  // namespace ctvsim
