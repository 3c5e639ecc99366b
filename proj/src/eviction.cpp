#include "ctvsim/eviction.hpp"

#include <fmt/format.h>

#include "ctvsim/errors.hpp"
#include "ctvsim/latency.hpp"

namespace ctvsim {

void EvictionParams::validate() const {
  if (addresses < 1) throw ConfigError("eviction.addresses: must be >= 1");
  if (accesses_per_address < 1) throw ConfigError("eviction.accesses_per_address: must be >= 1");
  if (window < 1) throw ConfigError("eviction.window: must be >= 1");
  if (rounds < 1) throw ConfigError("eviction.rounds: must be >= 1");
  if (window > addresses) throw ConfigError("eviction.window: must not exceed addresses");
}

std::string EvictionParams::label() const {
  return fmt::format("a{}-r{}-w{}-n{}", addresses, accesses_per_address, window, rounds);
}

EvictionParams default_eviction_params(PolicyKind policy, std::uint32_t ways,
                                       std::uint32_t upstream_ways) {
  const std::uint32_t reach = ways + upstream_ways;
  if (policy == PolicyKind::Random) return {2 * reach, 2, 2, 4};
  // Fills of invalid ways ignore the tree, so up to ways-1 misses may pass
  // before the tree walk starts; ways more misses then visit every leaf.
  if (policy == PolicyKind::TreePLRU) return {reach + ways, 1, 1, 1};
  return {reach, 1, 1, 1};
}

EvictionParams default_eviction_params(const SimMachine& machine, int level) {
  std::uint32_t upstream = 0;
  for (int l = 1; l < level; ++l) upstream += machine.geometry(l).ways;
  const auto& spec = machine.spec().level_spec(level);
  return default_eviction_params(spec.policy, spec.geometry.ways, upstream);
}

std::vector<Addr> congruent_addresses(const CacheGeometry& g, Addr base, std::uint32_t count) {
  std::vector<Addr> out;
  out.reserve(count);
  const auto stride = g.set_stride();
  for (std::uint32_t k = 1; k <= count; ++k) out.push_back(base + k * stride);
  return out;
}

EvictionResult evict(SimMachine& machine, int core, Addr target, int level,
                     const EvictionParams& params) {
  params.validate();
  const auto& g = machine.geometry(level);
  const Addr base = kScratchRegion + (machine.next_scratch_slot() << 32) + target % g.set_stride();
  const auto addrs = congruent_addresses(g, base, params.addresses);
  EvictionResult r;
  run_eviction_pattern(std::span<const Addr>(addrs), params, [&](Addr a) {
    r.trace.append(machine.apply({MemOpKind::Read, core, a}));
  });
  r.evicted = !machine.present(core, target, level);
  return r;
}

EvictionResult evict_until_gone(SimMachine& machine, int core, Addr target, int level,
                                int attempts) {
  const auto params = default_eviction_params(machine, level);
  EvictionResult total;
  total.evicted = !machine.present(core, target, level);
  for (int i = 0; i < attempts && !total.evicted; ++i) {
    auto r = evict(machine, core, target, level, params);
    total.trace.append(r.trace);
    total.evicted = r.evicted;
  }
  return total;
}

EvictionResult evict_all_levels(SimMachine& machine, int core, Addr target) {
  EvictionResult total{{}, true};
  for (int level = 1; level <= machine.spec().deepest_level(); ++level) {
    auto r = evict_until_gone(machine, core, target, level);
    total.trace.append(r.trace);
    total.evicted = total.evicted && r.evicted;
  }
  // A lower-level sweep cannot bring the target back, but verify anyway.
  for (int level = 1; level <= machine.spec().deepest_level(); ++level)
    if (machine.present(core, target, level)) total.evicted = false;
  return total;
}

std::vector<EvictionParams> default_sweep_grid(std::uint32_t ways, std::uint32_t upstream_ways) {
  std::vector<EvictionParams> grid;
  const std::uint32_t reach = ways + upstream_ways;
  for (std::uint32_t addresses : {reach, reach + reach / 2, 2 * reach})
    for (std::uint32_t accesses : {1u, 2u})
      for (std::uint32_t window : {1u, 2u})
        for (std::uint32_t rounds : {1u, 2u, 4u}) grid.push_back({addresses, accesses, window, rounds});
  return grid;
}

std::vector<SweepRow> sweep_eviction(const TargetSpec& spec, int level,
                                     std::span<const EvictionParams> grid, std::uint32_t seeds) {
  if (!spec.has_level(level)) throw InputError(fmt::format("{}: no L{} cache", spec.name, level));
  if (seeds == 0) throw InputError("sweep needs at least one seed");
  const Addr target = Addr{1} << 24;
  std::vector<SweepRow> rows;
  for (const auto& params : grid) {
    SweepRow row{level, spec.level_spec(level).policy, params, 0.0, 0.0};
    std::uint64_t hits = 0;
    double cycles = 0.0;
    for (std::uint32_t s = 0; s < seeds; ++s) {
      SimMachine m(spec, s);
      m.apply({MemOpKind::Read, 0, target});
      for (int above = 1; above < level; ++above) evict_until_gone(m, 0, target, above, 64);
      if (!m.present(0, target, level)) continue;  // could not stage the target; counts as a miss
      auto r = evict(m, 0, target, level, params);
      hits += r.evicted ? 1 : 0;
      for (const auto& e : r.trace.events) cycles += static_cast<double>(spec.latency.at(e.category));
    }
    row.eviction_rate = static_cast<double>(hits) / seeds;
    row.mean_cycles = cycles / seeds;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ctvsim
