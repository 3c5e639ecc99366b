#include "ctvsim/timing.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"
#include "ctvsim/eviction.hpp"
#include "ctvsim/latency.hpp"
#include "ctvsim/parallel.hpp"
#include "ctvsim/rng.hpp"

namespace ctvsim {

std::string TimingPlacement::label() const {
  switch (kind) {
    case PlacementKind::Single:
      return fmt::format("{}L{}_{}", remote ? "REMOTE_" : "", level, dirty ? "DIRTY" : "CLEAN");
    case PlacementKind::Dual:
      return fmt::format("L{}_REMOTE_L{}_CLEAN", local_level, remote_level);
    case PlacementKind::Dram: return "DRAM";
  }
  return "?";
}

bool TimingPlacement::uses_level(int l) const {
  switch (kind) {
    case PlacementKind::Single: return level == l;
    case PlacementKind::Dual: return local_level == l || remote_level == l;
    case PlacementKind::Dram: return false;
  }
  return false;
}

bool TimingPlacement::uses_remote() const {
  return kind == PlacementKind::Dual || (kind == PlacementKind::Single && remote);
}

std::string TimingType::name() const { return fmt::format("{}/{}", to_string(op), label()); }

std::vector<TimingType> enumerate_timing_types(bool has_l3, bool has_flush) {
  std::vector<int> levels{1, 2};
  if (has_l3) levels.push_back(3);
  std::vector<MemOpKind> ops{MemOpKind::Read, MemOpKind::Write};
  if (has_flush) ops.push_back(MemOpKind::Flush);

  std::vector<TimingType> out;
  for (auto op : ops) {
    for (int level : levels)
      for (bool remote : {false, true})
        for (bool dirty : {false, true}) out.push_back({op, TimingPlacement::single(level, remote, dirty)});
    for (int local : levels)
      for (int remote : levels) out.push_back({op, TimingPlacement::dual(local, remote)});
    out.push_back({op, TimingPlacement::dram()});
  }
  return out;
}

std::vector<TimingType> valid_timing_types(const TargetSpec& spec) {
  auto all = enumerate_timing_types(spec.has_l3(), spec.flush_user_mode);
  if (spec.cores < 2)
    std::erase_if(all, [](const TimingType& t) { return t.placement.uses_remote(); });
  return all;
}

namespace {

using Entry = std::tuple<int, bool, bool>;  // level, remote, dirty

std::vector<Entry> expected_entries(const TimingPlacement& p) {
  std::vector<Entry> out;
  switch (p.kind) {
    case PlacementKind::Single: out.emplace_back(p.level, p.remote, p.dirty); break;
    case PlacementKind::Dual:
      out.emplace_back(p.local_level, false, false);
      out.emplace_back(p.remote_level, true, false);
      break;
    case PlacementKind::Dram: break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Entry> actual_entries(const Placement& pl) {
  std::vector<Entry> out;
  for (std::size_t c = 0; c < pl.l1.size(); ++c)
    if (pl.l1[c].present) out.emplace_back(1, c != kLocalCore, pl.l1[c].dirty);
  for (const auto& s : pl.shared) {
    if (!s.present) continue;
    if (s.affinity == 0) out.emplace_back(s.level, false, s.dirty);
    for (std::size_t c = 0; c < 32; ++c)
      if (s.affinity & (1u << c)) out.emplace_back(s.level, c != kLocalCore, s.dirty);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Puts a copy of `addr` at `level`, as installed by `core`.
void place_copy(SimMachine& m, int core, Addr addr, int level, bool dirty) {
  if (dirty)
    m.apply({MemOpKind::Write, core, addr, 0xd1d1d1d1});
  else
    m.apply({MemOpKind::Read, core, addr});
  for (int l = 1; l < level; ++l) evict_until_gone(m, core, addr, l);
}

}  // namespace

bool placement_matches(const SimMachine& machine, Addr addr, const TimingPlacement& p) {
  return actual_entries(machine.snapshot_placement(addr)) == expected_entries(p);
}

void prepare_state(SimMachine& m, const TimingType& tt, Addr addr) {
  const auto& p = tt.placement;
  const auto& spec = m.spec();
  for (int l = 1; l <= 3; ++l)
    if (p.uses_level(l) && !spec.has_level(l))
      throw InvalidTimingType(fmt::format("{}: {} needs an L{} cache", spec.name, tt.name(), l));
  if (p.uses_remote() && spec.cores < 2)
    throw InvalidTimingType(fmt::format("{}: {} needs a second core", spec.name, tt.name()));
  if (tt.op == MemOpKind::Flush && !spec.flush_user_mode)
    throw InvalidTimingType(fmt::format("{}: {} needs a user-mode flush", spec.name, tt.name()));

  switch (p.kind) {
    case PlacementKind::Single:
      place_copy(m, p.remote ? kRemoteCore : kLocalCore, addr, p.level, p.dirty);
      break;
    case PlacementKind::Dual:
      // The deeper copy goes first so that installing the other one cannot
      // disturb it; on equal levels the remote copy goes first.
      if (p.local_level > p.remote_level) {
        place_copy(m, kLocalCore, addr, p.local_level, false);
        place_copy(m, kRemoteCore, addr, p.remote_level, false);
      } else {
        place_copy(m, kRemoteCore, addr, p.remote_level, false);
        place_copy(m, kLocalCore, addr, p.local_level, false);
      }
      break;
    case PlacementKind::Dram:
      m.apply({MemOpKind::Read, kLocalCore, addr});
      if (spec.flush_user_mode)
        m.apply({MemOpKind::Flush, kLocalCore, addr});
      else
        evict_all_levels(m, kLocalCore, addr);
      break;
  }
  if (!placement_matches(m, addr, p))
    throw InvalidTimingType(fmt::format("{}: could not prepare {}", spec.name, tt.name()));
}

Histogram measure(const MachineFactory& factory, const TimingType& tt, std::uint32_t trials) {
  if (trials < 1) throw InputError("measure needs at least one trial");
  Histogram h;
  for (std::uint32_t t = 0; t < trials; ++t) {
    SimMachine m = factory(t);
    prepare_state(m, tt, kTimingAddress);
    std::mt19937_64 rng(derive_seed(m.spec().seed, {t, static_cast<std::uint64_t>(tt.op),
                                                    hash_string(tt.label())}));
    const auto trace = m.apply({tt.op, kLocalCore, kTimingAddress, 0x5eed});
    h.add(cost(trace, m.spec().latency, &rng));
  }
  return h;
}

Histogram measure(const TargetSpec& spec, const TimingType& tt, std::uint32_t trials) {
  return measure([&spec](std::uint64_t trial) { return SimMachine(spec, trial); }, tt, trials);
}

std::vector<TimingResult> measure_all(const TargetSpec& spec, std::uint32_t trials, unsigned jobs) {
  const auto types = valid_timing_types(spec);
  std::vector<TimingResult> out(types.size());
  parallel_for(types.size(), jobs, [&](std::size_t i) {
    out[i] = {types[i], measure(spec, types[i], trials)};
  });
  return out;
}

void write_histogram_csv(std::ostream& out, const std::vector<TimingResult>& results) {
  out << "label,op,cycles,count\n";
  for (const auto& r : results)
    for (const auto& [cycles, count] : r.histogram.bins())
      out << r.type.label() << ',' << to_string(r.type.op) << ',' << cycles << ',' << count << '\n';
}

nlohmann::json histogram_summary(const std::vector<TimingResult>& results) {
  auto rows = nlohmann::json::array();
  for (const auto& r : results) {
    const auto [lo, hi] = r.histogram.p95();
    rows.push_back({{"label", r.type.label()},
                    {"op", std::string(to_string(r.type.op))},
                    {"mode", r.histogram.mode()},
                    {"p95_low", lo},
                    {"p95_high", hi},
                    {"trials", r.histogram.trials()}});
  }
  return rows;
}

}  // namespace ctvsim
