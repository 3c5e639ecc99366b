#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctvsim/histogram.hpp"
#include "ctvsim/machine.hpp"

namespace ctvsim {

enum class PlacementKind { Single, Dual, Dram };

/// Where the measured block sits before the timed operation, relative to the
/// measuring (local) core.
struct TimingPlacement {
  PlacementKind kind = PlacementKind::Dram;
  // Single
  int level = 1;
  bool remote = false;
  bool dirty = false;
  // Dual (always clean)
  int local_level = 1;
  int remote_level = 1;

  static TimingPlacement single(int level, bool remote, bool dirty) {
    return {PlacementKind::Single, level, remote, dirty, 1, 1};
  }
  static TimingPlacement dual(int local_level, int remote_level) {
    return {PlacementKind::Dual, 1, false, false, local_level, remote_level};
  }
  static TimingPlacement dram() { return {}; }

  /// "L1_CLEAN", "REMOTE_L2_DIRTY", "L1_REMOTE_L2_CLEAN", "DRAM".
  std::string label() const;
  bool uses_level(int level) const;
  bool uses_remote() const;

  bool operator==(const TimingPlacement&) const = default;
};

struct TimingType {
  MemOpKind op = MemOpKind::Read;
  TimingPlacement placement;

  std::string label() const { return placement.label(); }
  /// "read/L1_CLEAN".
  std::string name() const;

  bool operator==(const TimingType&) const = default;
};

/// 22 types per operation on a full hierarchy; L3 placements dropped when
/// `has_l3` is false and flush types dropped when `has_flush` is false.
std::vector<TimingType> enumerate_timing_types(bool has_l3, bool has_flush);

/// Timing types measurable on `spec` (remote placements need two cores).
std::vector<TimingType> valid_timing_types(const TargetSpec& spec);

/// Local / remote core used by the timing harness.
inline constexpr int kLocalCore = 0;
inline constexpr int kRemoteCore = 1;

/// Drives a reset machine into the placement of `tt` for `addr` and verifies
/// it with snapshot_placement. Throws InvalidTimingType when the placement
/// cannot be reached on this target.
void prepare_state(SimMachine& machine, const TimingType& tt, Addr addr);

/// True when the machine's placement of `addr` is exactly `p`.
bool placement_matches(const SimMachine& machine, Addr addr, const TimingPlacement& p);

using MachineFactory = std::function<SimMachine(std::uint64_t trial)>;

/// Address measured by the harness.
inline constexpr Addr kTimingAddress = Addr{1} << 24;

/// Fresh machine per trial -> prepare_state -> timed op from the local core.
Histogram measure(const MachineFactory& factory, const TimingType& tt, std::uint32_t trials);
/// Same, building trial machines from `spec` (trial index as salt).
Histogram measure(const TargetSpec& spec, const TimingType& tt, std::uint32_t trials);

struct TimingResult {
  TimingType type;
  Histogram histogram;
};

/// Measures every valid timing type of `spec`; `jobs` workers.
std::vector<TimingResult> measure_all(const TargetSpec& spec, std::uint32_t trials,
                                      unsigned jobs = 1);

/// Tidy CSV: label,op,cycles,count (one row per histogram bin).
void write_histogram_csv(std::ostream& out, const std::vector<TimingResult>& results);
/// [{label, op, mode, p95_low, p95_high, trials}, ...]
nlohmann::json histogram_summary(const std::vector<TimingResult>& results);

}  // namespace ctvsim
