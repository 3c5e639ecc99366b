#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctvsim/cache_model.hpp"
#include "ctvsim/events.hpp"
#include "ctvsim/target.hpp"

namespace ctvsim {

enum class MemOpKind { Read, Write, Flush };

std::string_view to_string(MemOpKind k);

struct MemOp {
  MemOpKind kind = MemOpKind::Read;
  int core = 0;
  Addr addr = 0;
  std::uint64_t value = 0;  // Write only
};

/// Where one block currently lives.
struct Placement {
  struct Copy {
    bool present = false;
    bool dirty = false;
  };
  struct SharedCopy {
    int level = 2;
    bool present = false;
    bool dirty = false;
    std::uint32_t affinity = 0;  // cores whose private cache installed it
  };
  std::vector<Copy> l1;  // indexed by core
  std::vector<SharedCopy> shared;

  bool cached_anywhere() const;
  bool dram_only() const { return !cached_anywhere(); }
  /// Present in the private L1 of `core`.
  bool in_l1(int core) const { return l1.at(static_cast<std::size_t>(core)).present; }
  bool in_level(int level) const;
  bool in_any_l1_except(int core) const;
};

/// Multicore cache hierarchy: one private L1 per core, an optional shared L2
/// and L3, and main memory. Every operation is atomic and produces a trace of
/// cost-bearing events. Private L1s run MESI (directory targets) or MOESI
/// (snooping targets); shared levels are non-inclusive victim caches unless
/// flagged inclusive.
class SimMachine {
 public:
  /// `salt` perturbs every Random-policy stream so repeated trials of the
  /// same experiment see different victim choices.
  explicit SimMachine(TargetSpec spec, std::uint64_t salt = 0);

  const TargetSpec& spec() const { return spec_; }
  int cores() const { return spec_.cores; }

  EventTrace apply(const MemOp& op);

  /// Issues a write from `core` so that every other private copy of `addr`
  /// ends invalid. Used where no flush instruction is available.
  EventTrace remote_invalidate_via_write(int core, Addr addr);

  Placement snapshot_placement(Addr addr) const;

  const CacheLevel& l1(int core) const { return l1_.at(static_cast<std::size_t>(core)); }
  /// Shared level 2 or 3; nullptr when absent.
  const CacheLevel* shared_level(int level) const;
  /// Geometry of `level` (1 = L1).
  const CacheGeometry& geometry(int level) const;
  /// True when `addr` is cached at `level` from the point of view of `core`.
  bool present(int core, Addr addr, int level) const;

  std::uint64_t memory_value(Addr addr) const;

  /// Victim choices made by the shared level's replacement policy so far.
  std::uint64_t shared_replacements(int level) const;

  /// Fresh slot for eviction scratch addresses; monotonically increasing.
  std::uint64_t next_scratch_slot() { return scratch_slot_++; }

  /// Directory entry as maintained by the protocol (DirectoryBased only).
  struct DirectoryEntry {
    std::uint32_t sharers = 0;
    int owner = -1;  // core holding M or E, -1 if none
    bool operator==(const DirectoryEntry&) const = default;
  };
  std::optional<DirectoryEntry> directory_entry(Addr addr) const;

  /// Checks tag uniqueness, line-state coupling, the single-writer rule and
  /// (DirectoryBased) directory consistency. Throws InvariantViolation.
  void check_invariants() const;

 private:
  struct Holder {
    int core;
    std::uint32_t way;
    CoherenceState state;
  };

  EventTrace read(int core, Addr addr);
  EventTrace write(int core, Addr addr, std::uint64_t value);
  EventTrace flush(int core, Addr addr);

  std::vector<Holder> remote_holders(int core, Addr addr) const;
  /// Looks `addr` up in the shared levels; returns the hit level (0 if none).
  int shared_hit(Addr addr) const;
  void fill_l1(int core, Addr addr, CoherenceState state, std::uint64_t value, EventTrace& tr);
  void set_l1_state(int core, std::uint32_t way, Addr addr, CoherenceState state);
  void on_l1_evicted(int core, const EvictedLine& line, EventTrace& tr);
  void install_shared(std::size_t idx, Addr addr, bool dirty, std::uint64_t value,
                      std::uint32_t affinity, EventTrace& tr);
  void on_shared_evicted(std::size_t idx, EvictedLine line, EventTrace& tr);
  void drop_stale_shared_copies(Addr addr);
  void directory_note(int core, Addr addr, CoherenceState state);
  Addr block(Addr addr) const { return block_address(addr, l1_.front().geometry()); }
  bool directory() const { return spec_.coherence == CoherenceKind::DirectoryBased; }

  TargetSpec spec_;
  std::vector<CacheLevel> l1_;
  std::vector<CacheLevel> shared_;  // [0] = L2, [1] = L3
  std::unordered_map<Addr, std::uint64_t> memory_;
  std::unordered_map<Addr, DirectoryEntry> directory_;
  std::uint64_t scratch_slot_ = 0;
};

/// Builds a cold machine from a validated spec.
SimMachine build_machine(const TargetSpec& spec, std::uint64_t salt = 0);

}  // namespace ctvsim
