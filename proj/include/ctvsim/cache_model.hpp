#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctvsim {

using Addr = std::uint64_t;

/// Capacity C, block size b and associativity N of one cache level. Sets and
/// blocks are derived: B = C / b, S = B / N.
struct CacheGeometry {
  std::uint64_t capacity_bytes = 0;
  std::uint64_t block_bytes = 64;
  std::uint32_t ways = 1;

  std::uint64_t blocks() const { return capacity_bytes / block_bytes; }
  std::uint64_t sets() const { return blocks() / ways; }
  /// Distance between two consecutive addresses mapping to the same set.
  std::uint64_t set_stride() const { return sets() * block_bytes; }

  /// Throws ConfigError naming the offending field.
  void validate(std::string_view where = "geometry") const;

  bool operator==(const CacheGeometry&) const = default;
};

/// (addr / b) mod S.
std::uint64_t set_index(Addr addr, const CacheGeometry& g);
std::uint64_t tag_of(Addr addr, const CacheGeometry& g);
Addr block_address(Addr addr, const CacheGeometry& g);

enum class PolicyKind { LRU, TreePLRU, FIFO, Random };

std::string_view to_string(PolicyKind p);
/// Accepts "lru", "tree_plru" (alias "plru"), "fifo", "random".
PolicyKind parse_policy(std::string_view s);

struct ReplacementPolicy {
  PolicyKind kind = PolicyKind::LRU;
  std::uint64_t seed = 0;  // Random only

  bool operator==(const ReplacementPolicy&) const = default;
};

enum class CoherenceState : std::uint8_t { M, O, E, S, I };

char to_char(CoherenceState s);

struct BlockLine {
  bool valid = false;
  std::uint64_t tag = 0;
  bool dirty = false;
  CoherenceState state = CoherenceState::I;
  /// One data word per block. Only the functional oracle looks at it.
  std::uint64_t value = 0;
  /// Shared levels: bit c set when core c's private cache installed the line.
  std::uint32_t affinity = 0;
  /// LRU: last-touch stamp. FIFO: insertion stamp.
  std::uint64_t stamp = 0;
};

/// A line that left a cache level, with its address reconstructed from
/// (tag, set, b). When `dirty` is set this doubles as a writeback notice.
struct EvictedLine {
  Addr addr = 0;
  bool dirty = false;
  CoherenceState state = CoherenceState::I;
  std::uint64_t value = 0;
  std::uint32_t affinity = 0;
};

struct InsertResult {
  std::uint32_t way = 0;
  std::optional<EvictedLine> evicted;
};

/// One set-associative cache level. Sets are materialised lazily; an untouched
/// set behaves exactly like a set of invalid lines.
class CacheLevel {
 public:
  CacheLevel(CacheGeometry geometry, ReplacementPolicy policy, int level = 1,
             bool shared = false, bool inclusive = false);

  const CacheGeometry& geometry() const { return geometry_; }
  const ReplacementPolicy& policy() const { return policy_; }
  int level() const { return level_; }
  bool shared() const { return shared_; }
  bool inclusive() const { return inclusive_; }

  std::uint64_t set_index(Addr addr) const { return ctvsim::set_index(addr, geometry_); }
  std::uint64_t tag(Addr addr) const { return tag_of(addr, geometry_); }
  Addr address_of(std::uint64_t set, std::uint64_t tag) const;

  /// Way holding `addr`, if any. Never mutates.
  std::optional<std::uint32_t> lookup(Addr addr) const;
  bool contains(Addr addr) const { return lookup(addr).has_value(); }

  /// Line at (set, way); invalid if the set was never touched.
  const BlockLine& line(std::uint64_t set, std::uint32_t way) const;
  /// Line holding `addr`. Precondition: contains(addr).
  const BlockLine& line_for(Addr addr) const;

  /// First invalid way of `set`, if any.
  std::optional<std::uint32_t> free_way(std::uint64_t set) const;
  /// Victim according to the replacement policy. Intended for full sets.
  std::uint32_t choose_victim(std::uint64_t set);

  /// Installs a line into (set, way). The way must be invalid.
  void fill(std::uint64_t set, std::uint32_t way, std::uint64_t tag, CoherenceState state,
            std::uint64_t value, std::uint32_t affinity = 0);
  /// Removes the line at (set, way). No-op on an invalid line.
  std::optional<EvictedLine> evict(std::uint64_t set, std::uint32_t way);
  /// Records an access for the replacement policy.
  void touch(std::uint64_t set, std::uint32_t way);
  void mark_dirty(std::uint64_t set, std::uint32_t way, CoherenceState state);
  void set_state(std::uint64_t set, std::uint32_t way, CoherenceState state);
  void set_value(std::uint64_t set, std::uint32_t way, std::uint64_t value);
  void add_affinity(std::uint64_t set, std::uint32_t way, std::uint32_t bits);
  /// Same as evict; kept separate so call sites read as coherence actions.
  std::optional<EvictedLine> invalidate_line(std::uint64_t set, std::uint32_t way) {
    return evict(set, way);
  }

  /// Places `addr` in its set: first invalid way, otherwise the policy's
  /// victim (which is evicted and returned).
  InsertResult insert(Addr addr, CoherenceState state, std::uint64_t value,
                      std::uint32_t affinity = 0);

  /// Number of times choose_victim ran (i.e. the policy had to pick among
  /// valid lines).
  std::uint64_t replacements() const { return replacements_; }

  /// Valid lines of one set, in way order.
  std::vector<EvictedLine> valid_lines(std::uint64_t set) const;

  /// Visits every valid line as (set, way, line).
  template <typename Fn>
  void for_each_valid(Fn&& fn) const {
    for (const auto& [set, data] : sets_)
      for (std::uint32_t w = 0; w < data.lines.size(); ++w)
        if (data.lines[w].valid) fn(set, w, data.lines[w]);
  }

  /// Throws InvariantViolation if a set holds a duplicate tag or a line
  /// breaks the valid/state/dirty coupling.
  void check_invariants() const;

 private:
  struct SetData {
    std::vector<BlockLine> lines;
    std::vector<std::uint8_t> tree;  // TreePLRU: N-1 node bits, heap order
  };

  SetData& materialise(std::uint64_t set);
  const SetData* find_set(std::uint64_t set) const;
  void on_access(SetData& s, std::uint32_t way, bool inserted);

  CacheGeometry geometry_;
  ReplacementPolicy policy_;
  int level_;
  bool shared_;
  bool inclusive_;
  std::unordered_map<std::uint64_t, SetData> sets_;
  std::uint64_t clock_ = 0;
  std::uint64_t random_draws_ = 0;
  std::uint64_t replacements_ = 0;
};

}  // namespace ctvsim
