#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctvsim/cache_model.hpp"
#include "ctvsim/latency.hpp"

namespace ctvsim {

enum class CoherenceKind { DirectoryBased, Snooping };

std::string_view to_string(CoherenceKind k);

/// One cache level of a target. Level 1 is private (one instance per core);
/// levels 2 and 3 are shared by all cores.
struct LevelSpec {
  int level = 1;
  bool shared = false;
  CacheGeometry geometry;
  PolicyKind policy = PolicyKind::LRU;
  std::uint64_t policy_seed = 0;
  bool inclusive = false;

  bool operator==(const LevelSpec&) const = default;
};

struct TargetSpec {
  std::string name;
  int cores = 2;
  bool smt = false;
  bool flush_user_mode = false;
  CoherenceKind coherence = CoherenceKind::DirectoryBased;
  std::uint64_t seed = 0;
  std::vector<LevelSpec> levels;
  LatencyTable latency;

  const LevelSpec& l1() const { return levels.front(); }
  bool has_level(int level) const;
  const LevelSpec& level_spec(int level) const;
  bool has_l3() const { return has_level(3); }
  int deepest_level() const { return levels.back().level; }

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  bool operator==(const TargetSpec&) const = default;
};

/// Parses and validates a target document.
TargetSpec load_spec(const nlohmann::json& doc);
TargetSpec load_spec_file(const std::filesystem::path& path);
nlohmann::json serialize(const TargetSpec& spec);

}  // namespace ctvsim
