#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ctvsim/benchgen.hpp"

namespace ctvsim {

struct ClassifyOptions {
  std::uint32_t trials = 100;
  std::int64_t delta_min = kDefaultDeltaMin;
  /// Which decoy placement plays the secret-independent hypothesis.
  std::uint32_t decoy = 0;
};

/// Compares step-3 latencies with the secret inside the monitored set against
/// the secret elsewhere. Both "u is a" and "u conflicts with a" count as
/// inside; either separating from the decoy makes the triple distinguishable.
/// Triples that never reference u return false without simulation.
/// Throws FeatureUnavailable for an invalid configuration and PlanError when
/// the plan does not reach its intended states.
Verdict classify(const VulnTriple& triple, const TargetSpec& target, const TestConfig& config,
                 const ClassifyOptions& options = {});

/// Ids of triples detected under at least one valid configuration among
/// `configs` (all 16 when empty), ascending.
std::vector<int> strong_set(const TargetSpec& target, const std::vector<TestConfig>& configs = {},
                            std::uint32_t trials = 100, unsigned jobs = 1);

}  // namespace ctvsim
