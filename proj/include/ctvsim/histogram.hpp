#pragma once

#include <cstdint>
#include <map>
#include <utility>

namespace ctvsim {

/// Latency histogram: cycle count -> frequency.
class Histogram {
 public:
  void add(std::int64_t cycles, std::uint64_t count = 1);
  /// Associative and commutative.
  void merge(const Histogram& other);

  bool empty() const { return trials_ == 0; }
  std::uint64_t trials() const { return trials_; }
  const std::map<std::int64_t, std::uint64_t>& bins() const { return bins_; }

  /// Most frequent latency; ties resolve to the smaller latency.
  std::int64_t mode() const;
  /// Central 95% interval: nearest-rank 2.5% and 97.5% quantiles, widened if
  /// needed so that it always contains the mode.
  std::pair<std::int64_t, std::int64_t> p95() const;
  /// Value at 1-based rank `rank` of the sorted observations.
  std::int64_t at_rank(std::uint64_t rank) const;

  bool operator==(const Histogram&) const = default;

 private:
  std::map<std::int64_t, std::uint64_t> bins_;
  std::uint64_t trials_ = 0;
};

}  // namespace ctvsim
