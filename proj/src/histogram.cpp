#include "ctvsim/histogram.hpp"

#include <algorithm>

#include "ctvsim/errors.hpp"

namespace ctvsim {

void Histogram::add(std::int64_t cycles, std::uint64_t count) {
  if (count == 0) return;
  bins_[cycles] += count;
  trials_ += count;
}

void Histogram::merge(const Histogram& other) {
  for (const auto& [c, n] : other.bins_) add(c, n);
}

std::int64_t Histogram::mode() const {
  if (empty()) throw InputError("mode of an empty histogram");
  auto best = bins_.begin();
  for (auto it = bins_.begin(); it != bins_.end(); ++it)
    if (it->second > best->second) best = it;  // strict: earlier (smaller) bin wins ties
  return best->first;
}

std::int64_t Histogram::at_rank(std::uint64_t rank) const {
  if (empty()) throw InputError("quantile of an empty histogram");
  rank = std::clamp<std::uint64_t>(rank, 1, trials_);
  std::uint64_t seen = 0;
  for (const auto& [c, n] : bins_) {
    seen += n;
    if (seen >= rank) return c;
  }
  return bins_.rbegin()->first;
}

std::pair<std::int64_t, std::int64_t> Histogram::p95() const {
  // ceil(0.025 n) and ceil(0.975 n) in exact integer arithmetic
  const auto lo = at_rank((trials_ * 25 + 999) / 1000);
  const auto hi = at_rank((trials_ * 975 + 999) / 1000);
  const auto m = mode();
  return {std::min(lo, m), std::max(hi, m)};
}

}  // namespace ctvsim
