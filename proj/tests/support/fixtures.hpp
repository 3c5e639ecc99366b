#pragma once

// Synthetic detection matrices for the scoring arithmetic.

#include <functional>
#include <string>
#include <vector>

#include "ctvsim/benchgen.hpp"

namespace fixtures {

using CellFn = std::function<ctvsim::CellStatus(int triple, std::size_t config)>;

inline ctvsim::DetectionMatrix make_matrix(const std::string& target, int triples, const CellFn& fn) {
  ctvsim::DetectionMatrix m;
  m.target = target;
  for (int t = 0; t < triples; ++t) {
    m.triples.push_back(t);
    for (std::size_t c = 0; c < ctvsim::kConfigCount; ++c) m.cells[{t, c}] = ctvsim::DetectionCell{fn(t, c), 0, {}, {}, false, {}};
  }
  return m;
}

inline bool is_smt(std::size_t c) { return ctvsim::gen_configs()[c].schedule == ctvsim::Schedule::SMT; }

/// 88 triples, the first 58 detected under one config.
inline ctvsim::DetectionMatrix single_target_fixture() {
  return make_matrix("x", 88, [](int t, std::size_t c) {
    return (t < 58 && c == 5) ? ctvsim::CellStatus::Detected : ctvsim::CellStatus::NotDetected;
  });
}

// Three targets over 88 triples: 0..32 detected under config 0 everywhere,
// 33..39 detected everywhere but under different configs, 40..81 detected on
// one target only, 82..87 never detected. SMT cells are invalid throughout.
inline std::vector<ctvsim::DetectionMatrix> cross_target_fixture() {
  using ctvsim::CellStatus;
  std::vector<ctvsim::DetectionMatrix> out;
  for (int target = 0; target < 3; ++target)
    out.push_back(make_matrix("t" + std::to_string(target), 88, [target](int t, std::size_t c) {
      if (is_smt(c)) return CellStatus::InvalidConfig;
      if (t < 33) return c == 0 ? CellStatus::Detected : CellStatus::NotDetected;
      if (t < 40) return c == 2 * static_cast<std::size_t>(target) ? CellStatus::Detected : CellStatus::NotDetected;
      if (t < 82) return (t % 3 == target && c == 2) ? CellStatus::Detected : CellStatus::NotDetected;
      return CellStatus::NotDetected;
    }));
  return out;
}

}  // namespace fixtures
