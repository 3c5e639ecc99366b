#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctvsim/benchgen.hpp"

namespace ctvsim {

/// A count over a denominator, kept together so reports stay auditable.
struct Ratio {
  std::size_t hits = 0;
  std::size_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total); }
};

/// Share of evaluated triples with at least one Detected cell. Invalid cells
/// never count. Throws InputError on an empty matrix.
Ratio ctvs(const DetectionMatrix& m);

/// Selects cells by (triple id, config index).
using CellFilter = std::function<bool(int triple, std::size_t config)>;

struct Category {
  std::string name;
  CellFilter select;
};

/// Detected cells / valid cells among those the filter selects. Throws
/// InputError when the selection holds no valid cell.
Ratio success_ratio(const DetectionMatrix& m, const CellFilter& filter);

CellFilter all_cells();
CellFilter schedule_is(Schedule s);
/// Step-3 realization.
CellFilter observation_is(Realization r);
CellFilter config_label_is(const std::string& label);

using CellKey = std::pair<int, std::size_t>;
/// Keys valid in every matrix. Matrices must cover the same triples.
std::set<CellKey> shared_keys(const std::vector<DetectionMatrix>& matrices);
CellFilter in_keys(std::set<CellKey> keys);
CellFilter not_in_keys(std::set<CellKey> keys);

/// Shared-vs-exclusive and per-schedule/observation categories for one matrix
/// compared against `matrices` (which should include it).
std::vector<Category> standard_categories(const std::vector<DetectionMatrix>& matrices);

struct PresenceClasses {
  std::size_t total = 0;
  std::vector<int> present_in_all;
  std::vector<int> absent_from_all;
  std::vector<int> mixed;
  /// Triples detected under one config label on every target.
  std::vector<int> shared_config;
};

/// Throws InputError when matrices cover different triple sets or none given.
PresenceClasses presence_classes(const std::vector<DetectionMatrix>& matrices);

struct TargetScore {
  std::string target;
  Ratio ctvs;
  /// Category name -> ratio; nullopt for a category without valid cells.
  std::vector<std::pair<std::string, std::optional<Ratio>>> categories;
};

struct ScoreReport {
  std::vector<TargetScore> targets;
  PresenceClasses presence;
};

ScoreReport score(const std::vector<DetectionMatrix>& matrices);
nlohmann::json to_json(const ScoreReport& r);
/// Plain-text tables: CTVS per target, success ratios, presence classes.
void write_tables(std::ostream& out, const ScoreReport& r);

}  // namespace ctvsim
