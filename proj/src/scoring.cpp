#include "ctvsim/scoring.hpp"

#include <algorithm>
#include <ostream>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"

namespace ctvsim {

Ratio ctvs(const DetectionMatrix& m) {
  if (m.triples.empty()) throw InputError(fmt::format("{}: empty detection matrix", m.target));
  Ratio r{0, m.triples.size()};
  for (int t : m.triples)
    if (m.detected_anywhere(t)) ++r.hits;
  return r;
}

Ratio success_ratio(const DetectionMatrix& m, const CellFilter& filter) {
  Ratio r;
  for (const auto& [key, cell] : m.cells) {
    if (cell.status == CellStatus::InvalidConfig || !filter(key.first, key.second)) continue;
    ++r.total;
    if (cell.status == CellStatus::Detected) ++r.hits;
  }
  if (r.total == 0) throw InputError(fmt::format("{}: category selects no valid cell", m.target));
  return r;
}

CellFilter all_cells() {
  return [](int, std::size_t) { return true; };
}

CellFilter schedule_is(Schedule s) {
  return [s](int, std::size_t c) { return gen_configs().at(c).schedule == s; };
}

CellFilter observation_is(Realization r) {
  return [r](int, std::size_t c) { return gen_configs().at(c).realization[2] == r; };
}

CellFilter config_label_is(const std::string& label) {
  const auto idx = config_index(label);
  return [idx](int, std::size_t c) { return c == idx; };
}

namespace {

void require_same_triples(const std::vector<DetectionMatrix>& matrices) {
  if (matrices.empty()) throw InputError("no detection matrices given");
  auto ref = matrices.front().triples;
  std::sort(ref.begin(), ref.end());
  for (const auto& m : matrices) {
    auto ids = m.triples;
    std::sort(ids.begin(), ids.end());
    if (ids != ref)
      throw InputError(fmt::format("matrices {} and {} cover different triples", matrices.front().target, m.target));
  }
}

}  // namespace

std::set<CellKey> shared_keys(const std::vector<DetectionMatrix>& matrices) {
  require_same_triples(matrices);
  std::set<CellKey> out;
  for (const auto& [key, cell] : matrices.front().cells) {
    const bool everywhere = std::all_of(matrices.begin(), matrices.end(), [&](const DetectionMatrix& m) {
      return m.at(key.first, key.second).status != CellStatus::InvalidConfig;
    });
    if (everywhere) out.insert(key);
  }
  return out;
}

CellFilter in_keys(std::set<CellKey> keys) {
  return [keys = std::move(keys)](int t, std::size_t c) { return keys.count({t, c}) > 0; };
}

CellFilter not_in_keys(std::set<CellKey> keys) {
  return [keys = std::move(keys)](int t, std::size_t c) { return keys.count({t, c}) == 0; };
}

std::vector<Category> standard_categories(const std::vector<DetectionMatrix>& matrices) {
  auto shared = shared_keys(matrices);
  return {{"all", all_cells()},
          {"shared", in_keys(shared)},
          {"exclusive", not_in_keys(shared)},
          {"TS", schedule_is(Schedule::TS)},
          {"SMT", schedule_is(Schedule::SMT)},
          {"observe_RF", observation_is(Realization::Natural)},
          {"observe_W", observation_is(Realization::WriteRealized)}};
}

PresenceClasses presence_classes(const std::vector<DetectionMatrix>& matrices) {
  require_same_triples(matrices);
  PresenceClasses p;
  auto ids = matrices.front().triples;
  std::sort(ids.begin(), ids.end());
  p.total = ids.size();
  for (int t : ids) {
    std::size_t present = 0;
    for (const auto& m : matrices)
      if (m.detected_anywhere(t)) ++present;
    if (present == matrices.size())
      p.present_in_all.push_back(t);
    else if (present == 0)
      p.absent_from_all.push_back(t);
    else
      p.mixed.push_back(t);

    for (std::size_t c = 0; c < kConfigCount; ++c) {
      const bool all = std::all_of(matrices.begin(), matrices.end(), [&](const DetectionMatrix& m) {
        return m.at(t, c).status == CellStatus::Detected;
      });
      if (all) {
        p.shared_config.push_back(t);
        break;
      }
    }
  }
  return p;
}

ScoreReport score(const std::vector<DetectionMatrix>& matrices) {
  ScoreReport r;
  r.presence = presence_classes(matrices);
  const auto cats = standard_categories(matrices);
  for (const auto& m : matrices) {
    TargetScore ts{m.target, ctvs(m), {}};
    for (const auto& c : cats) {
      std::optional<Ratio> ratio;
      try {
        ratio = success_ratio(m, c.select);
      } catch (const InputError&) {
      }
      ts.categories.emplace_back(c.name, ratio);
    }
    r.targets.push_back(std::move(ts));
  }
  return r;
}

namespace {

nlohmann::json ratio_json(const Ratio& r) {
  return {{"hits", r.hits}, {"total", r.total}, {"ratio", r.value()}};
}

nlohmann::json class_json(const std::vector<int>& ids, std::size_t total) {
  return {{"count", ids.size()},
          {"total", total},
          {"ratio", total ? static_cast<double>(ids.size()) / static_cast<double>(total) : 0.0},
          {"triples", ids}};
}

std::string ratio_cell(const std::optional<Ratio>& r) {
  if (!r) return "n/a";
  return fmt::format("{:.3f} ({}/{})", r->value(), r->hits, r->total);
}

}  // namespace

nlohmann::json to_json(const ScoreReport& r) {
  auto targets = nlohmann::json::array();
  for (const auto& t : r.targets) {
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [name, ratio] : t.categories) cats[name] = ratio ? ratio_json(*ratio) : nlohmann::json();
    targets.push_back({{"target", t.target}, {"ctvs", ratio_json(t.ctvs)}, {"success_ratio", cats}});
  }
  const auto& p = r.presence;
  return {{"targets", targets},
          {"presence",
           {{"total", p.total},
            {"present_in_all", class_json(p.present_in_all, p.total)},
            {"absent_from_all", class_json(p.absent_from_all, p.total)},
            {"mixed", class_json(p.mixed, p.total)},
            {"shared_config", class_json(p.shared_config, p.total)}}}};
}

void write_tables(std::ostream& out, const ScoreReport& r) {
  out << fmt::format("{:<16} {:>22}\n", "target", "CTVS");
  for (const auto& t : r.targets) out << fmt::format("{:<16} {:>22}\n", t.target, ratio_cell(t.ctvs));
  out << '\n';

  if (!r.targets.empty()) {
    out << fmt::format("{:<12}", "category");
    for (const auto& t : r.targets) out << fmt::format(" {:>22}", t.target);
    out << '\n';
    for (std::size_t c = 0; c < r.targets.front().categories.size(); ++c) {
      out << fmt::format("{:<12}", r.targets.front().categories[c].first);
      for (const auto& t : r.targets) out << fmt::format(" {:>22}", ratio_cell(t.categories[c].second));
      out << '\n';
    }
    out << '\n';
  }

  const auto& p = r.presence;
  const auto row = [&](std::string_view name, const std::vector<int>& ids) {
    out << fmt::format("{:<16} {:>22}\n", name, ratio_cell(Ratio{ids.size(), p.total}));
  };
  row("present_in_all", p.present_in_all);
  row("absent_from_all", p.absent_from_all);
  row("mixed", p.mixed);
  row("shared_config", p.shared_config);
}

}  // namespace ctvsim
