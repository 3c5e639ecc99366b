#include "ctvsim/benchgen.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"
#include "ctvsim/eviction.hpp"

namespace ctvsim {

std::string TestConfig::label() const {
  std::string out;
  for (auto r : realization) out += r == Realization::Natural ? "RF_" : "W_";
  out += schedule == Schedule::TS ? "TS" : "SMT";
  return out;
}

const std::vector<TestConfig>& gen_configs() {
  static const std::vector<TestConfig> configs = [] {
    std::vector<TestConfig> out;
    constexpr std::array kinds{Realization::Natural, Realization::WriteRealized};
    for (auto r1 : kinds)
      for (auto r2 : kinds)
        for (auto r3 : kinds)
          for (auto s : {Schedule::TS, Schedule::SMT}) out.push_back({{r1, r2, r3}, s});
    return out;
  }();
  return configs;
}

std::size_t config_index(const std::string& label) {
  const auto& all = gen_configs();
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i].label() == label) return i;
  throw InputError(fmt::format("unknown test configuration '{}'", label));
}

bool validity(const TestConfig& config, const VulnTriple& triple, const TargetSpec& target) {
  if (config.schedule == Schedule::SMT && !target.smt) return false;
  if (!target.flush_user_mode)
    for (std::size_t i = 0; i < 3; ++i)
      if (triple.steps[i].is_invalidation() && config.realization[i] == Realization::Natural)
        return false;
  return true;
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Read: return "read";
    case ActionKind::Write: return "write";
    case ActionKind::Flush: return "flush";
    case ActionKind::RemoteWriteInvalidate: return "remote_write_invalidate";
    case ActionKind::Evict: return "evict";
    case ActionKind::FlushSet: return "flush_set";
    case ActionKind::EvictSet: return "evict_set";
  }
  return "?";
}

std::vector<Addr> LaneAddresses::resolve(AddressClass c) const {
  switch (c) {
    case AddressClass::u: return {u};
    case AddressClass::a: return {a};
    case AddressClass::a_alias: return aliases;
    case AddressClass::d: return {d};
    case AddressClass::none: return {};
  }
  return {};
}

namespace {

// Set offsets (in blocks) from a lane's monitored set.
constexpr Addr kDifferentSetOffset = 16;
constexpr Addr kDecoyOffset = 24;
constexpr Addr kDecoyStep = kMonitoredLines;
constexpr std::uint64_t kMinL1Sets = kDecoyOffset + kDecoyStep * kDecoyChoices;

}  // namespace

LaneAddresses lane_addresses(const CacheGeometry& l1, std::uint32_t lane, Hypothesis h,
                             std::uint32_t decoy) {
  if (decoy >= kDecoyChoices)
    throw InputError(fmt::format("decoy choice {} out of range [0, {})", decoy, kDecoyChoices));
  const Addr b = l1.block_bytes;
  LaneAddresses out;
  out.a = kPlanRegion + Addr{lane} * b;
  out.aliases = congruent_addresses(l1, out.a, l1.ways);
  out.d = out.a + kDifferentSetOffset * b;
  switch (h) {
    case Hypothesis::SecretIsA: out.u = out.a; break;
    case Hypothesis::SecretCongruent: out.u = out.a + Addr{l1.ways + 1} * l1.set_stride(); break;
    case Hypothesis::SecretElsewhere: out.u = out.a + (kDecoyOffset + kDecoyStep * decoy) * b; break;
  }
  return out;
}

namespace {

PlanStep compile_step(const StepState& s, Realization r, const ExecutionPlan& plan) {
  PlanStep step{s, r, {}};
  if (s.is_wildcard()) return step;
  const int core = s.actor == Actor::Victim ? plan.victim_core : plan.attacker_core;
  const bool natural = r == Realization::Natural;
  ActionKind kind;
  if (s.action == StepAction::Access) {
    kind = natural ? ActionKind::Read : ActionKind::Write;
  } else if (s.is_invalidate_all()) {
    kind = natural ? ActionKind::FlushSet : ActionKind::EvictSet;
  } else if (natural) {
    kind = ActionKind::Flush;
  } else if (s.actor == Actor::Attacker && plan.config.schedule == Schedule::TS) {
    kind = ActionKind::RemoteWriteInvalidate;
  } else {
    // No remote writer is available to the acting thread.
    kind = ActionKind::Evict;
  }
  step.actions.push_back({kind, core, s.address});
  return step;
}

void fail(const ExecutionPlan& plan, std::size_t step, std::uint32_t lane, std::string_view what) {
  throw PlanError(fmt::format("triple {} {}: step {} lane {}: {}", plan.triple_id,
                              plan.config.label(), step + 1, lane, what));
}

/// Applies one action on one lane; returns the traces of the operations.
std::vector<EventTrace> run_action(const ExecutionPlan& plan, std::size_t step_no, std::uint32_t lane,
                                   const PlanAction& act, const LaneAddresses& lane_addrs,
                                   SimMachine& m) {
  std::vector<EventTrace> traces;
  const auto addrs = lane_addrs.resolve(act.target);
  switch (act.kind) {
    case ActionKind::Read:
    case ActionKind::Write:
      for (Addr x : addrs) {
        const auto kind = act.kind == ActionKind::Read ? MemOpKind::Read : MemOpKind::Write;
        traces.push_back(m.apply({kind, act.core, x, 0xa5a5'0000u + lane}));
        if (!m.present(act.core, x, 1)) fail(plan, step_no, lane, "accessed block missing from L1");
      }
      break;
    case ActionKind::Flush:
      for (Addr x : addrs) {
        traces.push_back(m.apply({MemOpKind::Flush, act.core, x}));
        if (m.snapshot_placement(x).cached_anywhere()) fail(plan, step_no, lane, "flushed block still cached");
      }
      break;
    case ActionKind::RemoteWriteInvalidate:
      for (Addr x : addrs) {
        traces.push_back(m.remote_invalidate_via_write(act.core, x));
        if (m.snapshot_placement(x).in_any_l1_except(act.core))
          fail(plan, step_no, lane, "remote write left another private copy");
      }
      break;
    case ActionKind::Evict:
      for (Addr x : addrs) {
        auto r = evict_all_levels(m, act.core, x);
        traces.push_back(std::move(r.trace));
        if (!r.evicted) fail(plan, step_no, lane, "eviction did not remove the block");
      }
      break;
    case ActionKind::FlushSet:
    case ActionKind::EvictSet: {
      const auto& g = m.geometry(1);
      const auto set = set_index(lane_addrs.a, g);
      const auto lines = m.l1(act.core).valid_lines(set);
      for (const auto& line : lines) {
        if (act.kind == ActionKind::FlushSet) {
          traces.push_back(m.apply({MemOpKind::Flush, act.core, line.addr}));
        } else {
          auto r = evict_until_gone(m, act.core, line.addr, 1);
          traces.push_back(std::move(r.trace));
        }
      }
      for (const auto& line : lines)
        if (m.present(act.core, line.addr, 1)) fail(plan, step_no, lane, "monitored set not cleared");
      break;
    }
  }
  return traces;
}

}  // namespace

PlanRun execute_plan(const ExecutionPlan& plan, SimMachine& machine, Hypothesis hypothesis,
                     std::uint32_t decoy) {
  const auto& g = machine.geometry(1);
  std::vector<LaneAddresses> lanes;
  lanes.reserve(plan.lanes);
  for (std::uint32_t k = 0; k < plan.lanes; ++k) lanes.push_back(lane_addresses(g, k, hypothesis, decoy));

  PlanRun run;
  run.probes.resize(plan.lanes);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::uint32_t k = 0; k < plan.lanes; ++k)
      for (const auto& act : plan.steps[s].actions) {
        auto traces = run_action(plan, s, k, act, lanes[k], machine);
        if (s == 2)
          for (auto& t : traces) run.probes[k].push_back(std::move(t));
      }
  run.shared_replacements = machine.spec().has_level(2) ? machine.shared_replacements(2) : 0;
  return run;
}

std::vector<std::int64_t> probe_latencies(const PlanRun& run, const LatencyTable& table,
                                          std::mt19937_64* rng) {
  std::vector<std::int64_t> out;
  out.reserve(run.probes.size());
  for (const auto& lane : run.probes) {
    std::int64_t total = 0;
    for (const auto& t : lane) total += cost(t, table, rng);
    out.push_back(total);
  }
  return out;
}

ExecutionPlan compile_plan(const VulnTriple& triple, const TestConfig& config,
                           const TargetSpec& target) {
  if (!validity(config, triple, target))
    throw PlanError(fmt::format("{}: configuration {} is not valid for triple {}", target.name,
                                config.label(), triple.id));
  if (config.schedule == Schedule::TS && target.cores < 2)
    throw PlanError(fmt::format("{}: time-slicing needs two cores", target.name));
  if (target.l1().geometry.sets() < kMinL1Sets)
    throw PlanError(fmt::format("{}: plans need at least {} L1 sets", target.name, kMinL1Sets));

  ExecutionPlan plan;
  plan.triple_id = triple.id;
  plan.config = config;
  plan.victim_core = 0;
  plan.attacker_core = config.schedule == Schedule::TS ? 1 : 0;
  for (std::size_t i = 0; i < 3; ++i)
    plan.steps[i] = compile_step(triple.steps[i], config.realization[i], plan);

  SimMachine dry(target, 0);
  execute_plan(plan, dry, Hypothesis::SecretIsA);
  return plan;
}

bool decide_detection(const Histogram& a, const Histogram& b, std::int64_t delta_min) {
  if (a.empty() || b.empty()) throw InputError("decide_detection needs two non-empty histograms");
  const auto delta = a.mode() > b.mode() ? a.mode() - b.mode() : b.mode() - a.mode();
  if (delta < delta_min) return false;
  const auto [alo, ahi] = a.p95();
  const auto [blo, bhi] = b.p95();
  return ahi < blo || bhi < alo;
}

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Detected: return "Detected";
    case CellStatus::NotDetected: return "NotDetected";
    case CellStatus::InvalidConfig: return "InvalidConfig";
  }
  return "?";
}

CellStatus parse_cell_status(std::string_view s) {
  for (auto c : {CellStatus::Detected, CellStatus::NotDetected, CellStatus::InvalidConfig})
    if (to_string(c) == s) return c;
  throw InputError(fmt::format("unknown cell status '{}'", s));
}

const DetectionCell& DetectionMatrix::at(int triple, std::size_t config) const {
  auto it = cells.find({triple, config});
  if (it == cells.end())
    throw InputError(fmt::format("{}: no cell for triple {} config {}", target, triple, config));
  return it->second;
}

bool DetectionMatrix::detected_anywhere(int triple) const {
  for (std::size_t c = 0; c < kConfigCount; ++c) {
    auto it = cells.find({triple, c});
    if (it != cells.end() && it->second.status == CellStatus::Detected) return true;
  }
  return false;
}

void write_matrix_csv(std::ostream& out, const DetectionMatrix& m) {
  const auto& configs = gen_configs();
  out << "triple_id,config_label,status,delta,mode_a,mode_b\n";
  for (int t : m.triples)
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const auto& cell = m.at(t, c);
      out << t << ',' << configs[c].label() << ',' << to_string(cell.status) << ',' << cell.delta << ',';
      if (cell.mode_a) out << *cell.mode_a;
      out << ',';
      if (cell.mode_b) out << *cell.mode_b;
      out << '\n';
    }
}

namespace {

std::int64_t parse_int(std::string_view s, std::size_t line_no) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw InputError(fmt::format("matrix csv line {}: bad integer '{}'", line_no, s));
  return v;
}

}  // namespace

DetectionMatrix read_matrix_csv(std::istream& in, const std::string& target) {
  DetectionMatrix m;
  m.target = target;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "triple_id,config_label,status,delta,mode_a,mode_b")
        throw InputError(fmt::format("matrix csv line {}: unexpected header", line_no));
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw InputError(fmt::format("matrix csv line {}: expected 6 fields", line_no));
    const int t = static_cast<int>(parse_int(f[0], line_no));
    unrank_triple(t);
    DetectionCell cell;
    cell.status = parse_cell_status(f[2]);
    cell.delta = parse_int(f[3], line_no);
    if (!f[4].empty()) cell.mode_a = parse_int(f[4], line_no);
    if (!f[5].empty()) cell.mode_b = parse_int(f[5], line_no);
    if (m.triples.empty() || m.triples.back() != t) {
      if (std::find(m.triples.begin(), m.triples.end(), t) != m.triples.end())
        throw InputError(fmt::format("matrix csv line {}: triple {} is not contiguous", line_no, t));
      m.triples.push_back(t);
    }
    if (!m.cells.emplace(std::pair{t, config_index(f[1])}, std::move(cell)).second)
      throw InputError(fmt::format("matrix csv line {}: duplicate cell", line_no));
  }
  if (m.cells.size() != m.triples.size() * kConfigCount)
    throw InputError(fmt::format("matrix {}: {} cells for {} triples, expected 16 each", target,
                                 m.cells.size(), m.triples.size()));
  return m;
}

nlohmann::json matrix_summary(const DetectionMatrix& m) {
  const auto& configs = gen_configs();
  nlohmann::json per_config = nlohmann::json::object();
  std::size_t detected = 0, invalid = 0, observable = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::size_t d = 0, v = 0;
    for (int t : m.triples) {
      const auto s = m.at(t, c).status;
      if (s != CellStatus::InvalidConfig) ++v;
      if (s == CellStatus::Detected) ++d;
    }
    detected += d;
    invalid += m.triples.size() - v;
    per_config[configs[c].label()] = {{"detected", d}, {"valid", v}};
  }
  for (int t : m.triples)
    if (m.detected_anywhere(t)) ++observable;
  return {{"target", m.target},
          {"triples", m.triples.size()},
          {"cells", m.cells.size()},
          {"detected_cells", detected},
          {"invalid_cells", invalid},
          {"observable_triples", observable},
          {"per_config", per_config}};
}

}  // namespace ctvsim
