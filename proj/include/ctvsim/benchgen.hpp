#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctvsim/histogram.hpp"
#include "ctvsim/latency.hpp"
#include "ctvsim/machine.hpp"
#include "ctvsim/three_step.hpp"

namespace ctvsim {

/// Natural: read realises an access, flush an invalidation.
/// WriteRealized: write realises both.
enum class Realization { Natural, WriteRealized };
/// Time-slicing: victim and attacker on different cores.
/// SMT: co-resident hardware threads sharing one L1.
enum class Schedule { TS, SMT };

struct TestConfig {
  std::array<Realization, 3> realization{};
  Schedule schedule = Schedule::TS;

  /// "RF_W_RF_TS".
  std::string label() const;
  bool operator==(const TestConfig&) const = default;
};

inline constexpr std::size_t kConfigCount = 16;

/// All 16 configurations in a stable order (step 1 most significant, RF
/// before W, TS before SMT).
const std::vector<TestConfig>& gen_configs();
/// Index of a label in gen_configs(); throws InputError.
std::size_t config_index(const std::string& label);

/// False when a Natural step needs a flush the target lacks, or the schedule
/// is SMT on a target without SMT.
bool validity(const TestConfig& config, const VulnTriple& triple, const TargetSpec& target);

enum class ActionKind {
  Read,
  Write,
  Flush,
  RemoteWriteInvalidate,  // write from the acting core, invalidating other copies
  Evict,                  // eviction sweeps through every level
  FlushSet,               // flush every line of the monitored L1 set
  EvictSet,               // eviction sweep over the monitored L1 set
};

std::string_view to_string(ActionKind k);

struct PlanAction {
  ActionKind kind = ActionKind::Read;
  int core = 0;
  AddressClass target = AddressClass::none;
};

struct PlanStep {
  StepState state;
  Realization realization = Realization::Natural;
  std::vector<PlanAction> actions;  // empty for the wildcard
};

/// Which address plays the secret.
enum class Hypothesis {
  SecretIsA,          // u = a
  SecretCongruent,    // u conflicts with a in the monitored set
  SecretElsewhere,    // u sits in an unrelated set (decoy)
};

inline constexpr std::uint32_t kMonitoredLines = 8;
/// Base of the addresses used by plans.
inline constexpr Addr kPlanRegion = Addr{1} << 24;
/// Number of distinct decoy placements available for SecretElsewhere.
inline constexpr std::uint32_t kDecoyChoices = 5;

/// Concrete addresses of one monitored line under a hypothesis.
struct LaneAddresses {
  Addr a = 0;
  std::vector<Addr> aliases;
  Addr d = 0;
  Addr u = 0;

  std::vector<Addr> resolve(AddressClass c) const;
};

LaneAddresses lane_addresses(const CacheGeometry& l1, std::uint32_t lane, Hypothesis h,
                             std::uint32_t decoy = 0);

/// A triple realised as per-core memory operations over 8 monitored lines in
/// distinct L1 sets. Steps run strictly in order, each over all lanes; the
/// measurement is the cost of step 3 per lane.
struct ExecutionPlan {
  int triple_id = 0;
  TestConfig config;
  int victim_core = 0;
  int attacker_core = 1;
  std::uint32_t lanes = kMonitoredLines;
  std::array<PlanStep, 3> steps;
};

/// Throws PlanError if the configuration is invalid on the target or a dry
/// run does not reach the intended cache states.
ExecutionPlan compile_plan(const VulnTriple& triple, const TestConfig& config,
                           const TargetSpec& target);

struct PlanRun {
  /// Step-3 operation traces, one list per lane.
  std::vector<std::vector<EventTrace>> probes;
  std::uint64_t shared_replacements = 0;
};

/// Runs the plan on `machine` with addresses bound for `hypothesis`. Every
/// step is checked against its intended effect; throws PlanError otherwise.
PlanRun execute_plan(const ExecutionPlan& plan, SimMachine& machine, Hypothesis hypothesis,
                     std::uint32_t decoy = 0);

/// Step-3 latency per lane; each operation draws its own jitter from `rng`.
std::vector<std::int64_t> probe_latencies(const PlanRun& run, const LatencyTable& table,
                                          std::mt19937_64* rng);

inline constexpr std::int64_t kDefaultDeltaMin = 2;

/// |mode_A - mode_B| >= delta_min and disjoint p95 intervals.
bool decide_detection(const Histogram& a, const Histogram& b,
                      std::int64_t delta_min = kDefaultDeltaMin);

struct Verdict {
  bool distinguishable = false;
  std::int64_t delta = 0;
  Histogram stats_a;  // secret-dependent hypothesis reported
  Histogram stats_b;  // decoy hypothesis
  bool touched_shared_replacement = false;
};

enum class CellStatus { Detected, NotDetected, InvalidConfig };
std::string_view to_string(CellStatus s);
CellStatus parse_cell_status(std::string_view s);

struct DetectionCell {
  CellStatus status = CellStatus::NotDetected;
  std::int64_t delta = 0;
  std::optional<std::int64_t> mode_a;
  std::optional<std::int64_t> mode_b;
  bool touched_shared_replacement = false;
  std::string reason;
};

/// (triple id, config index) -> cell.
struct DetectionMatrix {
  std::string target;
  std::vector<int> triples;
  std::map<std::pair<int, std::size_t>, DetectionCell> cells;

  const DetectionCell& at(int triple, std::size_t config) const;
  const DetectionCell& at(int triple, const std::string& label) const {
    return at(triple, config_index(label));
  }
  bool detected_anywhere(int triple) const;
};

struct BenchOptions {
  std::uint32_t trials = 100;
  std::int64_t delta_min = kDefaultDeltaMin;
  unsigned jobs = 1;
};

/// Fills every (triple, config) cell. Requires trials >= 100.
DetectionMatrix run_benchmark(const TargetSpec& target, const std::vector<int>& triples,
                              const BenchOptions& options);

/// triple_id,config_label,status,delta,mode_a,mode_b
void write_matrix_csv(std::ostream& out, const DetectionMatrix& m);
/// Reads write_matrix_csv output (lines starting with '#' are skipped).
DetectionMatrix read_matrix_csv(std::istream& in, const std::string& target);
nlohmann::json matrix_summary(const DetectionMatrix& m);

}  // namespace ctvsim
