// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cli_runner.hpp"
#include "ctvsim/benchgen.hpp"
#include "ctvsim/classify.hpp"
#include "ctvsim/eviction.hpp"
#include "ctvsim/scoring.hpp"
#include "ctvsim/three_step.hpp"
#include "ctvsim/timing.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "paths.hpp"

using namespace ctvsim;
using testing_paths::shipped;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

const std::vector<std::string> kBoards{"c910", "u54", "u74"};
const std::vector<std::string> kAllTargets{"c910", "u54", "u74", "reference", "l3-demo", "c910-smt"};

std::size_t count_op(const std::vector<TimingType>& v, MemOpKind op) {
  std::size_t n = 0;
  for (const auto& t : v) n += t.op == op;
  return n;
}

Outcome taxonomy_counts() {
  Outcome o;
  o.require(enumerate_timing_types(true, true).size() == 66, "66 full-featured timing types");
  o.require(enumerate_timing_types(false, true).size() == 39, "39 timing types without L3");
  o.require(enumerate_timing_types(false, false).size() == 26, "26 timing types without L3 or flush");
  const auto full = enumerate_timing_types(true, true);
  for (auto op : {MemOpKind::Read, MemOpKind::Write, MemOpKind::Flush})
    o.require(count_op(full, op) == 22, fmt::format("22 {} types", to_string(op)));
  o.require(enumerate_states().size() == 17, "17 states");
  o.require(enumerate_triples().size() == 4913, "4913 triples");
  o.require(gen_configs().size() == 16, "16 configs per triple");
  std::set<std::string> labels;
  for (const auto& c : gen_configs()) labels.insert(c.label());
  o.require(labels.size() == 16, "distinct config labels");
  return o;
}

Outcome policy_oracles() {
  Outcome o;
  std::size_t runs = 0;
  for (auto kind : {PolicyKind::LRU, PolicyKind::FIFO, PolicyKind::TreePLRU})
    for (std::uint64_t sets : {1u, 2u, 4u})
      for (std::uint32_t ways : {1u, 2u, 4u})
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
          const auto bad = oracle::policy_mismatches(kind, sets, ways, seed, 10000);
          o.require(bad == 0, fmt::format("{} S={} N={} seed={}: {} mismatches", to_string(kind), sets, ways, seed, bad));
          ++runs;
        }
  o.detail = o.pass ? fmt::format("{} traces x 10000 ops", runs) : o.detail;
  return o;
}

Outcome coherence_soundness() {
  Outcome o;
  std::size_t ops = 0;
  for (auto kind : {CoherenceKind::DirectoryBased, CoherenceKind::Snooping})
    for (int cores : {2, 3, 4}) {
      const auto spec = oracle::tiny_spec(kind, cores, false, cores != 3, 1000 + static_cast<std::uint64_t>(cores));
      const auto r = oracle::coherence_fuzz(spec, 100000, 7 + static_cast<std::uint64_t>(cores));
      ops += r.ops;
      o.require(r.value_mismatches == 0 && r.invariant_failures == 0,
                fmt::format("{} cores={}: {}", to_string(kind), cores, r.first_failure));
    }
  o.detail = o.pass ? fmt::format("{} ops, zero violations", ops) : o.detail;
  return o;
}

Outcome classic_attacks() {
  Outcome o;
  const auto ref = shipped("reference");
  struct Attack {
    const char* name;
    const char* s1;
    const char* s2;
    const char* s3;
    const char* config;
  };
  const std::vector<Attack> attacks{{"Flush+Reload", "A_a_inv", "V_u", "A_a", "RF_RF_RF_TS"},
                                    {"Flush+Flush", "A_a_inv", "V_u", "A_a_inv", "RF_RF_RF_TS"},
                                    {"Prime+Probe", "A_a_alias", "V_u", "A_a_alias", "RF_RF_RF_SMT"},
                                    {"Evict+Time", "V_u", "A_a_alias", "V_u", "RF_RF_RF_SMT"}};
  const auto strong = strong_set(ref);
  const std::set<int> members(strong.begin(), strong.end());
  for (const auto& a : attacks) {
    const auto t = make_triple(parse_state(a.s1), parse_state(a.s2), parse_state(a.s3));
    const auto& config = gen_configs()[config_index(a.config)];
    o.require(classify(t, ref, config).distinguishable, fmt::format("{} not detected", a.name));
    o.require(members.count(t.id) == 1, fmt::format("{} missing from strong set", a.name));
  }
  o.detail = o.pass ? fmt::format("4/4 detected, strong set has {} triples", strong.size()) : o.detail;
  return o;
}

// Secret-free triples: the verdict must be negative, and executing the plan
// under each hypothesis must give identical step-3 latencies.
Outcome classification_soundness() {
  Outcome o;
  const auto ref = shipped("reference");
  std::size_t u_free = 0;
  for (const auto& t : enumerate_triples()) {
    if (t.references_secret()) continue;
    ++u_free;
    for (const auto& c : gen_configs()) {
      if (!validity(c, t, ref)) continue;
      o.require(!classify(t, ref, c).distinguishable, fmt::format("{} {} classified distinguishable", t.label(), c.label()));
      const auto plan = compile_plan(t, c, ref);
      std::vector<std::vector<std::int64_t>> probes;
      for (auto h : {Hypothesis::SecretIsA, Hypothesis::SecretCongruent, Hypothesis::SecretElsewhere}) {
        SimMachine m(ref, 0);
        probes.push_back(probe_latencies(execute_plan(plan, m, h), ref.latency, nullptr));
      }
      o.require(probes[0] == probes[1] && probes[1] == probes[2],
                fmt::format("{} {} probes depend on the secret", t.label(), c.label()));
    }
  }
  o.detail = o.pass ? fmt::format("{} secret-free triples, none distinguishable", u_free) : o.detail;
  return o;
}

std::int64_t mode_of(const TargetSpec& spec, MemOpKind op, TimingPlacement p) { return measure(spec, {op, p}, 20).mode(); }

Outcome latency_orderings() {
  Outcome o;
  for (const auto& name : kAllTargets) {
    auto spec = shipped(name);
    spec.latency.jitter = 0;
    const auto l1 = mode_of(spec, MemOpKind::Read, TimingPlacement::single(1, false, false));
    const auto l2 = mode_of(spec, MemOpKind::Read, TimingPlacement::single(2, false, false));
    const auto dram = mode_of(spec, MemOpKind::Read, TimingPlacement::dram());
    o.require(l1 < l2 && l2 < dram, name + ": read L1 < L2 < DRAM");

    if (spec.flush_user_mode) {
      std::int64_t dram_flush = mode_of(spec, MemOpKind::Flush, TimingPlacement::dram());
      for (const auto& tt : valid_timing_types(spec)) {
        if (tt.op != MemOpKind::Flush || tt.placement.kind == PlacementKind::Dram) continue;
        o.require(dram_flush < mode_of(spec, tt.op, tt.placement), name + ": DRAM flush minimum vs " + tt.name());
      }
      for (int level = 1; level <= spec.deepest_level(); ++level)
        for (bool remote : {false, true}) {
          const auto clean = mode_of(spec, MemOpKind::Flush, TimingPlacement::single(level, remote, false));
          const auto dirty = mode_of(spec, MemOpKind::Flush, TimingPlacement::single(level, remote, true));
          o.require(dirty > clean, fmt::format("{}: flush dirty > clean at L{}{}", name, level, remote ? " remote" : ""));
        }
    }
    if (spec.coherence == CoherenceKind::DirectoryBased)
      o.require(mode_of(spec, MemOpKind::Write, TimingPlacement::single(1, true, false)) ==
                    mode_of(spec, MemOpKind::Write, TimingPlacement::single(2, true, false)),
                name + ": remote write L1 == L2");
  }
  return o;
}

bool needs_flush(const VulnTriple& t, const TestConfig& c) {
  const std::array<StepState, 3> steps{t.s1(), t.s2(), t.s3()};
  for (std::size_t i = 0; i < 3; ++i)
    if (steps[i].action == StepAction::Invalidate && c.realization[i] == Realization::Natural) return true;
  return false;
}

Outcome validity_filtering() {
  Outcome o;
  std::size_t flush_invalid = 0;
  for (const auto& name : kBoards) {
    const auto spec = shipped(name);
    for (const auto& t : enumerate_triples())
      for (const auto& c : gen_configs()) {
        const bool smt = c.schedule == Schedule::SMT;
        const bool flush = needs_flush(t, c);
        const bool expected = !smt && !(flush && !spec.flush_user_mode);
        flush_invalid += flush && !smt && !expected;
        o.require(validity(c, t, spec) == expected, fmt::format("{}: {} {}", name, t.label(), c.label()));
      }
  }
  o.require(flush_invalid > 0, "no flush-based invalidity observed on u54/u74");
  o.detail = o.pass ? fmt::format("{} flush-invalid TS cells on u54+u74", flush_invalid) : o.detail;
  return o;
}

Outcome eviction_guarantees() {
  Outcome o;
  for (auto kind : {PolicyKind::LRU, PolicyKind::FIFO, PolicyKind::TreePLRU})
    for (std::uint64_t sets : {1u, 2u, 4u})
      for (std::uint32_t ways : {1u, 2u, 4u}) {
        const auto bad = oracle::exhaustive_eviction_failures(kind, sets, ways, ways == 4 ? 5 : 6);
        o.require(bad == 0, fmt::format("{} S={} N={}: {} surviving prefixes", to_string(kind), sets, ways, bad));
      }
  const auto spec = shipped("u54");
  int evicted = 0;
  const Addr target = Addr{1} << 24;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    SimMachine m(spec, seed);
    m.apply({MemOpKind::Read, 0, target});
    evicted += evict(m, 0, target, 1, default_eviction_params(m, 1)).evicted;
  }
  o.require(evicted >= 990, fmt::format("Random 8-way rate {}/1000", evicted));
  o.detail = o.pass ? fmt::format("exhaustive ok, Random 8-way {}/1000", evicted) : o.detail;
  return o;
}

Outcome scoring_fixtures() {
  Outcome o;
  const auto near = [](double a, double b) { return std::fabs(a - b) <= 0.001; };
  const double c = ctvs(fixtures::single_target_fixture()).value();
  o.require(near(c, 0.659), fmt::format("ctvs {:.4f}", c));
  const auto p = presence_classes(fixtures::cross_target_fixture());
  const double absent = static_cast<double>(p.absent_from_all.size()) / static_cast<double>(p.total);
  const double shared = static_cast<double>(p.shared_config.size()) / static_cast<double>(p.total);
  o.require(near(absent, 0.068), fmt::format("absent {:.4f}", absent));
  o.require(near(shared, 0.375), fmt::format("shared config {:.4f}", shared));
  o.detail = o.pass ? fmt::format("{:.3f} / {:.3f} / {:.3f}", c, absent, shared) : o.detail;
  return o;
}

std::map<std::string, std::string> snapshot(const cli_runner::fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : cli_runner::fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[cli_runner::fs::relative(e.path(), root).string()] = cli_runner::slurp(e.path());
  return files;
}

Outcome reproducibility() {
  using cli_runner::run;
  using cli_runner::target_arg;
  Outcome o;
  cli_runner::ScratchDir out;
  const std::string common = " --timestamp pinned --out " + out.arg();
  const std::string matrix = "'" + (out.path() / "reference" / "bench" / "pinned" / "matrix.csv").string() + "'";
  const std::vector<std::string> commands{
      "enumerate" + common,
      "timing-types --target " + target_arg("reference") + " --trials 500" + common,
      "bench --target " + target_arg("reference") + " --triples 5,100,2000,4912 --trials 100" + common,
      "report --matrices " + matrix + common,
      "strong-set --target " + target_arg("reference") + common,
      "sweep-eviction --target " + target_arg("reference") + " --level 1 --seeds 20" + common,
  };
  for (const auto& c : commands) o.require(run(c) == 0, "first run failed: " + c);
  const auto first = snapshot(out.path());
  for (const auto& c : commands) o.require(run(c) == 0, "second run failed: " + c);
  const auto second = snapshot(out.path());
  o.require(first.size() == second.size(), "file sets differ");
  for (const auto& [path, bytes] : first) {
    const auto it = second.find(path);
    o.require(it != second.end() && it->second == bytes, path + " differs");
  }
  o.detail = o.pass ? fmt::format("{} commands, {} files identical", commands.size(), first.size()) : o.detail;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"taxonomy counts", taxonomy_counts},
      {"policy oracle equivalence", policy_oracles},
      {"coherence soundness", coherence_soundness},
      {"classic attacks detected", classic_attacks},
      {"classification soundness", classification_soundness},
      {"latency-ordering invariants", latency_orderings},
      {"validity filtering", validity_filtering},
      {"eviction guarantees", eviction_guarantees},
      {"scoring fixtures", scoring_fixtures},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !r.pass;
    std::cout << fmt::format("[{}] criterion {}: {} ({}) [{:.1f}s]\n", r.pass ? "PASS" : "FAIL", i + 1,
                             criteria[i].first, r.detail.empty() ? "ok" : r.detail, secs)
              << std::flush;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
