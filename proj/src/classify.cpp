#include "ctvsim/classify.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"
#include "ctvsim/parallel.hpp"
#include "ctvsim/rng.hpp"

namespace ctvsim {

namespace {

bool has_random_policy(const TargetSpec& t) {
  return std::any_of(t.levels.begin(), t.levels.end(),
                     [](const LevelSpec& l) { return l.policy == PolicyKind::Random; });
}

struct HypothesisStats {
  Histogram hist;
  bool touched_shared = false;
};

HypothesisStats run_hypothesis(const ExecutionPlan& plan, const TargetSpec& target, Hypothesis h,
                               std::uint32_t decoy, std::uint32_t trials) {
  HypothesisStats out;
  const auto jitter_seed = [&](std::uint32_t t) {
    return derive_seed(target.seed, {t, static_cast<std::uint64_t>(plan.triple_id),
                                     hash_string(plan.config.label()), static_cast<std::uint64_t>(h), decoy});
  };
  // Trial salts only perturb Random policies, so without one every trial
  // replays the same traces and only the jitter draws differ.
  if (!has_random_policy(target)) {
    SimMachine m(target, 0);
    const auto run = execute_plan(plan, m, h, decoy);
    out.touched_shared = run.shared_replacements > 0;
    if (target.latency.jitter == 0) {
      for (auto v : probe_latencies(run, target.latency, nullptr)) out.hist.add(v, trials);
      return out;
    }
    for (std::uint32_t t = 0; t < trials; ++t) {
      std::mt19937_64 rng(jitter_seed(t));
      for (auto v : probe_latencies(run, target.latency, &rng)) out.hist.add(v);
    }
    return out;
  }
  for (std::uint32_t t = 0; t < trials; ++t) {
    SimMachine m(target, t);
    const auto run = execute_plan(plan, m, h, decoy);
    out.touched_shared = out.touched_shared || run.shared_replacements > 0;
    std::mt19937_64 rng(jitter_seed(t));
    for (auto v : probe_latencies(run, target.latency, &rng)) out.hist.add(v);
  }
  return out;
}

std::int64_t mode_gap(const Histogram& a, const Histogram& b) {
  return a.mode() > b.mode() ? a.mode() - b.mode() : b.mode() - a.mode();
}

DetectionCell evaluate_cell(const VulnTriple& triple, const TargetSpec& target, const TestConfig& config,
                            const ClassifyOptions& options) {
  DetectionCell cell;
  if (!validity(config, triple, target)) {
    cell.status = CellStatus::InvalidConfig;
    return cell;
  }
  if (!triple.references_secret()) {
    cell.reason = "secret-independent";
    return cell;
  }
  try {
    const auto v = classify(triple, target, config, options);
    cell.status = v.distinguishable ? CellStatus::Detected : CellStatus::NotDetected;
    cell.delta = v.delta;
    cell.mode_a = v.stats_a.mode();
    cell.mode_b = v.stats_b.mode();
    cell.touched_shared_replacement = v.touched_shared_replacement;
  } catch (const PlanError& e) {
    cell.reason = e.what();
  }
  return cell;
}

}  // namespace

Verdict classify(const VulnTriple& triple, const TargetSpec& target, const TestConfig& config,
                 const ClassifyOptions& options) {
  if (!validity(config, triple, target))
    throw FeatureUnavailable(fmt::format("{}: configuration {} is not valid for triple {}", target.name,
                                         config.label(), triple.id));
  if (options.trials < 1) throw InputError("classify needs at least one trial");
  Verdict v;
  if (!triple.references_secret()) return v;

  const auto plan = compile_plan(triple, config, target);
  const auto b = run_hypothesis(plan, target, Hypothesis::SecretElsewhere, options.decoy, options.trials);
  auto a = run_hypothesis(plan, target, Hypothesis::SecretIsA, 0, options.trials);
  bool fired = decide_detection(a.hist, b.hist, options.delta_min);
  bool touched = a.touched_shared || b.touched_shared;
  if (!fired) {
    auto alt = run_hypothesis(plan, target, Hypothesis::SecretCongruent, 0, options.trials);
    touched = touched || alt.touched_shared;
    if (decide_detection(alt.hist, b.hist, options.delta_min)) {
      fired = true;
      a = std::move(alt);
    }
  }
  v.distinguishable = fired;
  v.delta = mode_gap(a.hist, b.hist);
  v.stats_a = std::move(a.hist);
  v.stats_b = b.hist;
  v.touched_shared_replacement = touched;
  return v;
}

DetectionMatrix run_benchmark(const TargetSpec& target, const std::vector<int>& triples,
                              const BenchOptions& options) {
  if (options.trials < 100)
    throw InputError(fmt::format("run_benchmark needs at least 100 trials, got {}", options.trials));
  std::vector<VulnTriple> resolved;
  resolved.reserve(triples.size());
  for (int id : triples) resolved.push_back(unrank_triple(id));

  const auto& configs = gen_configs();
  std::vector<DetectionCell> cells(resolved.size() * configs.size());
  const ClassifyOptions copts{options.trials, options.delta_min, 0};
  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    cells[i] = evaluate_cell(resolved[i / configs.size()], target, configs[i % configs.size()], copts);
  });

  DetectionMatrix m;
  m.target = target.name;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const int id = resolved[i / configs.size()].id;
    if (i % configs.size() == 0) {
      if (std::find(m.triples.begin(), m.triples.end(), id) != m.triples.end())
        throw InputError(fmt::format("triple {} listed twice", id));
      m.triples.push_back(id);
    }
    m.cells.emplace(std::pair{id, i % configs.size()}, std::move(cells[i]));
  }
  return m;
}

std::vector<int> strong_set(const TargetSpec& target, const std::vector<TestConfig>& configs,
                            std::uint32_t trials, unsigned jobs) {
  const auto& use = configs.empty() ? gen_configs() : configs;
  std::vector<VulnTriple> candidates;
  for (const auto& t : enumerate_triples())
    if (t.references_secret()) candidates.push_back(t);

  std::vector<char> strong(candidates.size(), 0);
  const ClassifyOptions copts{trials, kDefaultDeltaMin, 0};
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    for (const auto& c : use)
      if (evaluate_cell(candidates[i], target, c, copts).status == CellStatus::Detected) {
        strong[i] = 1;
        return;
      }
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (strong[i]) out.push_back(candidates[i].id);
  return out;
}

}  // namespace ctvsim
