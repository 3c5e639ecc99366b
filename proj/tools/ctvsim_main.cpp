// ctvsim command-line driver.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ctvsim/benchgen.hpp"
#include "ctvsim/classify.hpp"
#include "ctvsim/errors.hpp"
#include "ctvsim/eviction.hpp"
#include "ctvsim/parallel.hpp"
#include "ctvsim/scoring.hpp"
#include "ctvsim/target.hpp"
#include "ctvsim/three_step.hpp"
#include "ctvsim/timing.hpp"

namespace fs = std::filesystem;
using namespace ctvsim;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string timestamp;
  unsigned jobs = default_jobs();
};

std::string default_out_root() {
  if (const char* env = std::getenv("CTVSIM_OUT"); env && *env) return env;
  return "results";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

struct Run {
  fs::path dir;
  json manifest;
};

/// Creates <out>/<target>/<command>/<timestamp>/ and its manifest.
Run start_run(const Common& c, const std::string& command, const std::string& target_name, json extra) {
  const std::string stamp = c.timestamp.empty() ? utc_timestamp() : c.timestamp;
  const fs::path out = c.out.empty() ? default_out_root() : c.out;
  Run r;
  r.dir = out / target_name / command / stamp;
  fs::create_directories(r.dir);
  r.manifest = {{"command", command},
                {"target", target_name},
                {"seed", c.seed ? json(*c.seed) : json()},
                {"output_dir", r.dir.generic_string()},
                {"tool_version", kToolVersion},
                {"timestamp", stamp}};
  if (extra.is_object()) r.manifest.update(extra);
  std::ofstream(r.dir / "manifest.json") << r.manifest.dump(2) << '\n';
  return r;
}

std::ofstream open_out(const Run& r, const std::string& name) {
  std::ofstream f(r.dir / name);
  if (!f) throw InputError(fmt::format("cannot write {}", (r.dir / name).string()));
  return f;
}

void write_json(const Run& r, const std::string& name, json body) {
  body["manifest"] = r.manifest;
  open_out(r, name) << body.dump(2) << '\n';
}

std::ofstream open_csv(const Run& r, const std::string& name) {
  auto f = open_out(r, name);
  f << "# manifest: " << r.manifest.dump() << '\n';
  return f;
}

TargetSpec load_target(const std::string& path, const Common& c) {
  auto spec = load_spec_file(path);
  if (c.seed) spec.seed = *c.seed;
  return spec;
}

fs::path data_dir() { return CTVSIM_DATA_DIR; }

std::vector<int> reference_strong_ids() {
  const auto path = data_dir() / "data" / "reference_strong.json";
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read {}", path.string()));
  return json::parse(in).at("triples").get<std::vector<int>>();
}

std::vector<int> parse_triples(const std::string& arg) {
  if (arg == "reference-strong") return reference_strong_ids();
  std::vector<int> ids;
  if (arg == "all") {
    for (int i = 0; i < static_cast<int>(kTripleCount); ++i) ids.push_back(i);
    return ids;
  }
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int id = -1;
    try {
      id = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InputError(fmt::format("bad triple id '{}'", item));
    unrank_triple(id);
    ids.push_back(id);
  }
  if (ids.empty()) throw InputError("no triples selected");
  return ids;
}

std::string target_of_matrix(const fs::path& path, std::istream& in) {
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  constexpr std::string_view prefix = "# manifest: ";
  if (first.rfind(prefix, 0) == 0) {
    const auto m = json::parse(first.substr(prefix.size()), nullptr, false);
    if (m.is_object() && m.contains("target") && m["target"].is_string()) return m["target"];
  }
  return path.stem().string();
}

int cmd_enumerate(const Common& c) {
  const auto run = start_run(c, "enumerate", "taxonomy", json::object());
  {
    auto f = open_out(run, "states.jsonl");
    write_state_catalog(f);
  }
  {
    auto f = open_out(run, "triples.jsonl");
    write_triple_catalog(f);
  }
  fmt::print("{} states, {} triples -> {}\n", kStateCount, kTripleCount, run.dir.string());
  return 0;
}

int cmd_timing_types(const Common& c, const std::string& target, std::uint32_t trials) {
  const auto spec = load_target(target, c);
  const auto results = measure_all(spec, trials, c.jobs);
  const auto run = start_run(c, "timing-types", spec.name,
                             {{"target_path", target}, {"trials", trials}, {"seed", spec.seed}});
  {
    auto f = open_csv(run, "histograms.csv");
    write_histogram_csv(f, results);
  }
  write_json(run, "summary.json", {{"types", histogram_summary(results)}});
  fmt::print("{}: {} timing types -> {}\n", spec.name, results.size(), run.dir.string());
  return 0;
}

int cmd_bench(const Common& c, const std::string& target, const std::string& triples, std::uint32_t trials,
              std::int64_t delta_min) {
  const auto spec = load_target(target, c);
  const auto ids = parse_triples(triples);
  const auto m = run_benchmark(spec, ids, {trials, delta_min, c.jobs});
  const auto run = start_run(c, "bench", spec.name,
                             {{"target_path", target},
                              {"triples", triples},
                              {"trials", trials},
                              {"delta_min", delta_min},
                              {"seed", spec.seed}});
  {
    auto f = open_csv(run, "matrix.csv");
    write_matrix_csv(f, m);
  }
  write_json(run, "matrix.json", matrix_summary(m));
  const auto score = ctvs(m);
  fmt::print("{}: {} triples, CTVS {:.3f} ({}/{}) -> {}\n", spec.name, ids.size(), score.value(), score.hits,
             score.total, run.dir.string());
  return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& paths) {
  std::vector<DetectionMatrix> matrices;
  std::vector<std::string> names;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw InputError(fmt::format("cannot read matrix {}", p));
    const auto name = target_of_matrix(p, in);
    matrices.push_back(read_matrix_csv(in, name));
    names.push_back(name);
  }
  const auto report = score(matrices);
  std::string joined;
  for (const auto& n : names) joined += (joined.empty() ? "" : "+") + n;
  const auto run = start_run(c, "report", joined, {{"matrices", paths}});
  write_json(run, "report.json", to_json(report));
  {
    auto f = open_out(run, "report.txt");
    write_tables(f, report);
  }
  write_tables(std::cout, report);
  return 0;
}

int cmd_strong_set(const Common& c, const std::string& target, std::uint32_t trials) {
  const auto spec = load_target(target, c);
  const auto ids = strong_set(spec, {}, trials, c.jobs);
  const auto run = start_run(c, "strong-set", spec.name,
                             {{"target_path", target}, {"trials", trials}, {"seed", spec.seed}});
  write_json(run, "strong_set.json", {{"target", spec.name}, {"trials", trials}, {"count", ids.size()}, {"triples", ids}});
  fmt::print("{}: {} strong triples -> {}\n", spec.name, ids.size(), run.dir.string());
  return 0;
}

int cmd_sweep(const Common& c, const std::string& target, int level, std::uint32_t seeds) {
  const auto spec = load_target(target, c);
  if (!spec.has_level(level)) throw InputError(fmt::format("{}: no L{} cache", spec.name, level));
  std::uint32_t upstream = 0;
  for (int l = 1; l < level; ++l) upstream += spec.level_spec(l).geometry.ways;
  const auto grid = default_sweep_grid(spec.level_spec(level).geometry.ways, upstream);
  const auto rows = sweep_eviction(spec, level, grid, seeds);
  const auto run = start_run(c, "sweep-eviction", spec.name,
                             {{"target_path", target}, {"level", level}, {"seeds", seeds}, {"seed", spec.seed}});
  auto f = open_csv(run, "sweep.csv");
  f << "level,policy,params,eviction_rate,mean_cycles\n";
  for (const auto& r : rows)
    f << fmt::format("{},{},{},{:.4f},{:.2f}\n", r.level, to_string(r.policy), r.params.label(), r.eviction_rate,
                     r.mean_cycles);
  fmt::print("{} L{}: {} parameter sets -> {}\n", spec.name, level, rows.size(), run.dir.string());
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output root (default $CTVSIM_OUT or ./results)");
  sub->add_option("--seed", c.seed, "Override the target seed");
  sub->add_option("--timestamp", c.timestamp, "Pin the timestamp directory name");
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cache timing vulnerability simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  std::string target;
  std::uint32_t trials = 10000;
  std::uint32_t strong_trials = 100;
  std::int64_t delta_min = kDefaultDeltaMin;
  std::string triples = "reference-strong";
  std::vector<std::string> matrices;
  int level = 1;
  std::uint32_t seeds = 1000;

  auto* en = app.add_subcommand("enumerate", "Write the state and triple catalogs");
  add_common(en, common);

  auto* tt = app.add_subcommand("timing-types", "Latency histograms for every valid timing type");
  add_common(tt, common);
  tt->add_option("--target", target, "Target spec JSON")->required();
  tt->add_option("--trials", trials, "Trials per timing type")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Detection matrix for a set of triples");
  add_common(bench, common);
  bench->add_option("--target", target, "Target spec JSON")->required();
  bench->add_option("--triples", triples, "Comma-separated ids, 'reference-strong' or 'all'");
  bench->add_option("--trials", trials, "Trials per hypothesis (>= 100)");
  bench->add_option("--delta-min", delta_min, "Minimum mode gap in cycles");

  auto* report = app.add_subcommand("report", "Scores from detection matrices");
  add_common(report, common);
  report->add_option("--matrices", matrices, "matrix.csv files")->required()->expected(1, -1);

  auto* strong = app.add_subcommand("strong-set", "Triples detected under some valid configuration");
  add_common(strong, common);
  strong->add_option("--target", target, "Target spec JSON")->required();
  strong->add_option("--trials", strong_trials, "Trials per hypothesis")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep-eviction", "Eviction rate over the parameter grid");
  add_common(sweep, common);
  sweep->add_option("--target", target, "Target spec JSON")->required();
  sweep->add_option("--level", level, "Cache level")->check(CLI::Range(1, 3));
  sweep->add_option("--seeds", seeds, "Machines per parameter set")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*en) return cmd_enumerate(common);
    if (*tt) return cmd_timing_types(common, target, trials);
    if (*bench) return cmd_bench(common, target, triples, trials, delta_min);
    if (*report) return cmd_report(common, matrices);
    if (*strong) return cmd_strong_set(common, target, strong_trials);
    if (*sweep) return cmd_sweep(common, target, level, seeds);
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
