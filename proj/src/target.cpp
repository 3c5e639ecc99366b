#include "ctvsim/target.hpp"

#include <fstream>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"

namespace ctvsim {

using nlohmann::json;

std::string_view to_string(CoherenceKind k) {
  return k == CoherenceKind::DirectoryBased ? "directory" : "snooping";
}

bool TargetSpec::has_level(int level) const {
  for (const auto& l : levels)
    if (l.level == level) return true;
  return false;
}

const LevelSpec& TargetSpec::level_spec(int level) const {
  for (const auto& l : levels)
    if (l.level == level) return l;
  throw ConfigError(fmt::format("{}: no L{} cache", name, level));
}

void TargetSpec::validate() const {
  if (name.empty()) throw ConfigError("name: must not be empty");
  if (cores < 1 || cores > 32) throw ConfigError("cores: must be in [1, 32]");
  if (levels.empty()) throw ConfigError("levels: at least an L1 is required");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    const auto where = fmt::format("levels[{}]", i);
    if (l.level != static_cast<int>(i) + 1)
      throw ConfigError(where + ".level: levels must be 1, 2, 3 in ascending order");
    if (l.level == 1 && l.shared) throw ConfigError(where + ".shared: L1 must be private");
    if (l.level > 1 && !l.shared)
      throw ConfigError(where + ".shared: only private L1 caches are supported");
    if (l.level == 1 && l.inclusive) throw ConfigError(where + ".inclusive: not meaningful for L1");
    l.geometry.validate(where);
    if (l.geometry.block_bytes != levels.front().geometry.block_bytes)
      throw ConfigError(where + ".block_bytes: must match the L1 block size");
  }
  if (levels.size() > 3) throw ConfigError("levels: at most three levels are supported");
  latency.validate(has_l3());
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(fmt::format("{}{}: missing", where, key));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}{}: wrong type", where, key));
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return required<T>(obj, key, where);
}

}  // namespace

TargetSpec load_spec(const json& doc) {
  if (!doc.is_object()) throw ConfigError("target document must be a JSON object");
  TargetSpec spec;
  spec.name = required<std::string>(doc, "name", "");
  spec.cores = required<int>(doc, "cores", "");
  spec.smt = required<bool>(doc, "smt", "");
  spec.flush_user_mode = required<bool>(doc, "flush_user_mode", "");
  const auto coherence = required<std::string>(doc, "coherence", "");
  if (coherence == "directory")
    spec.coherence = CoherenceKind::DirectoryBased;
  else if (coherence == "snooping")
    spec.coherence = CoherenceKind::Snooping;
  else
    throw ConfigError(fmt::format("coherence: unknown kind '{}'", coherence));
  spec.seed = required<std::uint64_t>(doc, "seed", "");

  const auto levels = required<json>(doc, "levels", "");
  if (!levels.is_array()) throw ConfigError("levels: must be an array");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto where = fmt::format("levels[{}].", i);
    const auto& lj = levels[i];
    LevelSpec l;
    l.level = required<int>(lj, "level", where);
    l.shared = required<bool>(lj, "shared", where);
    l.geometry.capacity_bytes = required<std::uint64_t>(lj, "capacity_bytes", where);
    l.geometry.block_bytes = required<std::uint64_t>(lj, "block_bytes", where);
    l.geometry.ways = required<std::uint32_t>(lj, "ways", where);
    try {
      l.policy = parse_policy(required<std::string>(lj, "policy", where));
    } catch (const ConfigError& e) {
      throw ConfigError(where + "policy: " + e.what());
    }
    l.policy_seed = optional_field<std::uint64_t>(lj, "policy_seed", 0, where);
    l.inclusive = optional_field<bool>(lj, "inclusive", false, where);
    spec.levels.push_back(l);
  }

  const auto lat = required<json>(doc, "latency", "");
  if (!lat.is_object()) throw ConfigError("latency: must be an object");
  for (auto c : kAllEventCategories)
    spec.latency.set(c, required<std::int64_t>(lat, std::string(to_string(c)).c_str(), "latency."));
  spec.latency.base_op_overhead = required<std::int64_t>(lat, "base_op_overhead", "latency.");
  for (const auto& [key, _] : lat.items())
    if (key != "base_op_overhead" && !parse_event_category(key))
      throw ConfigError(fmt::format("latency.{}: unknown event category", key));
  spec.latency.jitter = optional_field<std::int64_t>(doc, "jitter", 0, "");

  spec.validate();
  return spec;
}

TargetSpec load_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open target spec '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return load_spec(doc);
}

json serialize(const TargetSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["cores"] = spec.cores;
  doc["smt"] = spec.smt;
  doc["flush_user_mode"] = spec.flush_user_mode;
  doc["coherence"] = std::string(to_string(spec.coherence));
  doc["seed"] = spec.seed;
  json levels = json::array();
  for (const auto& l : spec.levels) {
    levels.push_back({{"level", l.level},
                      {"shared", l.shared},
                      {"capacity_bytes", l.geometry.capacity_bytes},
                      {"block_bytes", l.geometry.block_bytes},
                      {"ways", l.geometry.ways},
                      {"policy", std::string(to_string(l.policy))},
                      {"policy_seed", l.policy_seed},
                      {"inclusive", l.inclusive}});
  }
  doc["levels"] = levels;
  json lat;
  for (auto c : kAllEventCategories) lat[std::string(to_string(c))] = spec.latency.at(c);
  lat["base_op_overhead"] = spec.latency.base_op_overhead;
  doc["latency"] = lat;
  doc["jitter"] = spec.latency.jitter;
  return doc;
}

}  // namespace ctvsim
