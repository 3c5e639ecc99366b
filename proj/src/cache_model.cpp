#include "ctvsim/cache_model.hpp"

#include <bit>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"
#include "ctvsim/rng.hpp"

namespace ctvsim {

namespace {

bool is_pow2(std::uint64_t v) { return v != 0 && std::has_single_bit(v); }

const BlockLine kInvalidLine{};

}  // namespace

void CacheGeometry::validate(std::string_view where) const {
  if (!is_pow2(capacity_bytes))
    throw ConfigError(fmt::format("{}.capacity_bytes: must be a power of two", where));
  if (!is_pow2(block_bytes))
    throw ConfigError(fmt::format("{}.block_bytes: must be a power of two", where));
  if (!is_pow2(ways)) throw ConfigError(fmt::format("{}.ways: must be a power of two", where));
  if (block_bytes > capacity_bytes)
    throw ConfigError(fmt::format("{}.block_bytes: larger than capacity", where));
  if (ways > blocks())
    throw ConfigError(fmt::format("{}.ways: exceeds the number of blocks", where));
}

std::uint64_t set_index(Addr addr, const CacheGeometry& g) {
  return (addr / g.block_bytes) % g.sets();
}

std::uint64_t tag_of(Addr addr, const CacheGeometry& g) {
  return (addr / g.block_bytes) / g.sets();
}

Addr block_address(Addr addr, const CacheGeometry& g) {
  return addr - addr % g.block_bytes;
}

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::LRU: return "lru";
    case PolicyKind::TreePLRU: return "tree_plru";
    case PolicyKind::FIFO: return "fifo";
    case PolicyKind::Random: return "random";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view s) {
  if (s == "lru") return PolicyKind::LRU;
  if (s == "tree_plru" || s == "plru") return PolicyKind::TreePLRU;
  if (s == "fifo") return PolicyKind::FIFO;
  if (s == "random") return PolicyKind::Random;
  throw ConfigError(fmt::format("unknown replacement policy '{}'", s));
}

char to_char(CoherenceState s) {
  switch (s) {
    case CoherenceState::M: return 'M';
    case CoherenceState::O: return 'O';
    case CoherenceState::E: return 'E';
    case CoherenceState::S: return 'S';
    case CoherenceState::I: return 'I';
  }
  return '?';
}

CacheLevel::CacheLevel(CacheGeometry geometry, ReplacementPolicy policy, int level, bool shared,
                       bool inclusive)
    : geometry_(geometry), policy_(policy), level_(level), shared_(shared), inclusive_(inclusive) {
  geometry_.validate(fmt::format("L{}", level));
}

Addr CacheLevel::address_of(std::uint64_t set, std::uint64_t tag) const {
  return (tag * geometry_.sets() + set) * geometry_.block_bytes;
}

const CacheLevel::SetData* CacheLevel::find_set(std::uint64_t set) const {
  auto it = sets_.find(set);
  return it == sets_.end() ? nullptr : &it->second;
}

CacheLevel::SetData& CacheLevel::materialise(std::uint64_t set) {
  auto [it, inserted] = sets_.try_emplace(set);
  if (inserted) {
    it->second.lines.resize(geometry_.ways);
    if (policy_.kind == PolicyKind::TreePLRU) it->second.tree.assign(geometry_.ways - 1, 0);
  }
  return it->second;
}

std::optional<std::uint32_t> CacheLevel::lookup(Addr addr) const {
  const SetData* s = find_set(set_index(addr));
  if (!s) return std::nullopt;
  const auto t = tag(addr);
  for (std::uint32_t w = 0; w < s->lines.size(); ++w)
    if (s->lines[w].valid && s->lines[w].tag == t) return w;
  return std::nullopt;
}

const BlockLine& CacheLevel::line(std::uint64_t set, std::uint32_t way) const {
  const SetData* s = find_set(set);
  return s ? s->lines.at(way) : kInvalidLine;
}

const BlockLine& CacheLevel::line_for(Addr addr) const {
  auto way = lookup(addr);
  if (!way) throw InvariantViolation(fmt::format("L{}: line_for on absent {:#x}", level_, addr));
  return line(set_index(addr), *way);
}

std::optional<std::uint32_t> CacheLevel::free_way(std::uint64_t set) const {
  const SetData* s = find_set(set);
  if (!s) return 0;
  for (std::uint32_t w = 0; w < s->lines.size(); ++w)
    if (!s->lines[w].valid) return w;
  return std::nullopt;
}

std::uint32_t CacheLevel::choose_victim(std::uint64_t set) {
  SetData& s = materialise(set);
  ++replacements_;
  const std::uint32_t n = geometry_.ways;
  switch (policy_.kind) {
    case PolicyKind::LRU:
    case PolicyKind::FIFO: {
      std::uint32_t victim = 0;
      for (std::uint32_t w = 1; w < n; ++w)
        if (s.lines[w].stamp < s.lines[victim].stamp) victim = w;
      return victim;
    }
    case PolicyKind::TreePLRU: {
      std::uint32_t node = 0;
      while (node < n - 1) node = 2 * node + 1 + s.tree[node];
      return node - (n - 1);
    }
    case PolicyKind::Random:
      return static_cast<std::uint32_t>(mix64(policy_.seed ^ mix64(random_draws_++)) % n);
  }
  return 0;
}

void CacheLevel::on_access(SetData& s, std::uint32_t way, bool inserted) {
  switch (policy_.kind) {
    case PolicyKind::LRU: s.lines[way].stamp = ++clock_; break;
    case PolicyKind::FIFO:
      if (inserted) s.lines[way].stamp = ++clock_;
      break;
    case PolicyKind::TreePLRU: {
      std::uint32_t node = way + geometry_.ways - 1;
      while (node > 0) {
        const std::uint32_t parent = (node - 1) / 2;
        // point the parent away from the subtree just used
        s.tree[parent] = (node == 2 * parent + 1) ? 1 : 0;
        node = parent;
      }
      break;
    }
    case PolicyKind::Random: break;
  }
}

void CacheLevel::fill(std::uint64_t set, std::uint32_t way, std::uint64_t tag,
                      CoherenceState state, std::uint64_t value, std::uint32_t affinity) {
  SetData& s = materialise(set);
  BlockLine& l = s.lines.at(way);
  if (l.valid)
    throw InvariantViolation(fmt::format("L{}: fill into occupied way {} of set {}", level_, way, set));
  if (state == CoherenceState::I)
    throw InvariantViolation(fmt::format("L{}: fill with state I", level_));
  l.valid = true;
  l.tag = tag;
  l.state = state;
  l.dirty = state == CoherenceState::M || state == CoherenceState::O;
  l.value = value;
  l.affinity = affinity;
  on_access(s, way, true);
}

std::optional<EvictedLine> CacheLevel::evict(std::uint64_t set, std::uint32_t way) {
  auto it = sets_.find(set);
  if (it == sets_.end()) return std::nullopt;
  BlockLine& l = it->second.lines.at(way);
  if (!l.valid) return std::nullopt;
  EvictedLine out{address_of(set, l.tag), l.dirty, l.state, l.value, l.affinity};
  l = BlockLine{};
  return out;
}

void CacheLevel::touch(std::uint64_t set, std::uint32_t way) {
  on_access(materialise(set), way, false);
}

void CacheLevel::mark_dirty(std::uint64_t set, std::uint32_t way, CoherenceState state) {
  if (state != CoherenceState::M && state != CoherenceState::O)
    throw InvariantViolation("mark_dirty requires M or O");
  BlockLine& l = materialise(set).lines.at(way);
  if (!l.valid) throw InvariantViolation("mark_dirty on invalid line");
  l.dirty = true;
  l.state = state;
}

void CacheLevel::set_state(std::uint64_t set, std::uint32_t way, CoherenceState state) {
  BlockLine& l = materialise(set).lines.at(way);
  if (!l.valid) throw InvariantViolation("set_state on invalid line");
  if (state == CoherenceState::I) {
    l = BlockLine{};
    return;
  }
  l.state = state;
  l.dirty = state == CoherenceState::M || state == CoherenceState::O;
}

void CacheLevel::set_value(std::uint64_t set, std::uint32_t way, std::uint64_t value) {
  materialise(set).lines.at(way).value = value;
}

void CacheLevel::add_affinity(std::uint64_t set, std::uint32_t way, std::uint32_t bits) {
  materialise(set).lines.at(way).affinity |= bits;
}

InsertResult CacheLevel::insert(Addr addr, CoherenceState state, std::uint64_t value,
                                std::uint32_t affinity) {
  const auto set = set_index(addr);
  InsertResult r;
  if (auto w = free_way(set)) {
    r.way = *w;
  } else {
    r.way = choose_victim(set);
    r.evicted = evict(set, r.way);
  }
  fill(set, r.way, tag(addr), state, value, affinity);
  return r;
}

std::vector<EvictedLine> CacheLevel::valid_lines(std::uint64_t set) const {
  std::vector<EvictedLine> out;
  if (const SetData* s = find_set(set))
    for (const auto& l : s->lines)
      if (l.valid) out.push_back({address_of(set, l.tag), l.dirty, l.state, l.value, l.affinity});
  return out;
}

void CacheLevel::check_invariants() const {
  for (const auto& [set, data] : sets_) {
    if (data.lines.size() != geometry_.ways)
      throw InvariantViolation(fmt::format("L{} set {}: wrong way count", level_, set));
    for (std::uint32_t w = 0; w < data.lines.size(); ++w) {
      const auto& l = data.lines[w];
      if (l.valid != (l.state != CoherenceState::I))
        throw InvariantViolation(fmt::format("L{} set {} way {}: valid/state mismatch", level_, set, w));
      if (l.dirty && l.state != CoherenceState::M && l.state != CoherenceState::O)
        throw InvariantViolation(fmt::format("L{} set {} way {}: dirty in state {}", level_, set, w,
                                             to_char(l.state)));
      if (!l.valid) continue;
      for (std::uint32_t v = w + 1; v < data.lines.size(); ++v)
        if (data.lines[v].valid && data.lines[v].tag == l.tag)
          throw InvariantViolation(fmt::format("L{} set {}: duplicate tag {:#x}", level_, set, l.tag));
    }
  }
}

}  // namespace ctvsim
