#include "ctvsim/machine.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "ctvsim/errors.hpp"
#include "ctvsim/rng.hpp"

namespace ctvsim {

namespace {

std::uint32_t bit(int core) { return 1u << static_cast<unsigned>(core); }

bool exclusive_like(CoherenceState s) {
  return s == CoherenceState::M || s == CoherenceState::E;
}

bool owns_data(CoherenceState s) {
  return s == CoherenceState::M || s == CoherenceState::O || s == CoherenceState::E;
}

EventCategory hit_category(int level) {
  switch (level) {
    case 1: return EventCategory::L1Hit;
    case 2: return EventCategory::L2Hit;
    default: return EventCategory::L3Hit;
  }
}

}  // namespace

std::string_view to_string(MemOpKind k) {
  switch (k) {
    case MemOpKind::Read: return "read";
    case MemOpKind::Write: return "write";
    case MemOpKind::Flush: return "flush";
  }
  return "?";
}

bool Placement::cached_anywhere() const {
  return std::any_of(l1.begin(), l1.end(), [](const Copy& c) { return c.present; }) ||
         std::any_of(shared.begin(), shared.end(), [](const SharedCopy& c) { return c.present; });
}

bool Placement::in_level(int level) const {
  if (level == 1)
    return std::any_of(l1.begin(), l1.end(), [](const Copy& c) { return c.present; });
  for (const auto& s : shared)
    if (s.level == level) return s.present;
  return false;
}

bool Placement::in_any_l1_except(int core) const {
  for (std::size_t c = 0; c < l1.size(); ++c)
    if (static_cast<int>(c) != core && l1[c].present) return true;
  return false;
}

SimMachine::SimMachine(TargetSpec spec, std::uint64_t salt) : spec_(std::move(spec)) {
  const auto& l1 = spec_.l1();
  for (int c = 0; c < spec_.cores; ++c) {
    ReplacementPolicy p{l1.policy, derive_seed(l1.policy_seed, {spec_.seed, salt, 1, std::uint64_t(c)})};
    l1_.emplace_back(l1.geometry, p, 1, false, false);
  }
  for (const auto& l : spec_.levels) {
    if (l.level == 1) continue;
    ReplacementPolicy p{l.policy, derive_seed(l.policy_seed, {spec_.seed, salt, std::uint64_t(l.level)})};
    shared_.emplace_back(l.geometry, p, l.level, true, l.inclusive);
  }
}

SimMachine build_machine(const TargetSpec& spec, std::uint64_t salt) { return SimMachine(spec, salt); }

const CacheLevel* SimMachine::shared_level(int level) const {
  const auto idx = static_cast<std::size_t>(level - 2);
  return (level >= 2 && idx < shared_.size()) ? &shared_[idx] : nullptr;
}

const CacheGeometry& SimMachine::geometry(int level) const {
  if (level == 1) return l1_.front().geometry();
  if (const auto* l = shared_level(level)) return l->geometry();
  throw InvalidTimingType(fmt::format("{}: no L{} cache", spec_.name, level));
}

bool SimMachine::present(int core, Addr addr, int level) const {
  if (level == 1) return l1(core).contains(addr);
  const auto* l = shared_level(level);
  return l && l->contains(addr);
}

std::uint64_t SimMachine::memory_value(Addr addr) const {
  auto it = memory_.find(block(addr));
  return it == memory_.end() ? 0 : it->second;
}

std::uint64_t SimMachine::shared_replacements(int level) const {
  const auto* l = shared_level(level);
  return l ? l->replacements() : 0;
}

std::optional<SimMachine::DirectoryEntry> SimMachine::directory_entry(Addr addr) const {
  auto it = directory_.find(block(addr));
  if (it == directory_.end()) return std::nullopt;
  return it->second;
}

EventTrace SimMachine::apply(const MemOp& op) {
  if (op.core < 0 || op.core >= spec_.cores)
    throw InputError(fmt::format("core {} out of range on {}", op.core, spec_.name));
  switch (op.kind) {
    case MemOpKind::Read: return read(op.core, block(op.addr));
    case MemOpKind::Write: return write(op.core, block(op.addr), op.value);
    case MemOpKind::Flush: return flush(op.core, block(op.addr));
  }
  return {};
}

EventTrace SimMachine::remote_invalidate_via_write(int core, Addr addr) {
  addr = block(addr);
  // Rewrite the current value so the data seen by everyone is unchanged.
  std::uint64_t value = memory_value(addr);
  bool found = false;
  for (const auto& l : l1_)
    if (l.contains(addr)) {
      value = l.line_for(addr).value;
      found = true;
      break;
    }
  if (!found)
    for (const auto& l : shared_)
      if (l.contains(addr)) {
        value = l.line_for(addr).value;
        break;
      }
  return apply({MemOpKind::Write, core, addr, value});
}

std::vector<SimMachine::Holder> SimMachine::remote_holders(int core, Addr addr) const {
  std::vector<Holder> out;
  for (int k = 0; k < spec_.cores; ++k) {
    if (k == core) continue;
    if (auto w = l1_[static_cast<std::size_t>(k)].lookup(addr))
      out.push_back({k, *w, l1_[static_cast<std::size_t>(k)].line(l1_[0].set_index(addr), *w).state});
  }
  return out;
}

int SimMachine::shared_hit(Addr addr) const {
  for (const auto& l : shared_)
    if (l.contains(addr)) return l.level();
  return 0;
}

void SimMachine::directory_note(int core, Addr addr, CoherenceState state) {
  if (!directory()) return;
  if (state == CoherenceState::I) {
    auto it = directory_.find(addr);
    if (it == directory_.end()) return;
    it->second.sharers &= ~bit(core);
    if (it->second.owner == core) it->second.owner = -1;
    if (it->second.sharers == 0) directory_.erase(it);
    return;
  }
  auto& e = directory_[addr];
  e.sharers |= bit(core);
  if (exclusive_like(state))
    e.owner = core;
  else if (e.owner == core)
    e.owner = -1;
}

void SimMachine::set_l1_state(int core, std::uint32_t way, Addr addr, CoherenceState state) {
  auto& l = l1_[static_cast<std::size_t>(core)];
  l.set_state(l.set_index(addr), way, state);
  directory_note(core, addr, state);
}

void SimMachine::fill_l1(int core, Addr addr, CoherenceState state, std::uint64_t value,
                         EventTrace& tr) {
  // Inclusive levels must hold the block before any private copy exists.
  for (std::size_t idx = shared_.size(); idx-- > 0;)
    if (shared_[idx].inclusive() && !shared_[idx].contains(addr))
      install_shared(idx, addr, false, value, bit(core), tr);
  auto r = l1_[static_cast<std::size_t>(core)].insert(addr, state, value);
  directory_note(core, addr, state);
  if (r.evicted) on_l1_evicted(core, *r.evicted, tr);
}

void SimMachine::on_l1_evicted(int core, const EvictedLine& line, EventTrace& tr) {
  directory_note(core, line.addr, CoherenceState::I);
  if (line.dirty) tr.push(EventCategory::Writeback, 1, false, line.addr);
  if (!shared_.empty()) {
    // Victim-cache behaviour: clean lines are installed too.
    install_shared(0, line.addr, line.dirty, line.value, bit(core), tr);
  } else if (line.dirty) {
    memory_[line.addr] = line.value;
  }
}

void SimMachine::install_shared(std::size_t idx, Addr addr, bool dirty, std::uint64_t value,
                                std::uint32_t affinity, EventTrace& tr) {
  auto& lvl = shared_[idx];
  const auto set = lvl.set_index(addr);
  if (auto w = lvl.lookup(addr)) {
    lvl.touch(set, *w);
    if (dirty) {
      lvl.mark_dirty(set, *w, CoherenceState::M);
      lvl.set_value(set, *w, value);
    }
    lvl.add_affinity(set, *w, affinity);
    return;
  }
  auto r = lvl.insert(addr, dirty ? CoherenceState::M : CoherenceState::E, value, affinity);
  if (r.evicted) on_shared_evicted(idx, *r.evicted, tr);
}

void SimMachine::on_shared_evicted(std::size_t idx, EvictedLine line, EventTrace& tr) {
  if (shared_[idx].inclusive()) {
    // Back-invalidate everything above; the most recent dirty data wins.
    for (int k = 0; k < spec_.cores; ++k) {
      auto& l = l1_[static_cast<std::size_t>(k)];
      if (auto w = l.lookup(line.addr)) {
        auto gone = l.evict(l.set_index(line.addr), *w);
        directory_note(k, line.addr, CoherenceState::I);
        if (gone && gone->dirty) {
          line.dirty = true;
          line.value = gone->value;
        }
      }
    }
    for (std::size_t up = 0; up < idx; ++up) {
      auto& l = shared_[up];
      if (auto w = l.lookup(line.addr)) {
        auto gone = l.evict(l.set_index(line.addr), *w);
        if (gone && gone->dirty && !line.dirty) {
          line.dirty = true;
          line.value = gone->value;
        }
      }
    }
  }
  const int level = shared_[idx].level();
  if (line.dirty) tr.push(EventCategory::Writeback, level, false, line.addr);
  if (idx + 1 < shared_.size())
    install_shared(idx + 1, line.addr, line.dirty, line.value, line.affinity, tr);
  else if (line.dirty)
    memory_[line.addr] = line.value;
}

void SimMachine::drop_stale_shared_copies(Addr addr) {
  for (auto& l : shared_) {
    auto w = l.lookup(addr);
    if (!w) continue;
    if (l.inclusive())
      l.set_state(l.set_index(addr), *w, CoherenceState::E);
    else
      l.evict(l.set_index(addr), *w);
  }
}

EventTrace SimMachine::read(int core, Addr addr) {
  EventTrace tr;
  auto& local = l1_[static_cast<std::size_t>(core)];
  const auto set = local.set_index(addr);
  if (auto w = local.lookup(addr)) {
    local.touch(set, *w);
    tr.push(EventCategory::L1Hit, 1, false, addr);
    tr.value = local.line(set, *w).value;
    return tr;
  }

  if (directory())
    tr.push(EventCategory::DirectoryLookup, 0, false, addr);
  else if (spec_.cores > 1)
    tr.push(EventCategory::RemoteSnoop, 1, true, addr);

  const auto holders = remote_holders(core, addr);
  CoherenceState state = CoherenceState::E;
  std::uint64_t value = 0;
  if (!holders.empty()) {
    value = l1_[static_cast<std::size_t>(holders.front().core)].line(set, holders.front().way).value;
    const bool supplier = std::any_of(holders.begin(), holders.end(),
                                      [](const Holder& h) { return owns_data(h.state); });
    for (const auto& h : holders) {
      if (directory()) {
        // MESI: a modified owner writes back and keeps a shared copy.
        if (h.state == CoherenceState::M) {
          tr.push(EventCategory::Writeback, 1, true, addr);
          if (!shared_.empty())
            install_shared(0, addr, true, value, bit(h.core), tr);
          else
            memory_[addr] = value;
        }
        if (h.state != CoherenceState::S) set_l1_state(h.core, h.way, addr, CoherenceState::S);
      } else {
        // MOESI: a modified owner keeps ownership of the dirty data.
        if (h.state == CoherenceState::M) set_l1_state(h.core, h.way, addr, CoherenceState::O);
        if (h.state == CoherenceState::E) set_l1_state(h.core, h.way, addr, CoherenceState::S);
      }
    }
    if (directory() && !supplier && shared_hit(addr) != 0)
      tr.push(hit_category(shared_hit(addr)), shared_hit(addr), false, addr);
    else
      tr.push(EventCategory::CacheToCacheTransfer, 1, true, addr);
    state = CoherenceState::S;
  } else if (int lvl = shared_hit(addr)) {
    auto& sl = shared_[static_cast<std::size_t>(lvl - 2)];
    const auto w = *sl.lookup(addr);
    sl.touch(sl.set_index(addr), w);
    value = sl.line(sl.set_index(addr), w).value;
    tr.push(hit_category(lvl), lvl, false, addr);
  } else {
    value = memory_value(addr);
    tr.push(EventCategory::DramFetch, 0, false, addr);
  }
  fill_l1(core, addr, state, value, tr);
  tr.value = value;
  return tr;
}

EventTrace SimMachine::write(int core, Addr addr, std::uint64_t value) {
  EventTrace tr;
  tr.value = value;
  auto& local = l1_[static_cast<std::size_t>(core)];
  const auto set = local.set_index(addr);
  if (auto w = local.lookup(addr)) {
    tr.push(EventCategory::L1Hit, 1, false, addr);
    const auto st = local.line(set, *w).state;
    if (st == CoherenceState::S || st == CoherenceState::O) {
      if (directory())
        tr.push(EventCategory::DirectoryLookup, 0, false, addr);
      else if (spec_.cores > 1)
        tr.push(EventCategory::RemoteSnoop, 1, true, addr);
      const auto holders = remote_holders(core, addr);
      if (!holders.empty()) tr.push(EventCategory::InvalidationBroadcast, 1, true, addr);
      for (const auto& h : holders) set_l1_state(h.core, h.way, addr, CoherenceState::I);
    }
    set_l1_state(core, *w, addr, CoherenceState::M);
    local.set_value(set, *w, value);
    local.touch(set, *w);
    drop_stale_shared_copies(addr);
    return tr;
  }

  if (directory())
    tr.push(EventCategory::DirectoryLookup, 0, false, addr);
  else if (spec_.cores > 1)
    tr.push(EventCategory::RemoteSnoop, 1, true, addr);

  const auto holders = remote_holders(core, addr);
  if (!holders.empty()) {
    tr.push(EventCategory::InvalidationBroadcast, 1, true, addr);
    const bool supplier = std::any_of(holders.begin(), holders.end(),
                                      [](const Holder& h) { return owns_data(h.state); });
    const int lvl = shared_hit(addr);
    if (!supplier && lvl != 0)
      tr.push(hit_category(lvl), lvl, false, addr);
    else
      tr.push(EventCategory::CacheToCacheTransfer, 1, true, addr);
    // Ownership (and any dirty data) moves to the writer: no writeback.
    for (const auto& h : holders) set_l1_state(h.core, h.way, addr, CoherenceState::I);
  } else if (int lvl = shared_hit(addr)) {
    auto& sl = shared_[static_cast<std::size_t>(lvl - 2)];
    sl.touch(sl.set_index(addr), *sl.lookup(addr));
    tr.push(hit_category(lvl), lvl, false, addr);
  } else {
    tr.push(EventCategory::DramFetch, 0, false, addr);
  }
  drop_stale_shared_copies(addr);
  fill_l1(core, addr, CoherenceState::M, value, tr);
  return tr;
}

EventTrace SimMachine::flush(int core, Addr addr) {
  if (!spec_.flush_user_mode)
    throw FeatureUnavailable(fmt::format("{}: flush is not available in user mode", spec_.name));
  EventTrace tr;
  tr.push(EventCategory::FlushLine, 0, false, addr);
  for (int k = 0; k < spec_.cores; ++k) {
    auto& l = l1_[static_cast<std::size_t>(k)];
    auto w = l.lookup(addr);
    if (!w) continue;
    const bool remote = k != core;
    if (remote)
      tr.push(directory() ? EventCategory::InvalidationBroadcast : EventCategory::RemoteSnoop, 1,
              true, addr);
    auto gone = l.evict(l.set_index(addr), *w);
    directory_note(k, addr, CoherenceState::I);
    if (gone->dirty) {
      tr.push(EventCategory::Writeback, 1, remote, addr);
      memory_[addr] = gone->value;
    }
    tr.push(EventCategory::FlushLine, 1, remote, addr);
  }
  for (auto& l : shared_) {
    auto w = l.lookup(addr);
    if (!w) continue;
    auto gone = l.evict(l.set_index(addr), *w);
    if (gone->dirty) {
      tr.push(EventCategory::Writeback, l.level(), false, addr);
      memory_[addr] = gone->value;
    }
    tr.push(EventCategory::FlushLine, l.level(), false, addr);
  }
  return tr;
}

Placement SimMachine::snapshot_placement(Addr addr) const {
  addr = block(addr);
  Placement p;
  for (const auto& l : l1_) {
    Placement::Copy c;
    if (auto w = l.lookup(addr)) {
      c.present = true;
      c.dirty = l.line(l.set_index(addr), *w).dirty;
    }
    p.l1.push_back(c);
  }
  for (const auto& l : shared_) {
    Placement::SharedCopy c;
    c.level = l.level();
    if (auto w = l.lookup(addr)) {
      const auto& line = l.line(l.set_index(addr), *w);
      c.present = true;
      c.dirty = line.dirty;
      c.affinity = line.affinity;
    }
    p.shared.push_back(c);
  }
  return p;
}

void SimMachine::check_invariants() const {
  for (const auto& l : l1_) l.check_invariants();
  for (const auto& l : shared_) l.check_invariants();

  struct Copies {
    std::vector<std::pair<int, CoherenceState>> l1;
    int dirty = 0;
  };
  std::unordered_map<Addr, Copies> blocks;
  for (int k = 0; k < spec_.cores; ++k)
    l1_[static_cast<std::size_t>(k)].for_each_valid(
        [&](std::uint64_t set, std::uint32_t, const BlockLine& line) {
          auto& c = blocks[l1_[0].address_of(set, line.tag)];
          c.l1.emplace_back(k, line.state);
          if (line.dirty) ++c.dirty;
        });
  for (const auto& l : shared_)
    l.for_each_valid([&](std::uint64_t set, std::uint32_t, const BlockLine& line) {
      if (line.dirty) ++blocks[l.address_of(set, line.tag)].dirty;
    });

  for (const auto& [addr, c] : blocks) {
    int exclusive = 0, owned = 0;
    for (const auto& [core, st] : c.l1) {
      if (exclusive_like(st)) ++exclusive;
      if (st == CoherenceState::O) ++owned;
      if (directory() && st == CoherenceState::O)
        throw InvariantViolation(fmt::format("{:#x}: Owned state under directory MESI", addr));
    }
    if (exclusive > 1 || owned > 1 || (exclusive == 1 && c.l1.size() > 1) ||
        (exclusive == 1 && owned == 1))
      throw InvariantViolation(fmt::format("{:#x}: single-writer rule broken", addr));
    if (c.dirty > 1)
      throw InvariantViolation(fmt::format("{:#x}: {} dirty copies", addr, c.dirty));
  }

  if (!directory()) return;
  std::unordered_map<Addr, DirectoryEntry> expected;
  for (const auto& [addr, c] : blocks) {
    if (c.l1.empty()) continue;
    DirectoryEntry e;
    for (const auto& [core, st] : c.l1) {
      e.sharers |= bit(core);
      if (exclusive_like(st)) e.owner = core;
    }
    expected[addr] = e;
  }
  if (expected != directory_)
    throw InvariantViolation("directory metadata disagrees with private cache contents");
}

}  // namespace ctvsim
