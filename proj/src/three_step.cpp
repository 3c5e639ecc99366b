#include "ctvsim/three_step.hpp"

#include <istream>
#include <ostream>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ctvsim/errors.hpp"

namespace ctvsim {

namespace {

std::string_view actor_name(Actor a) {
  switch (a) {
    case Actor::Victim: return "victim";
    case Actor::Attacker: return "attacker";
    case Actor::Any: return "any";
  }
  return "?";
}

std::string_view address_name(AddressClass c) {
  switch (c) {
    case AddressClass::u: return "u";
    case AddressClass::a: return "a";
    case AddressClass::a_alias: return "a_alias";
    case AddressClass::d: return "d";
    case AddressClass::none: return "none";
  }
  return "?";
}

std::string_view action_name(StepAction a) {
  switch (a) {
    case StepAction::Access: return "access";
    case StepAction::Invalidate: return "invalidate";
    case StepAction::Wildcard: return "wildcard";
  }
  return "?";
}

std::array<StepState, kStateCount> build_states() {
  using enum AddressClass;
  const std::array<std::pair<Actor, AddressClass>, 7> accessors{{{Actor::Victim, u},
                                                                 {Actor::Victim, a},
                                                                 {Actor::Victim, a_alias},
                                                                 {Actor::Attacker, a},
                                                                 {Actor::Attacker, a_alias},
                                                                 {Actor::Victim, d},
                                                                 {Actor::Attacker, d}}};
  std::array<StepState, kStateCount> out{};
  std::size_t i = 0;
  for (auto [actor, addr] : accessors) out[i++] = {actor, addr, StepAction::Access};
  for (auto [actor, addr] : accessors) out[i++] = {actor, addr, StepAction::Invalidate};
  out[i++] = {Actor::Victim, none, StepAction::Invalidate};
  out[i++] = {Actor::Attacker, none, StepAction::Invalidate};
  out[i++] = {Actor::Any, none, StepAction::Wildcard};
  return out;
}

}  // namespace

std::string StepState::label() const {
  if (is_wildcard()) return "*";
  const char* who = actor == Actor::Victim ? "V" : "A";
  if (is_invalidate_all()) return fmt::format("{}_inv", who);
  return fmt::format("{}_{}{}", who, address_name(address), is_invalidation() ? "_inv" : "");
}

const std::array<StepState, kStateCount>& enumerate_states() {
  static const auto states = build_states();
  return states;
}

std::size_t state_index(const StepState& s) {
  const auto& all = enumerate_states();
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i] == s) return i;
  throw InputError(fmt::format("state {} is not part of the taxonomy", s.label()));
}

StepState parse_state(const std::string& label) {
  for (const auto& s : enumerate_states())
    if (s.label() == label) return s;
  throw InputError(fmt::format("unknown state label '{}'", label));
}

bool VulnTriple::references_secret() const {
  for (const auto& s : steps)
    if (s.references_secret()) return true;
  return false;
}

std::string VulnTriple::label() const {
  return fmt::format("<{}, {}, {}>", steps[0].label(), steps[1].label(), steps[2].label());
}

int rank_triple(std::size_t s1, std::size_t s2, std::size_t s3) {
  return static_cast<int>((s1 * kStateCount + s2) * kStateCount + s3);
}

VulnTriple unrank_triple(int id) {
  if (id < 0 || id >= static_cast<int>(kTripleCount))
    throw InputError(fmt::format("triple id {} out of range [0, {})", id, kTripleCount));
  const auto& st = enumerate_states();
  const auto u = static_cast<std::size_t>(id);
  return {id, {st[u / (kStateCount * kStateCount)], st[(u / kStateCount) % kStateCount], st[u % kStateCount]}};
}

VulnTriple make_triple(const StepState& s1, const StepState& s2, const StepState& s3) {
  return unrank_triple(rank_triple(state_index(s1), state_index(s2), state_index(s3)));
}

std::vector<VulnTriple> enumerate_triples() {
  std::vector<VulnTriple> out;
  out.reserve(kTripleCount);
  for (int id = 0; id < static_cast<int>(kTripleCount); ++id) out.push_back(unrank_triple(id));
  return out;
}

void write_state_catalog(std::ostream& out) {
  const auto& st = enumerate_states();
  for (std::size_t i = 0; i < st.size(); ++i) {
    nlohmann::json j{{"index", i},
                     {"label", st[i].label()},
                     {"actor", actor_name(st[i].actor)},
                     {"address", address_name(st[i].address)},
                     {"action", action_name(st[i].action)}};
    out << j.dump() << '\n';
  }
}

void write_triple_catalog(std::ostream& out) {
  for (const auto& t : enumerate_triples()) {
    nlohmann::json j{{"id", t.id}, {"s1", t.s1().label()}, {"s2", t.s2().label()}, {"s3", t.s3().label()}};
    out << j.dump() << '\n';
  }
}

std::vector<VulnTriple> read_triple_catalog(std::istream& in) {
  std::vector<VulnTriple> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("triple catalog: {}", e.what()));
    }
    const auto t = make_triple(parse_state(j.at("s1").get<std::string>()),
                               parse_state(j.at("s2").get<std::string>()),
                               parse_state(j.at("s3").get<std::string>()));
    if (t.id != j.at("id").get<int>())
      throw InputError(fmt::format("triple catalog: id {} does not match its states", j.at("id").dump()));
    out.push_back(t);
  }
  return out;
}

}  // namespace ctvsim
