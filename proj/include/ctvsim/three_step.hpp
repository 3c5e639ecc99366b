#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ctvsim {

enum class Actor { Victim, Attacker, Any };

/// u: the secret; a: attacker-known, same set as u; a_alias: known addresses
/// conflicting with a/u in that set; d: known, different set.
enum class AddressClass { u, a, a_alias, d, none };

enum class StepAction { Access, Invalidate, Wildcard };

/// One of the 17 cache-block states a step can reach.
struct StepState {
  Actor actor = Actor::Any;
  AddressClass address = AddressClass::none;
  StepAction action = StepAction::Wildcard;

  /// "V_u", "A_a_alias", "V_d_inv", "A_inv", "*".
  std::string label() const;
  bool is_wildcard() const { return action == StepAction::Wildcard; }
  /// Invalidation of a whole cache (address class none).
  bool is_invalidate_all() const {
    return action == StepAction::Invalidate && address == AddressClass::none;
  }
  bool is_invalidation() const { return action == StepAction::Invalidate; }
  bool references_secret() const { return address == AddressClass::u; }

  bool operator==(const StepState&) const = default;
};

inline constexpr std::size_t kStateCount = 17;
inline constexpr std::size_t kTripleCount = kStateCount * kStateCount * kStateCount;

/// Canonical order: 7 accesses, 7 matching invalidations, V_inv, A_inv, *.
const std::array<StepState, kStateCount>& enumerate_states();
/// Index of `s` in the canonical order; throws InputError for a state outside
/// the taxonomy.
std::size_t state_index(const StepState& s);
/// Parses a state label; throws InputError.
StepState parse_state(const std::string& label);

/// State initialisation, state alteration, timing observation.
struct VulnTriple {
  int id = 0;
  std::array<StepState, 3> steps;

  const StepState& s1() const { return steps[0]; }
  const StepState& s2() const { return steps[1]; }
  const StepState& s3() const { return steps[2]; }
  bool references_secret() const;
  /// "<V_u, A_a_alias, V_u>"
  std::string label() const;
};

/// Mixed-radix rank over the canonical state order (s1 most significant).
int rank_triple(std::size_t s1, std::size_t s2, std::size_t s3);
/// Throws InputError for ids outside [0, 4913).
VulnTriple unrank_triple(int id);
VulnTriple make_triple(const StepState& s1, const StepState& s2, const StepState& s3);
std::vector<VulnTriple> enumerate_triples();

/// JSON lines: {"index","label","actor","address","action"} per state.
void write_state_catalog(std::ostream& out);
/// JSON lines: {"id","s1","s2","s3"} per triple.
void write_triple_catalog(std::ostream& out);
/// Parses write_triple_catalog output back; throws InputError on mismatch.
std::vector<VulnTriple> read_triple_catalog(std::istream& in);

}  // namespace ctvsim
