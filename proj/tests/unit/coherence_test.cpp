#include <gtest/gtest.h>

#include <tuple>

#include "ctvsim/errors.hpp"
#include "ctvsim/machine.hpp"
#include "oracles.hpp"
#include "paths.hpp"

using namespace ctvsim;
using oracle::tiny_spec;

namespace {

constexpr Addr kX = 0x40000;

CoherenceState l1_state(const SimMachine& m, int core, Addr a) {
  const auto& l = m.l1(core);
  if (!l.contains(a)) return CoherenceState::I;
  return l.line_for(a).state;
}

}  // namespace

class CoherenceFuzz
    : public ::testing::TestWithParam<std::tuple<CoherenceKind, int, bool, bool>> {};

TEST_P(CoherenceFuzz, ReadsSeeLastWriteAndInvariantsHold) {
  const auto [kind, cores, inclusive, l3] = GetParam();
  const auto spec = tiny_spec(kind, cores, inclusive, l3);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto r = oracle::coherence_fuzz(spec, 10000, seed);
    EXPECT_EQ(r.value_mismatches, 0u) << r.first_failure;
    EXPECT_EQ(r.invariant_failures, 0u) << r.first_failure;
  }
}

INSTANTIATE_TEST_SUITE_P(Hierarchies, CoherenceFuzz,
                         ::testing::Combine(::testing::Values(CoherenceKind::DirectoryBased,
                                                              CoherenceKind::Snooping),
                                            ::testing::Values(1, 2, 4), ::testing::Bool(),
                                            ::testing::Bool()));

TEST(Coherence, ColdReadComesFromDram) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  const auto tr = m.apply({MemOpKind::Read, 0, kX});
  EXPECT_TRUE(tr.contains(EventCategory::DirectoryLookup));
  EXPECT_TRUE(tr.contains(EventCategory::DramFetch));
  EXPECT_EQ(l1_state(m, 0, kX), CoherenceState::E);
  EXPECT_EQ(m.apply({MemOpKind::Read, 0, kX}).events.size(), 1u);
}

TEST(Coherence, SnoopingMissSnoopsOnlyWithPeers) {
  SimMachine two(tiny_spec(CoherenceKind::Snooping, 2));
  EXPECT_TRUE(two.apply({MemOpKind::Read, 0, kX}).contains(EventCategory::RemoteSnoop));
  SimMachine one(tiny_spec(CoherenceKind::Snooping, 1));
  EXPECT_FALSE(one.apply({MemOpKind::Read, 0, kX}).contains(EventCategory::RemoteSnoop));
}

TEST(Coherence, DirectoryReadOfModifiedLineWritesBack) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  m.apply({MemOpKind::Write, 1, kX, 77});
  const auto tr = m.apply({MemOpKind::Read, 0, kX});
  EXPECT_EQ(tr.value, 77u);
  EXPECT_TRUE(tr.contains(EventCategory::Writeback));
  EXPECT_EQ(l1_state(m, 1, kX), CoherenceState::S);
  EXPECT_EQ(l1_state(m, 0, kX), CoherenceState::S);
  const auto e = m.directory_entry(kX);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->sharers, 3u);
  EXPECT_EQ(e->owner, -1);
}

TEST(Coherence, SnoopingReadOfModifiedLineKeepsOwnership) {
  SimMachine m(tiny_spec(CoherenceKind::Snooping, 2));
  m.apply({MemOpKind::Write, 1, kX, 5});
  const auto tr = m.apply({MemOpKind::Read, 0, kX});
  EXPECT_EQ(tr.value, 5u);
  EXPECT_TRUE(tr.contains(EventCategory::CacheToCacheTransfer));
  EXPECT_FALSE(tr.contains(EventCategory::Writeback));
  EXPECT_EQ(l1_state(m, 1, kX), CoherenceState::O);
  EXPECT_EQ(l1_state(m, 0, kX), CoherenceState::S);
}

TEST(Coherence, WriteToSharedLineInvalidatesPeers) {
  for (auto kind : {CoherenceKind::DirectoryBased, CoherenceKind::Snooping}) {
    SimMachine m(tiny_spec(kind, 3));
    for (int c = 0; c < 3; ++c) m.apply({MemOpKind::Read, c, kX});
    const auto tr = m.apply({MemOpKind::Write, 0, kX, 9});
    EXPECT_TRUE(tr.contains(EventCategory::L1Hit));
    EXPECT_TRUE(tr.contains(EventCategory::InvalidationBroadcast));
    EXPECT_EQ(l1_state(m, 0, kX), CoherenceState::M);
    EXPECT_EQ(l1_state(m, 1, kX), CoherenceState::I);
    EXPECT_EQ(l1_state(m, 2, kX), CoherenceState::I);
    EXPECT_NO_THROW(m.check_invariants());
  }
}

TEST(Coherence, WriteMissTakesDirtyDataFromPeer) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  m.apply({MemOpKind::Write, 1, kX, 1});
  const auto tr = m.apply({MemOpKind::Write, 0, kX, 2});
  EXPECT_TRUE(tr.contains(EventCategory::InvalidationBroadcast));
  EXPECT_TRUE(tr.contains(EventCategory::CacheToCacheTransfer));
  EXPECT_EQ(l1_state(m, 1, kX), CoherenceState::I);
  EXPECT_EQ(m.apply({MemOpKind::Read, 1, kX}).value, 2u);
}

TEST(Coherence, FlushWritesBackDirtyCopyAndEmptiesHierarchy) {
  SimMachine m(tiny_spec(CoherenceKind::Snooping, 2));
  m.apply({MemOpKind::Write, 1, kX, 33});
  const auto tr = m.apply({MemOpKind::Flush, 0, kX});
  EXPECT_TRUE(tr.contains(EventCategory::FlushLine));
  EXPECT_TRUE(tr.contains(EventCategory::RemoteSnoop));
  EXPECT_TRUE(tr.contains(EventCategory::Writeback));
  EXPECT_TRUE(m.snapshot_placement(kX).dram_only());
  EXPECT_EQ(m.memory_value(kX), 33u);
}

TEST(Coherence, FlushOfUncachedLineIsOneEvent) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  const auto tr = m.apply({MemOpKind::Flush, 0, kX});
  ASSERT_EQ(tr.events.size(), 1u);
  EXPECT_EQ(tr.events[0].category, EventCategory::FlushLine);
}

TEST(Coherence, FlushUnavailableWithoutUserModeSupport) {
  auto spec = tiny_spec(CoherenceKind::DirectoryBased, 2);
  spec.flush_user_mode = false;
  SimMachine m(spec);
  EXPECT_THROW(m.apply({MemOpKind::Flush, 0, kX}), FeatureUnavailable);
}

TEST(Coherence, RemoteWriteInvalidationKeepsData) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  m.apply({MemOpKind::Write, 0, kX, 12});
  m.remote_invalidate_via_write(1, kX);
  EXPECT_FALSE(m.snapshot_placement(kX).in_any_l1_except(1));
  EXPECT_EQ(m.apply({MemOpKind::Read, 0, kX}).value, 12u);
}

TEST(Coherence, EvictedLinesLandInSharedLevel) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  const auto stride = m.geometry(1).set_stride();
  m.apply({MemOpKind::Read, 0, kX});
  m.apply({MemOpKind::Read, 0, kX + stride});
  m.apply({MemOpKind::Read, 0, kX + 2 * stride});
  const auto p = m.snapshot_placement(kX);
  EXPECT_FALSE(p.in_l1(0));
  EXPECT_TRUE(p.in_level(2));
  EXPECT_TRUE(m.apply({MemOpKind::Read, 0, kX}).contains(EventCategory::L2Hit));
}

TEST(Coherence, CoreOutOfRangeIsRejected) {
  SimMachine m(tiny_spec(CoherenceKind::DirectoryBased, 2));
  EXPECT_THROW(m.apply({MemOpKind::Read, 2, kX}), InputError);
}

TEST(Coherence, ShippedTargetsSurviveFuzz) {
  for (const char* name : {"c910", "u54", "u74", "reference", "l3-demo"}) {
    const auto spec = testing_paths::shipped(name);
    const auto r = oracle::coherence_fuzz(spec, 5000, 3, 50);
    EXPECT_EQ(r.value_mismatches, 0u) << name << ": " << r.first_failure;
    EXPECT_EQ(r.invariant_failures, 0u) << name << ": " << r.first_failure;
  }
}
