#include <gtest/gtest.h>

#include <sstream>

#include "ctvsim/errors.hpp"
#include "ctvsim/scoring.hpp"
#include "fixtures.hpp"

using namespace ctvsim;

using fixtures::cross_target_fixture;
using fixtures::is_smt;
using fixtures::make_matrix;

TEST(Ctvs, Extremes) {
  EXPECT_DOUBLE_EQ(ctvs(make_matrix("x", 10, [](int, std::size_t) { return CellStatus::NotDetected; })).value(), 0.0);
  EXPECT_DOUBLE_EQ(
      ctvs(make_matrix("x", 10, [](int, std::size_t c) { return c == 3 ? CellStatus::Detected : CellStatus::NotDetected; }))
          .value(),
      1.0);
  EXPECT_THROW(ctvs(DetectionMatrix{}), InputError);
}

TEST(Ctvs, FiftyEightOfEightyEight) {
  const auto r = ctvs(fixtures::single_target_fixture());
  EXPECT_EQ(r.hits, 58u);
  EXPECT_EQ(r.total, 88u);
  EXPECT_NEAR(r.value(), 0.659, 0.001);
}

TEST(Ctvs, InvalidCellsNeverChangeScores) {
  const auto m = make_matrix("x", 20, [](int t, std::size_t c) {
    return (t % 2 == 0 && c == 1) ? CellStatus::Detected : CellStatus::NotDetected;
  });
  const auto before = ctvs(m).value();
  const auto first_half = [](int, std::size_t c) { return c < 8; };
  const auto n = make_matrix("x", 20, [](int t, std::size_t c) {
    if (c >= 8) return CellStatus::InvalidConfig;
    return (t % 2 == 0 && c == 1) ? CellStatus::Detected : CellStatus::NotDetected;
  });
  EXPECT_DOUBLE_EQ(ctvs(n).value(), before);
  const auto with_invalid = success_ratio(n, all_cells());
  const auto without = success_ratio(m, first_half);
  EXPECT_EQ(with_invalid.hits, without.hits);
  EXPECT_EQ(with_invalid.total, without.total);
}

TEST(SuccessRatio, Categories) {
  const auto m = make_matrix("x", 4, [](int, std::size_t c) {
    if (is_smt(c)) return CellStatus::InvalidConfig;
    return gen_configs()[c].realization[2] == Realization::Natural ? CellStatus::Detected : CellStatus::NotDetected;
  });
  EXPECT_DOUBLE_EQ(success_ratio(m, observation_is(Realization::Natural)).value(), 1.0);
  EXPECT_DOUBLE_EQ(success_ratio(m, observation_is(Realization::WriteRealized)).value(), 0.0);
  EXPECT_DOUBLE_EQ(success_ratio(m, all_cells()).value(), 0.5);
  EXPECT_EQ(success_ratio(m, schedule_is(Schedule::TS)).total, 4u * 8u);
  EXPECT_THROW(success_ratio(m, schedule_is(Schedule::SMT)), InputError);
  EXPECT_EQ(success_ratio(m, config_label_is("RF_RF_RF_TS")).total, 4u);
}

TEST(SuccessRatio, SharedIsIntersectionOfValidKeys) {
  const auto a = make_matrix("a", 3, [](int, std::size_t c) { return c < 4 ? CellStatus::Detected : CellStatus::NotDetected; });
  const auto b = make_matrix("b", 3, [](int t, std::size_t c) {
    if (t == 0 || c >= 6) return CellStatus::InvalidConfig;
    return CellStatus::NotDetected;
  });
  const auto keys = shared_keys({a, b});
  EXPECT_EQ(keys.size(), 2u * 6u);
  const auto shared = success_ratio(a, in_keys(keys));
  EXPECT_EQ(shared.total, 12u);
  EXPECT_EQ(shared.hits, 8u);
  const auto exclusive = success_ratio(a, not_in_keys(keys));
  EXPECT_EQ(exclusive.total, 48u - 12u);
}

TEST(Presence, CrossTargetFixture) {
  const auto ms = cross_target_fixture();
  const auto p = presence_classes(ms);
  EXPECT_EQ(p.total, 88u);
  EXPECT_EQ(p.absent_from_all.size(), 6u);
  EXPECT_NEAR(static_cast<double>(p.absent_from_all.size()) / 88, 0.068, 0.001);
  EXPECT_EQ(p.shared_config.size(), 33u);
  EXPECT_NEAR(static_cast<double>(p.shared_config.size()) / 88, 0.375, 0.001);
  EXPECT_EQ(p.present_in_all.size(), 40u);
  EXPECT_EQ(p.present_in_all.size() + p.absent_from_all.size() + p.mixed.size(), p.total);
}

TEST(Presence, PermutationInvariant) {
  auto ms = cross_target_fixture();
  const auto p = presence_classes(ms);
  std::swap(ms[0], ms[2]);
  const auto q = presence_classes(ms);
  EXPECT_EQ(p.present_in_all, q.present_in_all);
  EXPECT_EQ(p.absent_from_all, q.absent_from_all);
  EXPECT_EQ(p.mixed, q.mixed);
  EXPECT_EQ(p.shared_config, q.shared_config);
}

TEST(Presence, SingleTargetHasNoMixedClass) {
  const auto p = presence_classes({cross_target_fixture()[1]});
  EXPECT_TRUE(p.mixed.empty());
  EXPECT_EQ(p.present_in_all.size() + p.absent_from_all.size(), 88u);
}

TEST(Presence, MismatchedTripleSets) {
  auto ms = cross_target_fixture();
  ms[1].triples.pop_back();
  EXPECT_THROW(presence_classes(ms), InputError);
  EXPECT_THROW(presence_classes({}), InputError);
}

TEST(Report, JsonAndTables) {
  const auto r = score(cross_target_fixture());
  ASSERT_EQ(r.targets.size(), 3u);
  const auto j = to_json(r);
  EXPECT_EQ(j["presence"]["absent_from_all"]["count"], 6);
  EXPECT_EQ(j["presence"]["total"], 88);
  EXPECT_TRUE(j["targets"][0]["success_ratio"]["SMT"].is_null());
  EXPECT_GT(j["targets"][0]["ctvs"]["ratio"].get<double>(), 0.0);
  std::ostringstream out;
  write_tables(out, r);
  EXPECT_NE(out.str().find("present_in_all"), std::string::npos);
  EXPECT_NE(out.str().find("t2"), std::string::npos);
}
