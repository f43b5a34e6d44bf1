#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "pdpc/composer.hpp"
#include "pdpc/error.hpp"
#include "testutil.hpp"

using namespace pdpc;

namespace {

PartitionedDataset make_parts(std::size_t low, std::size_t high) {
  std::vector<ScoredId> v;
  for (std::size_t i = 0; i < low + high; ++i) v.push_back({"id" + std::to_string(i), static_cast<double>(i)});
  const double q = static_cast<double>(low) / static_cast<double>(low + high);
  return partition_by_score(v, PartitionSpec{2, {q}});
}

using Counts = std::vector<std::vector<std::size_t>>;

}  // namespace

TEST(Quantize, Scale) {
  EXPECT_EQ(quantize_proportion(0.0), 0u);
  EXPECT_EQ(quantize_proportion(1.0), kProportionScale);
  EXPECT_EQ(quantize_proportion(0.5), kProportionScale / 2);
}

TEST(Plan, ZShapeZeroLambdaTwoByTwo) {
  const std::vector<std::size_t> sizes{2, 2};
  const auto plan = plan_batches(sizes, 2, std::nullopt, ScheduleSpec{ScheduleMode::kCurriculum, ZShapeCurve{0.0}});
  EXPECT_EQ(plan.counts, (Counts{{2, 0}, {0, 2}}));
  EXPECT_FALSE(plan.first_constrained.has_value());
}

TEST(Plan, LinearFiveByFive) {
  const std::vector<std::size_t> sizes{5, 5};
  const auto plan = plan_batches(sizes, 2, std::nullopt, ScheduleSpec{ScheduleMode::kCurriculum, LinearCurve{-1}});
  ASSERT_EQ(plan.batches(), 5u);
  std::size_t low = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(plan.counts[k][0] + plan.counts[k][1], 2u);
    EXPECT_LE(std::abs(static_cast<double>(plan.counts[k][0]) - plan.targets[k][0]), 1.0);
    low += plan.counts[k][0];
  }
  EXPECT_EQ(low, 5u);
  EXPECT_EQ(plan.counts[0], (std::vector<std::size_t>{2, 0}));
}

TEST(Plan, SShapeFirstStep) {
  const std::vector<std::size_t> sizes{50, 50};
  const auto plan = plan_batches(sizes, 10, std::nullopt, ScheduleSpec{ScheduleMode::kCurriculum, SShapeCurve{10}});
  ASSERT_EQ(plan.batches(), 10u);
  EXPECT_EQ(plan.counts[0], (std::vector<std::size_t>{10, 0}));
  std::size_t low = 0, high = 0;
  for (const auto& c : plan.counts) {
    low += c[0];
    high += c[1];
  }
  EXPECT_EQ(low, 50u);
  EXPECT_EQ(high, 50u);
}

TEST(Plan, StepsAndPartialBatch) {
  const std::vector<std::size_t> sizes{12, 13};
  const ScheduleSpec spec{};
  const auto a = plan_batches(sizes, 10, std::nullopt, spec);
  EXPECT_EQ(a.steps, 2u);
  EXPECT_EQ(a.batch_sizes, (std::vector<std::size_t>{10, 10, 5}));
  EXPECT_DOUBLE_EQ(a.progress(2), 1.0);
  const auto b = plan_batches(sizes, 10, 3, spec);
  EXPECT_EQ(b.batch_sizes, (std::vector<std::size_t>{10, 10, 5}));
  EXPECT_DOUBLE_EQ(b.progress(2), 2.0 / 3.0);
  EXPECT_THROW(plan_batches(sizes, 10, 4, spec), ValidationError);
  EXPECT_THROW(plan_batches(sizes, 0, std::nullopt, spec), ValidationError);
  EXPECT_THROW(plan_batches(sizes, 30, std::nullopt, spec), ValidationError);
}

TEST(Plan, MatchesExactRationalOracle) {
  std::mt19937_64 gen(11);
  const std::vector<PreferenceCurve> curves{SShapeCurve{10}, SShapeCurve{2.5}, LinearCurve{-1}, LinearCurve{-0.3},
                                            ZShapeCurve{0.1}, fit_pchip({{0, 0.95}, {0.4, 0.7}, {1, 0.05}})};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t low = 1 + gen() % 400, high = 1 + gen() % 400;
    const std::size_t n = 1 + gen() % 40;
    if (n > low + high) continue;
    const auto& curve = curves[gen() % curves.size()];
    const std::vector<std::size_t> sizes{low, high};
    const auto plan = plan_batches(sizes, n, std::nullopt, ScheduleSpec{ScheduleMode::kCurriculum, curve});
    const auto o =
        oracle::simulate_plan(sizes, plan.batch_sizes, [&](std::size_t k) { return eval(curve, plan.progress(k)); });
    ASSERT_EQ(plan.counts, o.counts) << "trial " << trial << " sizes " << low << "," << high << " N " << n;
    EXPECT_EQ(plan.first_constrained, o.first_constrained) << "trial " << trial;
  }
}

TEST(Plan, ExactBudgetAndPerStepBoundsBeforeTail) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t low = 50 + gen() % 2000, high = 50 + gen() % 2000;
    const std::size_t n = 1 + gen() % 64;
    const std::vector<std::size_t> sizes{low, high};
    const auto plan = plan_batches(sizes, n, std::nullopt, ScheduleSpec{});
    std::size_t cum_low = 0, cum_high = 0, seats = 0;
    double cum_target = 0;
    const std::size_t tail = plan.first_constrained.value_or(plan.batches());
    for (std::size_t k = 0; k < plan.batches(); ++k) {
      cum_low += plan.counts[k][0];
      cum_high += plan.counts[k][1];
      seats += plan.batch_sizes[k];
      cum_target += plan.targets[k][0];
      ASSERT_EQ(plan.counts[k][0] + plan.counts[k][1], plan.batch_sizes[k]);
      ASSERT_LE(cum_low, low);
      ASSERT_LE(cum_high, high);
      if (k < tail) {
        EXPECT_LE(std::abs(static_cast<double>(plan.counts[k][0]) - plan.targets[k][0]), 1.0 + 1e-9);
        EXPECT_LE(std::abs(static_cast<double>(cum_low) - cum_target), 1.0 + 1e-6);
      }
    }
    EXPECT_EQ(cum_low, low);
    EXPECT_EQ(cum_high, high);
    EXPECT_EQ(seats, low + high);
  }
}

TEST(Plan, ModesOtherThanCurriculum) {
  const std::vector<std::size_t> sizes{7, 5};
  const auto r = plan_batches(sizes, 4, std::nullopt, ScheduleSpec{ScheduleMode::kRandom, SShapeCurve{}});
  EXPECT_EQ(r.part_sizes, (std::vector<std::size_t>{12}));
  const auto s = plan_batches(sizes, 4, std::nullopt, ScheduleSpec{ScheduleMode::kSequentialAsc, SShapeCurve{}});
  EXPECT_EQ(s.counts, (Counts{{4, 0}, {3, 1}, {0, 4}}));
  const auto d = plan_batches(sizes, 4, std::nullopt, ScheduleSpec{ScheduleMode::kSequentialDesc, SShapeCurve{}});
  EXPECT_EQ(d.counts, (Counts{{0, 4}, {3, 1}, {4, 0}}));
  EXPECT_EQ(schedule_mode_from_string("sequential_desc"), ScheduleMode::kSequentialDesc);
  EXPECT_THROW(schedule_mode_from_string("zigzag"), Error);
}

TEST(Compose, DeterministicAndCoversEveryId) {
  const auto parts = make_parts(300, 200);
  const auto plan = plan_batches(parts.sizes(), 32, std::nullopt, ScheduleSpec{});
  const auto a = compose(plan, parts, 7);
  const auto b = compose(plan, parts, 7);
  const auto c = compose(plan, parts, 8);
  EXPECT_EQ(serialize_manifest(a), serialize_manifest(b));
  EXPECT_NE(serialize_manifest(a), serialize_manifest(c));
  std::set<std::string> seen;
  for (const auto& batch : a.batches)
    for (const auto& id : batch) EXPECT_TRUE(seen.insert(id).second);
  EXPECT_EQ(seen.size(), 500u);
  const auto rep = verify_manifest(a, parts);
  EXPECT_TRUE(rep.passed()) << rep.to_text();
  EXPECT_LE(rep.max_step_deviation, 1.0 + 1e-9);
}

TEST(Compose, SequentialOrder) {
  const auto parts = make_parts(5, 5);
  const auto plan = plan_batches(parts.sizes(), 3, std::nullopt, ScheduleSpec{ScheduleMode::kSequentialAsc, {}});
  const auto m = compose(plan, parts, 1);
  std::vector<std::string> flat;
  for (const auto& b : m.batches) flat.insert(flat.end(), b.begin(), b.end());
  EXPECT_EQ(flat, parts.sorted_ids());
  EXPECT_TRUE(verify_manifest(m, parts).passed());
}

TEST(Manifest, RoundTripIsByteIdentical) {
  testutil::TempDir dir;
  const auto parts = make_parts(40, 60);
  const auto plan = plan_batches(parts.sizes(), 8, std::nullopt, ScheduleSpec{ScheduleMode::kCurriculum, LinearCurve{-1}});
  auto m = compose(plan, parts, 99);
  m.header.lineage = "dddddddddddddddd";
  save_manifest(dir / "m.txt", m);
  const auto back = load_manifest(dir / "m.txt");
  EXPECT_EQ(serialize_manifest(back), testutil::read_text(dir / "m.txt"));
  EXPECT_EQ(back.header.lineage, "dddddddddddddddd");
  EXPECT_TRUE(verify_manifest(back, parts).passed());
}

TEST(Manifest, TruncatedLastLineNamesLine) {
  testutil::TempDir dir;
  const auto parts = make_parts(20, 20);
  const auto plan = plan_batches(parts.sizes(), 8, std::nullopt, ScheduleSpec{});
  save_manifest(dir / "m.txt", compose(plan, parts, 3));
  auto text = testutil::read_text(dir / "m.txt");
  text.resize(text.size() - 5);
  testutil::write_text(dir / "m.txt", text);
  try {
    load_manifest(dir / "m.txt");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":6"), std::string::npos) << e.what();
  }
}

TEST(Manifest, EditedBodyDetected) {
  testutil::TempDir dir;
  const auto parts = make_parts(20, 20);
  const auto plan = plan_batches(parts.sizes(), 8, std::nullopt, ScheduleSpec{});
  save_manifest(dir / "m.txt", compose(plan, parts, 3));
  auto text = testutil::read_text(dir / "m.txt");
  const auto pos = text.find("id1 ");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 4, "id9 ");
  testutil::write_text(dir / "m.txt", text);
  EXPECT_THROW(load_manifest(dir / "m.txt"), InputError);
}

TEST(Verify, DuplicateAndMissingIdsReported) {
  const auto parts = make_parts(10, 10);
  const auto plan = plan_batches(parts.sizes(), 5, std::nullopt, ScheduleSpec{});
  auto m = compose(plan, parts, 5);
  const std::string lost = m.batches[1][0];
  m.batches[1][0] = m.batches[0][0];
  const auto rep = verify_manifest(m, parts);
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.multiset_ok);
  EXPECT_EQ(rep.duplicate_ids, (std::vector<std::string>{m.batches[0][0]}));
  EXPECT_EQ(rep.missing_ids, (std::vector<std::string>{lost}));
}

TEST(Verify, SwappedAcrossPartsFailsPlan) {
  const auto parts = make_parts(10, 10);
  const auto plan = plan_batches(parts.sizes(), 5, std::nullopt, ScheduleSpec{});
  auto m = compose(plan, parts, 5);
  std::swap(m.batches.front().front(), m.batches.back().back());
  const auto rep = verify_manifest(m, parts);
  EXPECT_TRUE(rep.multiset_ok);
  EXPECT_FALSE(rep.plan_ok);
  EXPECT_EQ(rep.plan_mismatch_step, std::optional<std::size_t>{0});
}

TEST(Verify, UnknownIdReported) {
  const auto parts = make_parts(4, 4);
  const auto plan = plan_batches(parts.sizes(), 4, std::nullopt, ScheduleSpec{});
  auto m = compose(plan, parts, 5);
  m.batches[0][0] = "stranger";
  const auto rep = verify_manifest(m, parts);
  EXPECT_EQ(rep.unknown_ids, (std::vector<std::string>{"stranger"}));
  EXPECT_FALSE(rep.passed());
}

TEST(Verify, ShareTracksIntegral) {
  const auto parts = make_parts(5000, 5000);
  const auto plan = plan_batches(parts.sizes(), 100, std::nullopt, ScheduleSpec{});
  const auto rep = verify_manifest(compose(plan, parts, 1), parts);
  ASSERT_TRUE(rep.passed());
  EXPECT_LE(rep.max_share_gap, 0.01);
  EXPECT_FALSE(rep.steps_csv().empty());
}
