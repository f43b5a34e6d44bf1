#include <gtest/gtest.h>

#include <random>
#include <set>

#include "pdpc/error.hpp"
#include "pdpc/partition.hpp"
#include "testutil.hpp"

using namespace pdpc;

namespace {

std::vector<ScoredId> scored(std::initializer_list<double> v) {
  std::vector<ScoredId> out;
  int i = 0;
  for (double x : v) out.push_back({"d" + std::to_string(i++), x});
  return out;
}

}  // namespace

TEST(Partition, MedianSplit) {
  const auto p = partition_by_score(scored({0.1, 0.2, 0.3, 0.4}), PartitionSpec{2, {}});
  ASSERT_EQ(p.parts.size(), 2u);
  EXPECT_EQ(p.parts[0].members[0].doc_id, "d0");
  EXPECT_EQ(p.parts[0].members[1].doc_id, "d1");
  EXPECT_EQ(p.parts[1].members[0].doc_id, "d2");
  EXPECT_DOUBLE_EQ(*p.parts[0].score_max, 0.2);
}

TEST(Partition, SinglePart) {
  const auto p = partition_by_score(scored({0.3, 0.1, 0.2}), PartitionSpec{1, {}});
  ASSERT_EQ(p.parts.size(), 1u);
  EXPECT_EQ(p.parts[0].size(), 3u);
  EXPECT_EQ(p.sorted_ids(), (std::vector<std::string>{"d1", "d2", "d0"}));
}

TEST(Partition, TiesBrokenById) {
  std::vector<ScoredId> v{{"b", 0.5}, {"a", 0.5}, {"c", 0.1}};
  const auto p = partition_by_score(v, PartitionSpec{2, {}});
  EXPECT_EQ(p.sorted_ids(), (std::vector<std::string>{"c", "a", "b"}));
}

TEST(Partition, QuantileSplitAndEndpoints) {
  std::vector<ScoredId> v;
  for (int i = 0; i < 10; ++i) v.push_back({"d" + std::to_string(i), i * 1.0});
  EXPECT_EQ(partition_by_score(v, PartitionSpec{2, {0.3}}).sizes(), (std::vector<std::size_t>{3, 7}));
  EXPECT_EQ(partition_by_score(v, PartitionSpec{2, {1.0}}).sizes(), (std::vector<std::size_t>{10, 0}));
  EXPECT_EQ(partition_by_score(v, PartitionSpec{3, {0.25, 0.5}}).sizes(), (std::vector<std::size_t>{2, 3, 5}));
}

TEST(Partition, Errors) {
  EXPECT_THROW(partition_by_score({}, PartitionSpec{2, {}}), ValidationError);
  EXPECT_THROW(partition_by_score(scored({0.1}), PartitionSpec{0, {}}), ValidationError);
  EXPECT_THROW(partition_by_score(scored({0.1, 0.2}), PartitionSpec{3, {0.5}}), ValidationError);
  EXPECT_THROW(partition_by_score(scored({0.1, 0.2}), PartitionSpec{3, {0.6, 0.5}}), ValidationError);
  EXPECT_THROW(partition_by_score(scored({0.1, NAN}), PartitionSpec{2, {}}), ValidationError);
  std::vector<ScoredId> dup{{"a", 0.1}, {"a", 0.2}};
  EXPECT_THROW(partition_by_score(dup, PartitionSpec{2, {}}), ValidationError);
}

TEST(Partition, RandomInstancesObeyOrderingLaw) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + gen() % 5;
    const std::size_t total = n + gen() % 2000;
    std::vector<ScoredId> v;
    for (std::size_t i = 0; i < total; ++i) v.push_back({"x" + std::to_string(i), static_cast<double>(gen() % 100)});
    const auto p = partition_by_score(v, PartitionSpec{n, {}});
    std::set<std::string> seen;
    std::size_t lo = total, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, p.parts[i].size());
      hi = std::max(hi, p.parts[i].size());
      for (const auto& m : p.parts[i].members) EXPECT_TRUE(seen.insert(m.doc_id).second);
      if (i + 1 < n && !p.parts[i].members.empty() && !p.parts[i + 1].members.empty())
        EXPECT_LE(*p.parts[i].score_max, *p.parts[i + 1].score_min);
    }
    EXPECT_EQ(seen.size(), total);
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(PartitionFile, RoundTripAndTruncation) {
  testutil::TempDir dir;
  std::vector<ScoredId> v;
  for (int i = 0; i < 101; ++i) v.push_back({"d" + std::to_string(i), i * 0.01});
  const auto p = partition_by_score(v, PartitionSpec{2, {0.4}});
  save_partition(dir / "p.tsv", p, "cccccccccccccccc");
  std::string lineage;
  const auto q = load_partition(dir / "p.tsv", &lineage);
  EXPECT_EQ(lineage, "cccccccccccccccc");
  EXPECT_EQ(q.sizes(), p.sizes());
  EXPECT_EQ(q.sorted_ids(), p.sorted_ids());
  EXPECT_EQ(q.spec.split_quantiles, p.spec.split_quantiles);

  auto text = testutil::read_text(dir / "p.tsv");
  testutil::write_text(dir / "p.tsv", text.substr(0, text.size() - 20));
  EXPECT_THROW(load_partition(dir / "p.tsv"), InputError);
}
