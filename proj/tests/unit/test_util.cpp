#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>

#include "pdpc/error.hpp"
#include "pdpc/extsort.hpp"
#include "pdpc/io.hpp"
#include "pdpc/parallel.hpp"
#include "pdpc/random.hpp"
#include "testutil.hpp"

using namespace pdpc;

TEST(FormatDouble, RoundTripsShortest) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -0.0, 5e-324}) {
    const auto s = format_double(v);
    ASSERT_TRUE(parse_double(s).has_value()) << s;
    EXPECT_EQ(*parse_double(s), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(ParseDouble, RejectsJunk) {
  EXPECT_FALSE(parse_double("").has_value());
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_FALSE(parse_double(" 1").has_value());
  EXPECT_TRUE(std::isinf(*parse_double("inf")));
  EXPECT_TRUE(std::isnan(*parse_double("nan")));
  EXPECT_EQ(parse_u64("42"), 42u);
  EXPECT_FALSE(parse_u64("-1").has_value());
}

TEST(Split, KeepsEmptyFields) {
  const auto f = split("a,,b,", ',');
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[3], "");
  const auto w = split_ws("  a \t b\n ");
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1], "b");
}

TEST(SplitCsv, HandlesQuotes) {
  const auto f = split_csv(R"(a,"b,c","d""e")");
  ASSERT_TRUE(f.has_value());
  ASSERT_EQ(f->size(), 3u);
  EXPECT_EQ((*f)[1], "b,c");
  EXPECT_EQ((*f)[2], "d\"e");
  EXPECT_FALSE(split_csv(R"(a,"b)").has_value());
  EXPECT_EQ(csv_field("x,y"), "\"x,y\"");
  EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(ArtifactHeader, RoundTrip) {
  ArtifactHeader h{"pd", 1, "00ff00ff00ff00ff"};
  const auto parsed = ArtifactHeader::parse(h.to_line());
  ASSERT_TRUE(parsed.has_value());
  EXPECT_EQ(parsed->kind, "pd");
  EXPECT_EQ(parsed->version, 1);
  EXPECT_EQ(parsed->lineage, "00ff00ff00ff00ff");
  EXPECT_FALSE(ArtifactHeader::parse("doc_id,ppl").has_value());
}

TEST(Rng, DeterministicAndUnbiasedRange) {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(1);
  std::vector<int> hist(6, 0);
  for (int i = 0; i < 60000; ++i) ++hist[r.below(6)];
  for (int c : hist) EXPECT_NEAR(c, 10000, 500);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.unit();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  std::vector<int> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = i;
  auto w = v;
  Rng r(3);
  r.shuffle(std::span<int>(w));
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(DeriveSeed, StreamsDiffer) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 100; ++i) {
    seeds.insert(derive_seed(1, "part", i));
    seeds.insert(derive_seed(1, "batch", i));
  }
  EXPECT_EQ(seeds.size(), 200u);
  EXPECT_EQ(derive_seed(5, "x", 2), derive_seed(5, "x", 2));
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(10007);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(1000, 4, [](std::size_t i) {
                 if (i == 777) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(AtomicFile, UncommittedLeavesNothing) {
  testutil::TempDir dir;
  {
    AtomicFile f(dir / "a.txt");
    f.stream() << "partial";
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "a.txt"));
  EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  {
    AtomicFile f(dir / "a.txt");
    f.stream() << "done";
    f.commit();
  }
  EXPECT_EQ(testutil::read_text(dir / "a.txt"), "done");
}

TEST(LineReader, TracksLinesAndTermination) {
  testutil::TempDir dir;
  testutil::write_text(dir / "x", "a\r\nb\nc");
  LineReader r(dir / "x");
  std::string line;
  std::vector<std::string> lines;
  while (r.next(line)) lines.push_back(line);
  EXPECT_EQ(lines, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(r.line_number(), 3u);
  EXPECT_FALSE(r.last_line_terminated());
}

TEST(Errors, ExitCodesAreDistinct) {
  std::set<int> codes;
  for (auto c : {ErrorCategory::kUsage, ErrorCategory::kInput, ErrorCategory::kValidation,
                 ErrorCategory::kMissingArtifact, ErrorCategory::kLineage, ErrorCategory::kIo,
                 ErrorCategory::kInternal}) {
    EXPECT_NE(exit_code(c), 0);
    codes.insert(exit_code(c));
  }
  EXPECT_EQ(codes.size(), 7u);
  MissingArtifactError e("work/partition.tsv", "partition");
  EXPECT_NE(std::string(e.what()).find("run `partition`"), std::string::npos);
}

TEST(ExternalSorter, SpillsAndMergesStably) {
  testutil::TempDir dir;
  std::mt19937_64 gen(11);
  std::vector<std::string> records;
  for (int i = 0; i < 20000; ++i) {
    records.push_back("k" + std::to_string(gen() % 500) + "\t" + std::to_string(i));
  }
  ExternalSorter sorter(tab_key_less, 4096, dir.path());
  for (const auto& r : records) sorter.add(r);
  EXPECT_GT(sorter.runs_spilled(), 1u);
  auto reader = sorter.finish();
  std::vector<std::string> out;
  std::string rec;
  while (reader.next(rec)) out.push_back(rec);

  auto expected = records;
  std::stable_sort(expected.begin(), expected.end(),
                   [](const std::string& a, const std::string& b) { return tab_key_less(a, b); });
  EXPECT_EQ(out, expected);
}

TEST(ExternalSorter, InMemoryOnly) {
  testutil::TempDir dir;
  ExternalSorter sorter(tab_key_less, 1 << 20, dir.path());
  for (auto s : {"c\t1", "a\t2", "b\t3", "a\t4"}) sorter.add(s);
  EXPECT_EQ(sorter.runs_spilled(), 0u);
  auto reader = sorter.finish();
  std::vector<std::string> out;
  std::string rec;
  while (reader.next(rec)) out.push_back(rec);
  EXPECT_EQ(out, (std::vector<std::string>{"a\t2", "a\t4", "b\t3", "c\t1"}));
}
