#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pdpc/corpus.hpp"
#include "pdpc/error.hpp"
#include "pdpc/refmodel.hpp"
#include "testutil.hpp"

using namespace pdpc;

namespace {

std::vector<TokenizedDoc> random_docs(std::size_t n, std::size_t vocab, std::size_t max_len, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<TokenizedDoc> docs;
  for (std::size_t i = 0; i < n; ++i) {
    TokenizedDoc d{"d" + std::to_string(i), {}};
    const std::size_t len = 1 + gen() % max_len;
    for (std::size_t t = 0; t < len; ++t) d.tokens.push_back(static_cast<TokenId>(gen() % vocab));
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<std::vector<std::uint32_t>> raw(const std::vector<TokenizedDoc>& docs) {
  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& d : docs) out.push_back(d.tokens);
  return out;
}

}  // namespace

TEST(NgramConfig, Validation) {
  EXPECT_THROW((NgramConfig{0, {}, 0.1}.resolved_weights()), ValidationError);
  EXPECT_THROW((NgramConfig{7, {}, 0.1}.resolved_weights()), ValidationError);
  EXPECT_THROW((NgramConfig{2, {0.5, 0.6}, 0.1}.resolved_weights()), ValidationError);
  EXPECT_THROW((NgramConfig{2, {1.5, -0.5}, 0.1}.resolved_weights()), ValidationError);
  EXPECT_THROW((NgramConfig{2, {}, 0.0}.resolved_weights()), ValidationError);
  EXPECT_EQ((NgramConfig{4, {}, 0.1}.resolved_weights()), (std::vector<double>(4, 0.25)));
}

TEST(NgramModel, EmptyCorpusRejected) {
  std::vector<TokenizedDoc> none;
  EXPECT_THROW(NgramModel::train(none, 10, {}), ValidationError);
}

TEST(NgramModel, UnigramAddK) {
  std::vector<TokenizedDoc> docs{{"a", {0, 0, 0}}};
  const auto m = NgramModel::train(docs, 2, NgramConfig{1, {}, 0.01});
  const TokenId tok = 0;
  EXPECT_NEAR(m.probability({}, tok), (3 + 0.01) / (3 + 0.02), 1e-15);
  EXPECT_GT(m.probability({}, tok), 0.99);
}

TEST(NgramModel, ConditionalsSumToOne) {
  const auto docs = random_docs(200, 30, 40, 1);
  for (int order : {1, 2, 3, 5}) {
    const auto m = NgramModel::train(docs, 30, NgramConfig{order, {}, 0.1});
    for (const auto& d : std::span(docs).first(10)) {
      for (std::size_t t = 0; t <= d.tokens.size(); ++t) {
        const auto h = std::span(d.tokens).first(t);
        double sum = 0;
        for (TokenId w = 0; w < 30; ++w) {
          const double p = m.probability(h, w);
          ASSERT_GT(p, 0.0);
          ASSERT_LE(p, 1.0);
          sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(NgramModel, UniformModelGivesV) {
  const auto m = NgramModel::uniform(137, 3);
  const auto docs = random_docs(20, 137, 100, 2);
  for (const auto& d : docs) EXPECT_NEAR(m.perplexity(d.tokens) / 137.0, 1.0, 1e-9);
}

TEST(NgramModel, PerplexityFormulaCases) {
  // exp of mean negative log-probability: conditionals 1/2, 1/4, 1/8 give 4.
  const double lp = std::log(0.5) + std::log(0.25) + std::log(0.125);
  EXPECT_NEAR(std::exp(-lp / 3), 4.0, 1e-12);
  // A 2-token vocabulary with no counts has P = 1/2 on a single token.
  const auto m = NgramModel::uniform(2);
  const std::vector<TokenId> one{1};
  EXPECT_NEAR(m.perplexity(one), 2.0, 1e-12);
  EXPECT_THROW(m.perplexity({}), ValidationError);
}

TEST(NgramModel, MatchesBruteForceOracle) {
  const auto train = random_docs(300, 25, 30, 3);
  const auto test = random_docs(50, 25, 80, 4);
  for (int order : {1, 2, 4}) {
    const std::vector<double> w =
        order == 4 ? std::vector<double>{0.1, 0.2, 0.3, 0.4} : std::vector<double>(order, 1.0 / order);
    const auto m = NgramModel::train(train, 25, NgramConfig{order, w, 0.05});
    const oracle::NgramOracle o(raw(train), 25, order, w, 0.05);
    for (const auto& d : test) {
      const double got = m.perplexity(d.tokens);
      const double want = o.perplexity(d.tokens);
      EXPECT_LE(std::abs(got - want) / want, 1e-12) << "order " << order;
    }
  }
}

TEST(NgramModel, ZeroWeightLowOrdersFallBackToTopAvailable) {
  const auto train = random_docs(50, 10, 20, 5);
  const auto m = NgramModel::train(train, 10, NgramConfig{3, {0.0, 0.0, 1.0}, 0.1});
  const oracle::NgramOracle o(raw(train), 10, 3, {0.0, 0.0, 1.0}, 0.1);
  // First token: only order 1 is available and it has zero weight.
  const std::vector<TokenId> doc{3, 4, 5};
  EXPECT_NEAR(m.perplexity(doc), o.perplexity(doc), 1e-12);
}

TEST(NgramModel, OwnTextLowersPerplexity) {
  auto train = random_docs(100, 40, 30, 6);
  const TokenizedDoc probe{"p", {1, 2, 3, 4, 5, 6, 7, 8}};
  const auto before = NgramModel::train(train, 40, NgramConfig{3, {0.05, 0.15, 0.8}, 0.01});
  train.push_back(probe);
  const auto after = NgramModel::train(train, 40, NgramConfig{3, {0.05, 0.15, 0.8}, 0.01});
  EXPECT_LT(after.perplexity(probe.tokens), before.perplexity(probe.tokens));
}

TEST(NgramModel, SaveLoadByteIdentical) {
  testutil::TempDir dir;
  const auto docs = random_docs(100, 50, 40, 7);
  const auto a = NgramModel::train(docs, 50, NgramConfig{4, {}, 0.1});
  const auto b = NgramModel::train(docs, 50, NgramConfig{4, {}, 0.1});
  a.save(dir / "a.model", "1111111111111111");
  b.save(dir / "b.model", "1111111111111111");
  EXPECT_EQ(testutil::read_text(dir / "a.model"), testutil::read_text(dir / "b.model"));
  std::string lineage;
  const auto c = NgramModel::load(dir / "a.model", &lineage);
  EXPECT_EQ(lineage, "1111111111111111");
  for (const auto& d : std::span(docs).first(20)) EXPECT_EQ(a.perplexity(d.tokens), c.perplexity(d.tokens));
  c.save(dir / "c.model", "1111111111111111");
  EXPECT_EQ(testutil::read_text(dir / "a.model"), testutil::read_text(dir / "c.model"));
}

TEST(NgramModel, TruncatedModelFileRejected) {
  testutil::TempDir dir;
  const auto docs = random_docs(20, 10, 10, 8);
  NgramModel::train(docs, 10, NgramConfig{2, {}, 0.1}).save(dir / "m", "0000000000000000");
  auto text = testutil::read_text(dir / "m");
  testutil::write_text(dir / "m", text.substr(0, text.size() / 2));
  EXPECT_THROW(NgramModel::load(dir / "m"), InputError);
}

TEST(ScoreCorpus, ParallelMatchesSerialAndKeepsOrder) {
  const auto docs = random_docs(400, 30, 50, 9);
  const auto m = NgramModel::train(docs, 30, NgramConfig{3, {}, 0.1});
  const auto a = score_corpus(m, docs, 1);
  const auto b = score_corpus(m, docs, 4);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(a[i].doc_id, docs[i].id);
    EXPECT_GE(a[i].ppl, 1.0);
  }
}

TEST(ScoreCorpus, ZeroTokenDocNamed) {
  std::vector<TokenizedDoc> docs{{"ok", {1}}, {"empty-one", {}}};
  const auto m = NgramModel::uniform(4);
  try {
    score_corpus(m, docs);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("empty-one"), std::string::npos);
  }
}

TEST(ScoreCorpus, DocWithKnownPplOfFour) {
  // A uniform 4-word model gives every token 1/4.
  std::vector<TokenizedDoc> docs{{"x", {0, 1, 2}}, {"y", {3}}, {"z", {1, 1}}};
  const auto recs = score_corpus(NgramModel::uniform(4), docs);
  ASSERT_EQ(recs.size(), 3u);
  double ll = 0;
  for (int t = 0; t < 3; ++t) ll += std::log(0.25);
  EXPECT_NEAR(recs[0].ppl, std::exp(-ll / 3), 1e-12);
  EXPECT_NEAR(recs[0].ppl, 4.0, 1e-12);
}

TEST(Scores, CsvAndJsonlRoundTrip) {
  testutil::TempDir dir;
  const std::vector<PplRecord> recs{{"a", 12.5}, {"b", 1.0000000001}, {"c,d", 3.25}};
  save_scores(dir / "s.csv", recs, ScoreFormat::kCsv, "abcdefabcdefabcd");
  save_scores(dir / "s.jsonl", recs, ScoreFormat::kJsonl, "");
  const auto csv = import_scores(dir / "s.csv", ScoreFormat::kCsv);
  EXPECT_EQ(csv.records, recs);
  EXPECT_EQ(csv.lineage, "abcdefabcdefabcd");
  const auto js = import_scores(dir / "s.jsonl", ScoreFormat::kJsonl);
  EXPECT_EQ(js.records, recs);
  EXPECT_EQ(js.lineage, "");
}

TEST(Scores, InvalidRowsReportLine) {
  testutil::TempDir dir;
  for (const std::string bad : {"-1.0", "inf", "nan", "0", "abc"}) {
    testutil::write_text(dir / "s.csv", "doc_id,ppl\na,12.5\nb," + bad + "\n");
    try {
      import_scores(dir / "s.csv", ScoreFormat::kCsv);
      FAIL() << bad;
    } catch (const InputError& e) {
      EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
    }
  }
  testutil::write_text(dir / "s.jsonl", "{\"id\":\"a\",\"ppl\":12.5}\n{\"id\":\"b\",\"ppl\":-2}\n");
  EXPECT_THROW(import_scores(dir / "s.jsonl", ScoreFormat::kJsonl), InputError);
}

TEST(Scores, UnknownIdsReported) {
  testutil::TempDir dir;
  testutil::write_text(dir / "s.csv", "a,2\nzz,3\n");
  const std::unordered_set<std::string> known{"a"};
  const auto r = import_scores(dir / "s.csv", ScoreFormat::kCsv, &known);
  EXPECT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.unknown_ids, (std::vector<std::string>{"zz"}));
}
