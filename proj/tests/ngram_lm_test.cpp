// tests/ngram_lm_test.cpp

// Copyright 2026  The csasr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <sstream>

#include "csasr/ngram_lm.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace csasr {
namespace {

using Corpus = std::vector<std::vector<std::string>>;

Corpus Split(const std::vector<std::string>& lines) {
  Corpus out;
  for (const auto& l : lines) out.push_back(Surfaces(TokenizeLm(l)));
  return out;
}

Corpus RandomCorpus(std::size_t tokens, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1), len(1, 12);
  Corpus out;
  std::size_t n = 0;
  while (n < tokens) {
    std::vector<std::string> s(std::min(len(rng), tokens - n));
    // Zipf-ish skew so count-of-counts are non-trivial.
    for (auto& w : s) w = "w" + std::to_string(word(rng) % (1 + word(rng)));
    n += s.size();
    out.push_back(std::move(s));
  }
  return out;
}

// Sum over every predictable word of P(w | context).
double MassAt(const NGramModel& m, const NGram& context) {
  double total = 0.0;
  for (WordId w = 0; w < static_cast<WordId>(m.vocab_size()); ++w)
    if (w != NGramModel::kBosId) total += std::pow(10.0, m.LogProb10(context, w));
  return total;
}

void ExpectNormalized(const NGramModel& m, double tol) {
  EXPECT_NEAR(MassAt(m, {}), 1.0, tol);
  for (int k = 1; k < m.order(); ++k)
    for (const auto& [gram, e] : m.table(k))
      if (e.has_backoff) ASSERT_NEAR(MassAt(m, gram), 1.0, tol);
}

TEST(TokenizeLmTest, Examples) {
  EXPECT_EQ(Surfaces(TokenizeLm("then 你 做 what's")),
            (std::vector<std::string>{"then", "你", "做", "what's"}));
  EXPECT_EQ(Surfaces(TokenizeLm("我的friend")), (std::vector<std::string>{"我", "的", "friend"}));
  EXPECT_TRUE(TokenizeLm("").empty());
  const auto toks = TokenizeLm("ok 好");
  EXPECT_EQ(toks[0].kind, TokenKind::kLatinWord);
  EXPECT_EQ(toks[1].kind, TokenKind::kCjkChar);
}

TEST(KneserNeyTest, RawCounts) {
  NGramModel m(1);
  const auto counts = CountNGrams({{"a", "b", "a", "b", "a"}}, 1, m);
  EXPECT_EQ(counts[0].at({m.Id("a")}), 3.0);
  EXPECT_EQ(counts[0].at({m.Id("b")}), 2.0);
}

TEST(KneserNeyTest, MatchesOracleOnSmallCorpus) {
  const Corpus corpus(3, {"a", "a", "b"});
  const auto m = TrainKneserNey(corpus, 2);
  const testing::KneserNeyOracle oracle(corpus, 2);
  for (const std::string h : {"<s>", "a", "b"})
    for (const std::string w : {"a", "b", "</s>", "<unk>"})
      EXPECT_NEAR(std::pow(10.0, m.LogProb10(std::vector<WordId>{m.Id(h)}, m.Id(w))),
                  oracle.Prob({h}, w), 1e-12)
          << h << " " << w;
}

TEST(KneserNeyTest, MatchesOracleOnRandomCorpora) {
  for (int order : {2, 3, 4}) {
    const auto corpus = RandomCorpus(400, 8, static_cast<std::uint64_t>(order));
    const auto m = TrainKneserNey(corpus, order);
    const testing::KneserNeyOracle oracle(corpus, order);
    const auto test = RandomCorpus(60, 10, 99);
    EXPECT_NEAR(Perplexity(m, test) / oracle.Perplexity(test), 1.0, 1e-9) << order;
  }
}

TEST(KneserNeyTest, Normalized) {
  ExpectNormalized(TrainKneserNey(RandomCorpus(2000, 15, 3), 4), 1e-9);
  ExpectNormalized(TrainKneserNey(Corpus(3, {"a", "a", "b"}), 2), 1e-12);
}

TEST(KneserNeyTest, DiscountsAndDegenerateFlag) {
  const auto m = TrainKneserNey(RandomCorpus(2000, 15, 4), 3);
  ASSERT_EQ(m.metadata().discounts.size(), 3u);
  for (double d : m.metadata().discounts) {
    EXPECT_GT(d, 0.0);
    EXPECT_LT(d, 1.0);
  }
  for (int k = 1; k <= 3; ++k)
    for (const auto& [g, e] : m.table(k))
      if (g != NGram{NGramModel::kBosId}) {
        EXPECT_LE(e.log10_prob, 0.0);
        EXPECT_GT(e.log10_prob, -99.0);
      }
  // Every bigram appears once: n2 = 0 so D = 1 and the fallback kicks in.
  const auto d = TrainKneserNey(Corpus{{"x", "y"}}, 2);
  EXPECT_TRUE(d.metadata().degenerate);
  EXPECT_EQ(d.metadata().discounts[1], 0.5);
  ExpectNormalized(d, 1e-12);
}

TEST(KneserNeyTest, EmptyCorpusIsAnError) {
  EXPECT_THROW(TrainKneserNey(Corpus{}, 3), Error);
}

TEST(KneserNeyTest, Deterministic) {
  const auto corpus = RandomCorpus(500, 10, 5);
  std::ostringstream a, b;
  WriteArpa(a, TrainKneserNey(corpus, 3));
  WriteArpa(b, TrainKneserNey(corpus, 3));
  EXPECT_EQ(a.str(), b.str());
}

TEST(KneserNeyTest, MoreDataKeepsVocabulary) {
  auto corpus = RandomCorpus(300, 10, 6);
  const auto small = TrainKneserNey(corpus, 2);
  const auto extra = RandomCorpus(300, 20, 7);
  corpus.insert(corpus.end(), extra.begin(), extra.end());
  const auto big = TrainKneserNey(corpus, 2);
  for (const auto& w : small.words())
    if (w != kUnk) EXPECT_NE(big.Id(w), NGramModel::kUnkId) << w;
}

TEST(ScoreTest, BackoffSemantics) {
  const auto m = TrainKneserNey(Split({"a b", "a c", "b c a"}), 2);
  const WordId a = m.Id("a"), b = m.Id("b"), c = m.Id("c");
  // Empty context: the unigram entry.
  EXPECT_EQ(m.LogProb10({}, a), m.table(1).at({a}).log10_prob);
  // Stored bigram: explicit value, no backoff.
  ASSERT_NE(m.Find({a, b}), nullptr);
  EXPECT_EQ(m.LogProb10(std::vector<WordId>{a}, b), m.Find({a, b})->log10_prob);
  // Unseen bigram (c c): backoff(c) + P(c).
  ASSERT_EQ(m.Find({c, c}), nullptr);
  EXPECT_DOUBLE_EQ(m.LogProb10(std::vector<WordId>{c}, c),
                   m.Find({c})->log10_backoff + m.Find({c})->log10_prob);
  // Unknown words map to <unk>.
  EXPECT_EQ(m.Id("zzz"), NGramModel::kUnkId);
}

TEST(ScoreTest, IncrementalEqualsWhole) {
  const auto m = TrainKneserNey(RandomCorpus(1000, 12, 8), 3);
  const auto test = RandomCorpus(200, 14, 9);
  for (const auto& s : test) {
    LmState st = m.BeginState();
    std::vector<WordId> hist{NGramModel::kBosId};
    double whole = 0.0;
    for (const auto& w : s) {
      st = m.Score(st, w).second;
      whole += m.LogProb10(hist, m.Id(w));
      hist.push_back(m.Id(w));
    }
    whole += m.LogProb10(hist, NGramModel::kEosId);
    st = m.Score(st, NGramModel::kEosId).second;
    EXPECT_EQ(st.log10_total, whole);
    EXPECT_EQ(m.SentenceLogProb10(s), whole);
  }
}

TEST(PerplexityTest, UniformUnigram) {
  // Hand-built uniform model over {<unk>, </s>, x, y}.
  NGramModel m(1);
  m.AddWord("x");
  m.AddWord("y");
  for (WordId w : {0, 2, 3, 4}) m.mutable_table(1)[{w}].log10_prob = std::log10(0.25);
  m.mutable_table(1)[{NGramModel::kBosId}].log10_prob = NGramModel::kLog10Zero;
  EXPECT_NEAR(Perplexity(m, {{"x", "y", "x"}, {"y"}}), 4.0, 1e-12);
}

TEST(PerplexityTest, TrainingCorpusBound) {
  const auto corpus = RandomCorpus(500, 10, 10);
  const auto m = TrainKneserNey(corpus, 1);
  EXPECT_LE(Perplexity(m, corpus), static_cast<double>(m.vocab_size()));
}

TEST(PerplexityTest, TwentyTokensMatchOracle) {
  const auto corpus = RandomCorpus(20, 5, 11);
  const auto m = TrainKneserNey(corpus, 2);
  const testing::KneserNeyOracle oracle(corpus, 2);
  EXPECT_NEAR(Perplexity(m, corpus) / oracle.Perplexity(corpus), 1.0, 1e-6);
}

TEST(ArpaTest, RoundTrip) {
  const auto m = TrainKneserNey(Split({"then 你 做 what", "what 你 做", "then what"}), 3);
  std::stringstream ss;
  WriteArpa(ss, m);
  const auto r = ReadArpa(ss);
  ASSERT_EQ(r.order(), 3);
  for (int k = 1; k <= 3; ++k) {
    ASSERT_EQ(r.table(k).size(), m.table(k).size());
    for (const auto& [g, e] : m.table(k)) {
      NGram mapped;
      for (WordId w : g) mapped.push_back(r.Id(m.word(w)));
      const auto* f = r.Find(mapped);
      ASSERT_NE(f, nullptr);
      EXPECT_NEAR(f->log10_prob, e.log10_prob, 1e-6);
      EXPECT_NEAR(f->log10_backoff, e.log10_backoff, 1e-6);
    }
  }
  EXPECT_NEAR(r.SentenceLogProb10({"then", "你"}), m.SentenceLogProb10({"then", "你"}), 1e-6);
}

std::string SmallArpa() {
  const auto m = TrainKneserNey(Split({"a b", "b a"}), 2);
  std::ostringstream os;
  WriteArpa(os, m);
  return os.str();
}

void ExpectMalformed(const std::string& text) {
  std::istringstream is(text);
  EXPECT_THROW(ReadArpa(is), MalformedArpa) << text;
}

TEST(ArpaTest, MissingEndMarker) {
  std::string s = SmallArpa();
  s.erase(s.find("\\end\\"));
  ExpectMalformed(s);
}

TEST(ArpaTest, CountMismatch) {
  std::string s = SmallArpa();
  const auto pos = s.find("ngram 2=");
  const auto eol = s.find('\n', pos);
  const int n = std::stoi(s.substr(pos + 8, eol - pos - 8));
  s.replace(pos, eol - pos, "ngram 2=" + std::to_string(n + 1));
  ExpectMalformed(s);
}

TEST(ArpaTest, OtherDefects) {
  ExpectMalformed("");
  ExpectMalformed("\\data\\\nngram 1=1\n\n\\1-grams:\nnot-a-number <unk>\n\n\\end\\\n");
  ExpectMalformed("\\data\\\nngram 1=1\n\n\\1-grams:\n-1.0 <unk>\n\n\\end\\\n");  // no <s>, </s>
  try {
    std::istringstream is("\\data\\\nngram 1=x\n");
    ReadArpa(is);
    FAIL();
  } catch (const MalformedArpa& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

}  // namespace
}  // namespace csasr
