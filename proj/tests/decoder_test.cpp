// tests/decoder_test.cpp

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
#include <numbers>
#include <random>

#include "csasr/decoder.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace csasr {
namespace {

using testing::ExhaustiveDecode;
using testing::RandomGrid;
using Corpus = std::vector<std::vector<std::string>>;

PosteriorGrid OneHot(const std::vector<Label>& path, std::size_t V, double p = 1.0) {
  Matrix m(path.size(), V, kLogZero);
  for (std::size_t t = 0; t < path.size(); ++t) {
    for (std::size_t v = 0; v < V; ++v) m(t, v) = std::log((1.0 - p) / static_cast<double>(V - 1));
    m(t, static_cast<std::size_t>(path[t])) = std::log(p);
  }
  return PosteriorGrid(m);
}

const GraphemeVocab& SmallVocab() {
  static const GraphemeVocab v({"<blank>", "a", "b", " ", "你"});
  return v;
}

TEST(GreedyDecodeTest, Examples) {
  EXPECT_EQ(GreedyDecode(OneHot({1, 0, 2}, 3)), (LabelSequence{1, 2}));
  EXPECT_EQ(GreedyDecode(OneHot({0, 0, 0}, 3)), LabelSequence{});
  std::mt19937_64 rng(1);
  const auto g = RandomGrid(3, 4, rng);
  LabelSequence path;
  for (std::size_t t = 0; t < 3; ++t) {
    Label best = 0;
    for (Label v = 1; v < 4; ++v)
      if (g(t, v) > g(t, best)) best = v;
    path.push_back(best);
  }
  EXPECT_EQ(GreedyDecode(g), Collapse(path));
}

TEST(FusedScoreTest, Identity) {
  const auto lm = TrainKneserNey(Corpus{{"then", "你"}}, 2);
  EXPECT_EQ(FusedScore("then 你", -3.5, &lm, {0.0, 0.0, 10}), -3.5);
  EXPECT_EQ(FusedScore("then 你", -3.5, nullptr, {0.2, 0.0, 10}), -3.5);
}

TEST(FusedScoreTest, EmptyTranscript) {
  const auto lm = TrainKneserNey(Corpus{{"a"}, {}}, 2);
  const double eos = lm.LogProb10(std::vector<WordId>{NGramModel::kBosId}, NGramModel::kEosId);
  EXPECT_NEAR(FusedScore("", -1.0, &lm, {0.2, 1.0, 10}), -1.0 + 0.2 * std::log(10.0) * eos, 1e-12);
}

TEST(FusedScoreTest, HandSummed) {
  // Unigram model: {<unk>, </s>, then, 你}; hand-set probabilities.
  NGramModel lm(1);
  const WordId then = lm.AddWord("then"), ni = lm.AddWord("你");
  auto& t = lm.mutable_table(1);
  t[{NGramModel::kUnkId}].log10_prob = std::log10(0.1);
  t[{NGramModel::kBosId}].log10_prob = NGramModel::kLog10Zero;
  t[{NGramModel::kEosId}].log10_prob = std::log10(0.2);
  t[{then}].log10_prob = std::log10(0.3);
  t[{ni}].log10_prob = std::log10(0.4);
  const double expect = -2.0 + 0.2 * (std::log(0.3) + std::log(0.4) + std::log(0.2)) + 1.0 * 2;
  EXPECT_NEAR(FusedScore("then 你", -2.0, &lm, {0.2, 1.0, 100}), expect, 1e-10);
  EXPECT_NEAR(FusedScore("then你", -2.0, &lm, {0.2, 1.0, 100}), expect, 1e-10);
}

TEST(FusedScoreTest, AffineInWeights) {
  const auto lm = TrainKneserNey(Corpus{{"a", "b"}, {"b", "你"}}, 2);
  const std::string y = "a b你";
  const double c = -4.0;
  const double f00 = FusedScore(y, c, &lm, {0.0, 0.0, 1});
  const double a_coef = FusedScore(y, c, &lm, {1.0, 0.0, 1}) - f00;
  const double b_coef = FusedScore(y, c, &lm, {0.0, 1.0, 1}) - f00;
  EXPECT_NEAR(b_coef, 3.0, 1e-12);
  EXPECT_NEAR(a_coef, std::numbers::ln10 * lm.SentenceLogProb10({"a", "b", "你"}), 1e-12);
  EXPECT_NEAR(FusedScore(y, c, &lm, {0.7, -2.5, 1}), f00 + 0.7 * a_coef - 2.5 * b_coef, 1e-12);
}

TEST(BeamDecodeTest, DefaultsRecorded) {
  const FusionConfig cfg;
  EXPECT_EQ(cfg.alpha, 0.2);
  EXPECT_EQ(cfg.beta, 1.0);
  EXPECT_EQ(cfg.beam_width, 100);
  const auto r = BeamDecode(OneHot({1, 0, 2}, 5, 0.9), SmallVocab(), nullptr, cfg);
  EXPECT_EQ(r.config.alpha, 0.2);
  EXPECT_EQ(r.config.beam_width, 100);
  EXPECT_FALSE(r.used_lm);
}

TEST(BeamDecodeTest, InvalidConfig) {
  EXPECT_THROW(BeamDecode(OneHot({1}, 5), SmallVocab(), nullptr, {0.2, 1.0, 0}), Error);
  EXPECT_THROW(BeamDecode(OneHot({1}, 3), SmallVocab(), nullptr, {}), Error);
}

TEST(BeamDecodeTest, WidthOneMatchesGreedyOnPeakedGrids) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<Label> lab(0, 4);
  for (int i = 0; i < 100; ++i) {
    std::vector<Label> path(8);
    for (auto& l : path) l = lab(rng);
    const auto grid = OneHot(path, 5, 0.95);
    const auto r = BeamDecode(grid, SmallVocab(), nullptr, {0.0, 0.0, 1});
    EXPECT_EQ(r.nbest[0].labels, GreedyDecode(grid));
  }
}

TEST(BeamDecodeTest, ExhaustiveWithoutLm) {
  const GraphemeVocab vocab({"<blank>", "a", "你"});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto grid = RandomGrid(1 + i % 5, 3, rng);
    const auto oracle = ExhaustiveDecode(grid, vocab, nullptr, 0.0, 0.0);
    const auto r = BeamDecode(grid, vocab, nullptr, {0.0, 0.0, 1000});
    ASSERT_EQ(r.nbest[0].labels, oracle.labels);
    EXPECT_NEAR(r.nbest[0].score, oracle.q, 1e-9);
  }
}

TEST(BeamDecodeTest, ExhaustiveWithUnigramLm) {
  const GraphemeVocab vocab({"<blank>", "a", " "});
  const auto lm = TrainKneserNey(Corpus{{"a", "aa"}, {"a"}, {"aaa", "a"}}, 1);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto grid = RandomGrid(1 + i % 5, 3, rng);
    const auto oracle = ExhaustiveDecode(grid, vocab, &lm, 0.2, 1.0);
    const auto r = BeamDecode(grid, vocab, &lm, {0.2, 1.0, 1000});
    ASSERT_EQ(r.nbest[0].labels, oracle.labels);
    EXPECT_NEAR(r.nbest[0].score, oracle.q, 1e-9);
  }
}

TEST(BeamDecodeTest, ReportedFieldsAgree) {
  const auto lm = TrainKneserNey(Corpus{{"a", "b"}, {"你", "b"}}, 3);
  std::mt19937_64 rng(5);
  const FusionConfig cfg{0.3, 0.5, 50};
  for (int i = 0; i < 20; ++i) {
    const auto grid = RandomGrid(10, 5, rng);
    const auto r = BeamDecode(grid, SmallVocab(), &lm, cfg, 5);
    ASSERT_FALSE(r.nbest.empty());
    EXPECT_TRUE(r.used_lm);
    for (std::size_t k = 0; k < r.nbest.size(); ++k) {
      const auto& h = r.nbest[k];
      EXPECT_LE(h.ctc_logp, 0.0);
      EXPECT_EQ(h.word_count, static_cast<int>(TokenizeLm(h.text).size()));
      EXPECT_NEAR(h.score, FusedScore(h.text, h.ctc_logp, &lm, cfg), 1e-9);
      if (k > 0) EXPECT_GE(r.nbest[k - 1].score, h.score);
    }
  }
}

TEST(BeamDecodeTest, WiderBeamNeverScoresWorseThanExhaustive) {
  // The widest beam is exact; any narrower beam can only reach a lower score.
  std::mt19937_64 rng(6);
  const GraphemeVocab vocab({"<blank>", "a", " "});
  for (int i = 0; i < 50; ++i) {
    const auto grid = RandomGrid(5, 3, rng);
    const double exact = BeamDecode(grid, vocab, nullptr, {0.0, 1.0, 1000}).nbest[0].score;
    for (int w : {1, 2, 4, 8})
      EXPECT_LE(BeamDecode(grid, vocab, nullptr, {0.0, 1.0, w}).nbest[0].score, exact + 1e-12);
  }
}

TEST(BeamDecodeTest, TiesBreakLexicographically) {
  // Uniform single frame over {blank, a, b}: every length <= 1 output ties.
  const auto grid = PosteriorGrid::FromLogits(Matrix(1, 3, 0.0));
  const GraphemeVocab vocab({"<blank>", "a", "b"});
  const auto r = BeamDecode(grid, vocab, nullptr, {0.0, 0.0, 10}, 3);
  ASSERT_EQ(r.nbest.size(), 3u);
  EXPECT_EQ(r.nbest[0].labels, LabelSequence{});
  EXPECT_EQ(r.nbest[1].labels, LabelSequence{1});
  EXPECT_EQ(r.nbest[2].labels, LabelSequence{2});
}

TEST(BeamDecodeTest, Deterministic) {
  std::mt19937_64 rng(7);
  const auto grid = RandomGrid(30, 5, rng);
  const auto lm = TrainKneserNey(Corpus{{"a", "b"}, {"你"}}, 2);
  const auto a = BeamDecode(grid, SmallVocab(), &lm, {0.2, 1.0, 8}, 8);
  const auto b = BeamDecode(grid, SmallVocab(), &lm, {0.2, 1.0, 8}, 8);
  ASSERT_EQ(a.nbest.size(), b.nbest.size());
  for (std::size_t i = 0; i < a.nbest.size(); ++i) {
    EXPECT_EQ(a.nbest[i].labels, b.nbest[i].labels);
    EXPECT_EQ(a.nbest[i].score, b.nbest[i].score);
  }
}

}  // namespace
}  // namespace csasr
