// tests/ctc_test.cpp

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

#include "csasr/ctc.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace csasr {
namespace {

using testing::RandomFeasibleTarget;
using testing::RandomGrid;

PosteriorGrid FromProbs(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t v = 0; v < rows[t].size(); ++v) m(t, v) = std::log(rows[t][v]);
  return PosteriorGrid(m);
}

TEST(CollapseTest, Examples) {
  EXPECT_EQ(Collapse(LabelSequence{1, 1, 0, 2}), (LabelSequence{1, 2}));
  EXPECT_EQ(Collapse(LabelSequence{0, 0}), LabelSequence{});
  EXPECT_EQ(Collapse(LabelSequence{1, 0, 1}), (LabelSequence{1, 1}));
}

TEST(PosteriorGridTest, Invariants) {
  EXPECT_THROW(PosteriorGrid(Matrix(0, 2)), Error);
  EXPECT_THROW(PosteriorGrid(Matrix(1, 1)), Error);
  Matrix bad(1, 2, std::log(0.6));
  EXPECT_THROW(PosteriorGrid{bad}, Error);
  EXPECT_NO_THROW(FromProbs({{0.3, 0.7}}));
}

TEST(CtcLossTest, SinglePath) {
  const auto r = CtcLoss(FromProbs({{0.3, 0.7}}), LabelSequence{1});
  EXPECT_NEAR(r.loss, -std::log(0.7), 1e-15);
}

TEST(CtcLossTest, TwoFramesUniform) {
  // Paths collapsing to [a]: blank.a, a.blank, a.a -> 3 * 0.25.
  const auto grid = FromProbs({{0.5, 0.5}, {0.5, 0.5}});
  const auto r = CtcLoss(grid, LabelSequence{1});
  EXPECT_NEAR(r.loss, -std::log(0.75), 1e-15);
  EXPECT_NEAR(CtcLossBruteforce(grid, LabelSequence{1}), r.loss, 1e-12);
}

TEST(CtcLossTest, EmptyTargetIsAllBlankPath) {
  std::mt19937_64 rng(1);
  const auto grid = RandomGrid(7, 4, rng);
  double expect = 0.0;
  for (std::size_t t = 0; t < 7; ++t) expect -= grid(t, kBlank);
  EXPECT_NEAR(CtcLoss(grid, LabelSequence{}).loss, expect, 1e-12);
}

TEST(CtcLossTest, InfeasibleTargetIsAnError) {
  std::mt19937_64 rng(2);
  EXPECT_THROW(CtcLoss(RandomGrid(1, 2, rng), LabelSequence{1, 1}), InfeasibleTarget);
  EXPECT_THROW(CtcLoss(RandomGrid(2, 3, rng), LabelSequence{1, 1}), InfeasibleTarget);
  EXPECT_NO_THROW(CtcLoss(RandomGrid(3, 3, rng), LabelSequence{1, 1}));
  EXPECT_THROW(CtcLoss(RandomGrid(3, 3, rng), LabelSequence{0}), Error);
  EXPECT_THROW(CtcLoss(RandomGrid(3, 3, rng), LabelSequence{3}), Error);
  EXPECT_THROW(CtcLossBruteforce(RandomGrid(1, 2, rng), LabelSequence{1, 1}), InfeasibleTarget);
}

TEST(CtcLossTest, BruteforceGuard) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(CtcLossBruteforce(RandomGrid(12, 4, rng), LabelSequence{1}), TooLarge);
}

TEST(CtcLossTest, MatchesBruteforceThreeByThree) {
  std::mt19937_64 rng(4);
  const auto grid = RandomGrid(3, 3, rng);
  EXPECT_NEAR(CtcLoss(grid, LabelSequence{1, 2}).loss,
              CtcLossBruteforce(grid, LabelSequence{1, 2}), 1e-10);
}

TEST(CtcLossTest, MatchesBruteforceOnRandomInstances) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> Td(1, 6), Vd(2, 4);
  for (int i = 0; i < 100; ++i) {
    const std::size_t T = Td(rng), V = Vd(rng);
    const auto grid = RandomGrid(T, V, rng);
    const auto target = RandomFeasibleTarget(T, V, 3, rng);
    ASSERT_NEAR(CtcLoss(grid, target).loss, CtcLossBruteforce(grid, target), 1e-10);
  }
}

// Central differences on a single logp entry followed by row renormalization.
double NumericGrad(const PosteriorGrid& grid, const LabelSequence& target, std::size_t t,
                   std::size_t v, double h) {
  auto shifted = [&](double delta) {
    Matrix m = grid.logp();
    m(t, v) += delta;
    return CtcLoss(PosteriorGrid::FromLogits(m), target).loss;
  };
  return (shifted(h) - shifted(-h)) / (2 * h);
}

TEST(CtcLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto grid = RandomGrid(5, 4, rng);
    const auto target = RandomFeasibleTarget(5, 4, 3, rng);
    const auto r = CtcLoss(grid, target);
    for (std::size_t t = 0; t < 5; ++t) {
      double row = 0.0;
      for (std::size_t v = 0; v < 4; ++v) {
        const double num = NumericGrad(grid, target, t, v, 1e-5);
        const double ana = r.grad(t, v);
        ASSERT_LE(std::abs(num - ana), 1e-4 * std::max(1.0, std::abs(ana)))
            << "t=" << t << " v=" << v;
        row += ana;
      }
      ASSERT_NEAR(row, 0.0, 1e-8);
    }
  }
}

TEST(CtcLossTest, CertainAlignmentHasZeroLoss) {
  // Alignment a a blank a b over V = 3, every frame one-hot (up to 1e-30).
  const LabelSequence path{1, 1, 0, 1, 2};
  Matrix m(path.size(), 3, std::log(1e-30));
  for (std::size_t t = 0; t < path.size(); ++t) m(t, static_cast<std::size_t>(path[t])) = 0.0;
  const auto grid = PosteriorGrid::FromLogits(m);
  EXPECT_NEAR(CtcLoss(grid, Collapse(path)).loss, 0.0, 1e-9);
}

TEST(CtcLossTest, LongSequencesDoNotUnderflow) {
  // T = 1000 with every probability between 1e-30 and 1.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(std::log(1e-30), 0.0);
  Matrix logits(1000, 5);
  for (double& x : logits.data()) x = u(rng);
  const auto grid = PosteriorGrid::FromLogits(logits);
  const auto target = RandomFeasibleTarget(1000, 5, 300, rng);
  const auto r = CtcLoss(grid, target);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_GT(r.loss, 0.0);
  for (std::size_t t = 0; t < 1000; t += 97) {
    double row = 0.0;
    for (double g : r.grad.row(t)) {
      ASSERT_TRUE(std::isfinite(g));
      row += g;
    }
    EXPECT_NEAR(row, 0.0, 1e-8);
  }
  // Consistency with the forward-only likelihood.
  EXPECT_NEAR(-CtcLogLikelihood(grid, target), r.loss, 1e-9 * r.loss);
}

TEST(CtcLossTest, ZeroProbabilityEntries) {
  Matrix m(3, 3, kLogZero);
  m(0, 1) = 0.0;
  m(1, 0) = 0.0;
  m(2, 2) = 0.0;
  const PosteriorGrid grid(m);
  EXPECT_NEAR(CtcLoss(grid, LabelSequence{1, 2}).loss, 0.0, 1e-12);
  EXPECT_THROW(CtcLoss(grid, LabelSequence{2, 1}), InfeasibleTarget);
}

TEST(GridFileTest, RoundTripAndValidation) {
  std::mt19937_64 rng(8);
  const auto grid = RandomGrid(4, 3, rng);
  std::stringstream ss;
  WriteGrid(ss, grid);
  EXPECT_EQ(ss.str().substr(0, 19), "CTCGRID v1 T=4 V=3\n");
  EXPECT_EQ(ReadGrid(ss), grid);

  std::istringstream bad_header("CTCGRID v2 T=1 V=2\n-0.5 -0.9\n");
  EXPECT_THROW(ReadGrid(bad_header), Error);
  std::istringstream unnormalized("CTCGRID v1 T=1 V=2\n-0.1 -0.1\n");
  EXPECT_THROW(ReadGrid(unnormalized), Error);
  std::istringstream short_rows("CTCGRID v1 T=2 V=2\n-0.69314718055994529 -0.69314718055994529\n");
  EXPECT_THROW(ReadGrid(short_rows), Error);
  std::istringstream wide("CTCGRID v1 T=1 V=2\n-0.69314718055994529 -0.69314718055994529 0\n");
  EXPECT_THROW(ReadGrid(wide), Error);
}

}  // namespace
}  // namespace csasr
