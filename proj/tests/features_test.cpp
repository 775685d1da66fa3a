// tests/features_test.cpp

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
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "csasr/features.hpp"
#include "gtest/gtest.h"

namespace csasr {
namespace {

std::vector<double> Sine(double hz, std::size_t n, double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / kSampleRate);
  return x;
}

TEST(ExtractFeaturesTest, SineLandsInExpectedBin) {
  const auto f = ExtractFeatures(Sine(1000.0, 1600));
  ASSERT_EQ(f.dim(), 81u);
  for (std::size_t t = 0; t < f.size(); ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < f.dim(); ++k)
      if (f.frames(t, k) > f.frames(t, best)) best = k;
    EXPECT_EQ(best, 20u);
    // 160-sample window, amplitude 0.5: |X[20]| = 0.5 * 160 / 2.
    EXPECT_NEAR(f.frames(t, 20), std::log(40.0), 1e-9);
  }
}

TEST(ExtractFeaturesTest, SilenceIsFloor) {
  const auto f = ExtractFeatures(std::vector<double>(480, 0.0));
  for (double v : f.frames.data()) EXPECT_EQ(v, std::log(kLogFloor));
}

TEST(ExtractFeaturesTest, FrameCount) {
  EXPECT_EQ(ExtractFeatures(std::vector<double>(1600, 0.1)).size(), 10u);
  EXPECT_EQ(ExtractFeatures(std::vector<double>(1759, 0.1)).size(), 10u);
  EXPECT_EQ(ExtractFeatures(std::vector<double>(160, 0.1)).size(), 1u);
  EXPECT_THROW(ExtractFeatures(std::vector<double>(159, 0.1)), TooShort);
}

TEST(FeatureNormalizerTest, ZeroMeanUnitVariance) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(3.0, 2.0);
  std::vector<FeatureFrames> data;
  for (int u = 0; u < 3; ++u) {
    FeatureFrames f{Matrix(50, 4)};
    for (double& x : f.frames.data()) x = n(rng);
    for (std::size_t t = 0; t < 50; ++t) f.frames(t, 3) = 7.0;  // constant dimension
    data.push_back(f);
  }
  const auto norm = FeatureNormalizer::Fit(data);
  std::vector<double> mean(4, 0.0), sq(4, 0.0);
  for (const auto& f : data) {
    const auto g = norm.Apply(f);
    for (std::size_t t = 0; t < g.size(); ++t)
      for (std::size_t k = 0; k < 4; ++k) {
        mean[k] += g.frames(t, k) / 150;
        sq[k] += g.frames(t, k) * g.frames(t, k) / 150;
      }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(mean[k], 0.0, 1e-12);
    EXPECT_NEAR(sq[k], 1.0, 1e-9);
  }
  EXPECT_NEAR(mean[3], 0.0, 1e-12);
  EXPECT_THROW(norm.Apply(FeatureFrames{Matrix(2, 5)}), ShapeMismatch);
}

TEST(FeatureFileTest, RoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  FeatureFrames f{Matrix(6, 5)};
  for (double& x : f.frames.data()) x = n(rng);
  std::stringstream ss;
  WriteFeatures(ss, f);
  EXPECT_EQ(ReadFeatures(ss), f);
  std::istringstream bad("FEAT v1 T=2 F=2\n1 2\n");
  EXPECT_THROW(ReadFeatures(bad), Error);
}

TEST(WavTest, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "csasr_wav_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "tone.wav").string();
  const auto x = Sine(440.0, 800, 0.8);
  WriteWav(path, x);
  const auto y = ReadWav(path);
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 0.5 / 32768);
  EXPECT_THROW(ReadWav((dir / "missing.wav").string()), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace csasr
