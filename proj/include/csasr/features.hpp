// csasr/features.hpp

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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/ctc.hpp"

namespace csasr {

inline constexpr int kSampleRate = 8000;
inline constexpr std::size_t kWindow = 160;  // 20 ms at 8 kHz
inline constexpr std::size_t kStride = 160;  // non-overlapping
inline constexpr std::size_t kFeatureDim = kWindow / 2 + 1;
inline constexpr double kLogFloor = 1e-10;

class TooShort : public Error {
 public:
  explicit TooShort(std::size_t samples)
      : Error("waveform has " + std::to_string(samples) + " samples, need at least " +
              std::to_string(kWindow)) {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// T x F log-spectrogram frames.
struct FeatureFrames {
  Matrix frames;
  std::size_t size() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
  friend bool operator==(const FeatureFrames&, const FeatureFrames&) = default;
};

/// log(|DFT| + 1e-10) of each non-overlapping 160-sample window; trailing
/// samples that do not fill a window are dropped. No normalization here.
inline FeatureFrames ExtractFeatures(std::span<const double> samples) {
  if (samples.size() < kWindow) throw TooShort(samples.size());
  static const auto twiddles = [] {
    std::vector<double> cs(kWindow), sn(kWindow);
    for (std::size_t n = 0; n < kWindow; ++n) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(n) / kWindow;
      cs[n] = std::cos(a);
      sn[n] = std::sin(a);
    }
    return std::pair{cs, sn};
  }();
  const auto& [cs, sn] = twiddles;
  const std::size_t T = (samples.size() - kWindow) / kStride + 1;
  FeatureFrames out{Matrix(T, kFeatureDim)};
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = samples.data() + t * kStride;
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t n = 0; n < kWindow; ++n) {
        const std::size_t idx = (k * n) % kWindow;
        re += x[n] * cs[idx];
        im -= x[n] * sn[idx];
      }
      out.frames(t, k) = std::log(std::hypot(re, im) + kLogFloor);
    }
  }
  return out;
}

/// Per-dimension mean/variance normalization fitted on a training set.
class FeatureNormalizer {
 public:
  FeatureNormalizer() = default;
  FeatureNormalizer(std::vector<double> mean, std::vector<double> stddev)
      : mean_(std::move(mean)), stddev_(std::move(stddev)) {}

  static FeatureNormalizer Fit(std::span<const FeatureFrames> data) {
    if (data.empty()) throw Error("cannot fit a normalizer on no data");
    const std::size_t F = data[0].dim();
    std::vector<double> sum(F, 0.0), sq(F, 0.0);
    double n = 0.0;
    for (const auto& f : data) {
      if (f.dim() != F) throw ShapeMismatch("feature dimension differs across utterances");
      for (std::size_t t = 0; t < f.size(); ++t)
        for (std::size_t k = 0; k < F; ++k) {
          sum[k] += f.frames(t, k);
          sq[k] += f.frames(t, k) * f.frames(t, k);
        }
      n += static_cast<double>(f.size());
    }
    std::vector<double> mean(F), sd(F);
    for (std::size_t k = 0; k < F; ++k) {
      mean[k] = sum[k] / n;
      const double var = std::max(sq[k] / n - mean[k] * mean[k], 0.0);
      // Constant dimensions (e.g. silence) are only centred.
      sd[k] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return FeatureNormalizer(std::move(mean), std::move(sd));
  }

  FeatureFrames Apply(const FeatureFrames& in) const {
    if (in.dim() != mean_.size()) throw ShapeMismatch("normalizer dimension mismatch");
    FeatureFrames out = in;
    for (std::size_t t = 0; t < in.size(); ++t)
      for (std::size_t k = 0; k < in.dim(); ++k)
        out.frames(t, k) = (in.frames(t, k) - mean_[k]) / stddev_[k];
    return out;
  }

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }

 private:
  std::vector<double> mean_, stddev_;
};

// ---------------------------------------------------------------------------
// Feature files: "FEAT v1 T=<T> F=<F>" then T rows of F values.

inline void WriteFeatures(std::ostream& os, const FeatureFrames& f) {
  os << "FEAT v1 T=" << f.size() << " F=" << f.dim() << '\n';
  char buf[32];
  for (std::size_t t = 0; t < f.size(); ++t) {
    for (std::size_t k = 0; k < f.dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", f.frames(t, k));
      if (k) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

inline FeatureFrames ReadFeatures(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error("empty feature file");
  const auto [T, F] = internal::ParseShapeHeader(header, "FEAT", 'T', 'F');
  return FeatureFrames{internal::ReadRows(is, T, F, "FEAT")};
}

inline void SaveFeatures(const std::string& path, const FeatureFrames& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write feature file " + path);
  WriteFeatures(os, f);
}

inline FeatureFrames LoadFeatures(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open feature file " + path);
  return ReadFeatures(is);
}

// ---------------------------------------------------------------------------
// Mono 16-bit PCM WAV at 8 kHz.

inline void WriteWav(const std::string& path, std::span<const double> samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write WAV file " + path);
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [&](std::uint16_t v) {
    os.put(static_cast<char>(v & 0xFF));
    os.put(static_cast<char>(v >> 8));
  };
  const auto bytes = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  u32(36 + bytes);
  os.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(1);
  u32(kSampleRate);
  u32(kSampleRate * 2);
  u16(2);
  u16(16);
  os.write("data", 4);
  u32(bytes);
  for (double x : samples) {
    const long c = std::clamp(std::lround(x * 32768.0), -32768L, 32767L);
    u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
  }
}

inline std::vector<double> ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open WAV file " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  auto u16 = [&](std::size_t o) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(buf[o]) |
                                      (static_cast<unsigned char>(buf[o + 1]) << 8));
  };
  auto u32 = [&](std::size_t o) {
    return static_cast<std::uint32_t>(u16(o)) | (static_cast<std::uint32_t>(u16(o + 2)) << 16);
  };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw Error(path + ": not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const std::uint32_t len = u32(pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > buf.size()) throw Error(path + ": truncated chunk " + id);
    if (id == "fmt ") {
      if (len < 16 || u16(body) != 1 || u16(body + 2) != 1 || u32(body + 4) != kSampleRate ||
          u16(body + 14) != 16)
        throw Error(path + ": expected mono 16-bit PCM at 8 kHz");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw Error(path + ": data chunk before fmt chunk");
      std::vector<double> out(len / 2);
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::int16_t>(u16(body + 2 * i)) / 32768.0;
      return out;
    }
    pos = body + len + (len & 1);
  }
  throw Error(path + ": no data chunk");
}

}  // namespace csasr
