// csasr/dataset.hpp

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
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/features.hpp"

namespace csasr {

enum class Language { kL1, kL2, kMixed };

inline const char* LanguageName(Language l) {
  switch (l) {
    case Language::kL1: return "L1";
    case Language::kL2: return "L2";
    case Language::kMixed: return "mixed";
  }
  return "?";
}

inline Language ParseLanguage(const std::string& s) {
  if (s == "L1") return Language::kL1;
  if (s == "L2") return Language::kL2;
  if (s == "mixed") return Language::kMixed;
  throw Error("unknown language tag '" + s + "'");
}

struct ManifestEntry {
  std::string path;        // .wav or FEAT file
  std::string transcript;  // normalized
  Language language = Language::kMixed;
  double duration_ms = 0.0;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using DatasetManifest = std::vector<ManifestEntry>;

// CSV with header "path,transcript,language,duration_ms". Normalized
// transcripts never contain commas, so fields are not quoted.
inline void WriteManifest(std::ostream& os, const DatasetManifest& m) {
  os << "path,transcript,language,duration_ms\n";
  for (const auto& e : m)
    os << e.path << ',' << e.transcript << ',' << LanguageName(e.language) << ','
       << static_cast<long long>(std::llround(e.duration_ms)) << '\n';
}

inline DatasetManifest ReadManifest(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("manifest is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,transcript,language,duration_ms")
    throw Error("manifest header must be 'path,transcript,language,duration_ms'");
  DatasetManifest m;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 4)
      throw Error("manifest line " + std::to_string(lineno) + ": expected 4 fields");
    ManifestEntry e;
    e.path = f[0];
    e.transcript = f[1];
    e.language = ParseLanguage(f[2]);
    try {
      e.duration_ms = std::stod(f[3]);
    } catch (const std::logic_error&) {
      throw Error("manifest line " + std::to_string(lineno) + ": bad duration");
    }
    m.push_back(std::move(e));
  }
  return m;
}

inline void SaveManifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write manifest " + path);
  WriteManifest(os, m);
}

inline DatasetManifest LoadManifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open manifest " + path);
  return ReadManifest(is);
}

/// An utterance ready for training: features plus the encoded transcript.
struct Utterance {
  FeatureFrames features;
  LabelSequence labels;
  std::string transcript;
  Language language = Language::kMixed;
  double duration_ms = 0.0;
};

/// Sorts by duration (stable), cuts into buckets of `batch_size` and shuffles
/// the bucket order with `seed`. Returns indices into `durations`.
inline std::vector<std::vector<std::size_t>> MakeBatches(std::span<const double> durations,
                                                         std::size_t batch_size,
                                                         std::uint64_t seed) {
  if (batch_size < 1) throw Error("batch size must be >= 1");
  std::vector<std::size_t> idx(durations.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });
  std::vector<std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < idx.size(); i += batch_size)
    buckets.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                         idx.begin() + static_cast<std::ptrdiff_t>(std::min(i + batch_size, idx.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(buckets.begin(), buckets.end(), rng);
  return buckets;
}

template <typename Entries>
std::vector<double> Durations(const Entries& entries) {
  std::vector<double> d;
  d.reserve(entries.size());
  for (const auto& e : entries) d.push_back(e.duration_ms);
  return d;
}

/// Duration-stratified subset: the duration-sorted list is cut into
/// ceil(n * fraction) contiguous strata and one member is drawn from each.
/// Returned indices are ascending.
inline std::vector<std::size_t> StratifiedSubset(std::span<const double> durations,
                                                 double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("fraction must be in (0, 1]");
  const std::size_t n = durations.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (fraction == 1.0 || n == 0) return idx;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction - 1e-9)));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t lo = s * n / k, hi = (s + 1) * n / k;
    std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
    out.push_back(idx[pick(rng)]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace csasr
