// csasr/synth.hpp

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

#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/dataset.hpp"
#include "csasr/features.hpp"
#include "csasr/vocab.hpp"

namespace csasr {

class MissingTemplate : public Error {
 public:
  explicit MissingTemplate(Label id)
      : Error("no synthetic template for grapheme id " + std::to_string(id)) {}
};

struct GraphemeTemplate {
  std::vector<double> mean;  // F-dim spectral template
  int frames = 3;
};

/// Generative description of the synthetic bilingual corpora.
struct SynthSpec {
  std::uint64_t seed = 7;
  std::size_t dim = kFeatureDim;
  double sigma = 0.3;       // per-dimension Gaussian noise
  double p_switch = 0.3;    // language switch probability per word boundary
  std::vector<std::string> l1_words;  // Latin lexicon
  std::vector<std::string> l2_words;  // CJK lexicon (space-free words)
  std::map<Label, GraphemeTemplate> templates;

  /// Every pair of templates must be further apart than 3 sigma sqrt(F).
  void Validate() const {
    if (p_switch < 0.0 || p_switch > 1.0) throw Error("switch probability must be in [0, 1]");
    const double bound = 3.0 * sigma * std::sqrt(static_cast<double>(dim));
    for (auto a = templates.begin(); a != templates.end(); ++a) {
      if (a->second.mean.size() != dim) throw Error("template dimension mismatch");
      if (a->second.frames < 1) throw Error("template duration must be >= 1 frame");
      for (auto b = std::next(a); b != templates.end(); ++b) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double diff = a->second.mean[k] - b->second.mean[k];
          d2 += diff * diff;
        }
        if (!(std::sqrt(d2) > bound))
          throw Error("templates " + std::to_string(a->first) + " and " +
                      std::to_string(b->first) + " are closer than 3 sigma sqrt(F)");
      }
    }
  }
};

inline std::vector<std::string> DefaultLatinLexicon() {
  return {"then", "what", "kind", "of",   "job",   "before", "friend",  "shy",
          "not",  "real", "sing", "time", "we",    "go",     "home",    "work",
          "like", "very", "nice", "but",  "so",    "can",    "make",    "this",
          "today", "movie", "lunch", "maybe", "later", "they", "want", "eat"};
}

inline std::vector<std::string> DefaultCjkLexicon() {
  return {"因为", "我", "的", "会", "很", "他", "这", "他们", "就是", "要", "人家",
          "陪", "唱", "觉得", "一个人", "你", "做", "什么", "可是", "帅", "鲜", "闲"};
}

/// Vocabulary covering the Latin base set and every CJK character of the lexicon.
inline GraphemeVocab SynthVocab(const SynthSpec& spec) {
  return BuildVocab(spec.l2_words);
}

/// Random N(0, 1) templates with durations of 2-4 frames for every non-blank
/// unit. `confusable` Latin/CJK pairs are then pulled together to 1.25x the
/// separation bound, mimicking phones shared across the two languages.
inline SynthSpec MakeSynthSpec(std::uint64_t seed, double sigma = 0.3, double p_switch = 0.3,
                               std::size_t confusable = 0) {
  SynthSpec spec;
  spec.seed = seed;
  spec.sigma = sigma;
  spec.p_switch = p_switch;
  spec.l1_words = DefaultLatinLexicon();
  spec.l2_words = DefaultCjkLexicon();
  const GraphemeVocab vocab = SynthVocab(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> frames(2, 4);
  std::vector<Label> latin, cjk;
  for (Label id = 1; id < static_cast<Label>(vocab.size()); ++id) {
    GraphemeTemplate t;
    t.mean.resize(spec.dim);
    for (double& x : t.mean) x = normal(rng);
    t.frames = frames(rng);
    spec.templates[id] = std::move(t);
    if (vocab.script_of(id) == Script::kLatin) latin.push_back(id);
    if (vocab.script_of(id) == Script::kCjk) cjk.push_back(id);
  }
  const double target = 1.25 * 3.0 * sigma * std::sqrt(static_cast<double>(spec.dim));
  for (std::size_t i = 0; i < confusable && i < latin.size() && i < cjk.size(); ++i) {
    const auto& base = spec.templates[latin[i]].mean;
    auto& other = spec.templates[cjk[i]].mean;
    double d2 = 0.0;
    for (std::size_t k = 0; k < spec.dim; ++k) d2 += (other[k] - base[k]) * (other[k] - base[k]);
    const double scale = target / std::sqrt(d2);
    for (std::size_t k = 0; k < spec.dim; ++k) other[k] = base[k] + (other[k] - base[k]) * scale;
  }
  spec.Validate();
  return spec;
}

namespace internal {

inline std::uint64_t Mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace internal

/// Concatenates the templates of `labels` (each repeated for its duration)
/// and adds N(0, sigma^2) noise. Deterministic in (seed, labels, variant).
inline FeatureFrames SynthUtterance(const SynthSpec& spec, std::span<const Label> labels,
                                    std::uint64_t variant = 0) {
  std::size_t T = 0;
  for (Label l : labels) {
    auto it = spec.templates.find(l);
    if (it == spec.templates.end()) throw MissingTemplate(l);
    T += static_cast<std::size_t>(it->second.frames);
  }
  std::uint64_t h = internal::Mix(spec.seed, variant);
  for (Label l : labels) h = internal::Mix(h, static_cast<std::uint64_t>(l));
  std::mt19937_64 rng(h);
  std::normal_distribution<double> noise(0.0, 1.0);
  FeatureFrames out{Matrix(T, spec.dim)};
  std::size_t t = 0;
  for (Label l : labels) {
    const auto& tpl = spec.templates.at(l);
    for (int f = 0; f < tpl.frames; ++f, ++t)
      for (std::size_t k = 0; k < spec.dim; ++k)
        out.frames(t, k) = tpl.mean[k] + (spec.sigma > 0.0 ? spec.sigma * noise(rng) : 0.0);
  }
  return out;
}

struct SynthTranscript {
  std::string text;
  std::size_t boundaries = 0;  // word boundaries
  std::size_t switches = 0;    // boundaries where the language changes
};

inline constexpr std::size_t kMinGraphemes = 3;
inline constexpr std::size_t kMaxGraphemes = 12;

/// Draws words from the lexicons until the next word would exceed a length
/// budget drawn from [3, 12] graphemes. Words are separated by single spaces.
template <typename Rng>
SynthTranscript SynthText(const SynthSpec& spec, Language language, Rng& rng) {
  auto grapheme_count = [](const std::string& w) { return DecodeUtf8(w).size(); };
  std::uniform_int_distribution<std::size_t> budget_dist(kMinGraphemes, kMaxGraphemes);
  std::bernoulli_distribution coin(0.5), switch_coin(spec.p_switch);
  for (;;) {
    const std::size_t budget = budget_dist(rng);
    bool latin = language == Language::kL1 || (language == Language::kMixed && coin(rng));
    SynthTranscript out;
    std::size_t length = 0;
    std::string prev;
    for (bool first = true;; first = false) {
      if (!first && language == Language::kMixed && switch_coin(rng)) latin = !latin;
      if (!first && length + 1 >= budget) break;
      const auto& lex = latin ? spec.l1_words : spec.l2_words;
      const std::size_t room = budget - length - (first ? 0 : 1);
      std::vector<const std::string*> fit;
      for (const auto& w : lex)
        if (grapheme_count(w) <= room && w != prev) fit.push_back(&w);
      if (fit.empty()) break;
      const std::string& w = *fit[std::uniform_int_distribution<std::size_t>(0, fit.size() - 1)(rng)];
      if (!first) {
        out.text += ' ';
        ++length;
        ++out.boundaries;
        const bool prev_latin = IsLatinGrapheme(DecodeUtf8(prev)[0].value);
        if (prev_latin != latin) ++out.switches;
      }
      out.text += w;
      length += grapheme_count(w);
      prev = w;
    }
    if (length >= kMinGraphemes) return out;
  }
}

/// `count` synthetic utterances of one language role. Utterance i uses noise
/// variant (stream << 32) + i so that corpora drawn from distinct streams
/// never share noise.
inline std::vector<Utterance> SynthCorpus(const SynthSpec& spec, const GraphemeVocab& vocab,
                                          Language language, std::size_t count,
                                          std::uint64_t stream, SynthTranscript* stats = nullptr) {
  if (count < 1) throw Error("synthetic corpus needs count >= 1");
  std::mt19937_64 rng(internal::Mix(spec.seed, 0xC0FFEEULL + stream));
  std::vector<Utterance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SynthTranscript st = SynthText(spec, language, rng);
    if (stats) {
      stats->boundaries += st.boundaries;
      stats->switches += st.switches;
    }
    Utterance u;
    u.transcript = std::move(st.text);
    u.labels = Encode(u.transcript, vocab);
    u.language = language;
    u.features = SynthUtterance(spec, u.labels, (stream << 32) + i);
    u.duration_ms = 20.0 * static_cast<double>(u.features.size());
    out.push_back(std::move(u));
  }
  return out;
}

/// Nearest-template label per frame, then repeat merging. Solves the data
/// exactly at sigma = 0.
inline LabelSequence NearestTemplateDecode(const SynthSpec& spec, const FeatureFrames& f) {
  LabelSequence out;
  Label prev = kBlank;
  for (std::size_t t = 0; t < f.size(); ++t) {
    Label best = kBlank;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, tpl] : spec.templates) {
      double d = 0.0;
      for (std::size_t k = 0; k < spec.dim; ++k) {
        const double diff = f.frames(t, k) - tpl.mean[k];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    if (best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace csasr
