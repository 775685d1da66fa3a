// csasr/decoder.hpp

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
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/ctc.hpp"
#include "csasr/ngram_lm.hpp"
#include "csasr/vocab.hpp"

namespace csasr {

/// Shallow-fusion weights: Q(Y) = ln P_ctc(Y|X) + alpha ln p_lm(Y) + beta wc(Y).
struct FusionConfig {
  double alpha = 0.2;
  double beta = 1.0;
  int beam_width = 100;

  void Validate() const {
    if (beam_width < 1) throw Error("beam width must be >= 1");
    if (!std::isfinite(alpha) || !std::isfinite(beta))
      throw Error("fusion weights must be finite");
  }
};

struct DecodedHypothesis {
  LabelSequence labels;
  std::string text;
  double score = 0.0;      // fused Q(Y)
  double ctc_logp = 0.0;   // ln P_ctc as tracked by the search
  double lm_log10 = 0.0;   // log10 p_lm(Y), </s> included; 0 without a model
  int word_count = 0;
};

struct DecodeResult {
  std::vector<DecodedHypothesis> nbest;  // best first
  FusionConfig config;
  bool used_lm = false;
};

/// collapse(argmax per frame). Ties go to the lowest id.
inline LabelSequence GreedyDecode(const PosteriorGrid& grid) {
  LabelSequence path(grid.frames());
  for (std::size_t t = 0; t < grid.frames(); ++t) {
    const auto row = grid.frame(t);
    path[t] = static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return Collapse(path);
}

/// Fused score of a complete transcript. Words are tokenize_lm units, so a
/// CJK character counts as one word.
inline double FusedScore(std::string_view text, double ctc_logp, const NGramModel* lm,
                         const FusionConfig& cfg) {
  const std::vector<Token> tokens = TokenizeLm(text);
  double score = ctc_logp + cfg.beta * static_cast<double>(tokens.size());
  if (lm) score += cfg.alpha * std::numbers::ln10 * lm->SentenceLogProb10(Surfaces(tokens));
  return score;
}

namespace internal {

// Language-model bookkeeping that depends only on the label prefix. Latin
// letters accumulate in `pending` until a space, a CJK character or the end
// of the utterance completes the word.
struct PrefixTrack {
  LmState lm;
  int words = 0;
  std::string pending;
};

class PrefixScorer {
 public:
  PrefixScorer(const GraphemeVocab& vocab, const NGramModel* lm, const FusionConfig& cfg)
      : vocab_(vocab), lm_(lm), cfg_(cfg) {}

  PrefixTrack Begin() const {
    PrefixTrack t;
    if (lm_) t.lm = lm_->BeginState();
    return t;
  }

  PrefixTrack Extend(const PrefixTrack& parent, Label c) const {
    PrefixTrack t = parent;
    switch (vocab_.script_of(c)) {
      case Script::kLatin:
        t.pending += vocab_.unit(c);
        break;
      case Script::kSeparator:
        CompleteWord(t);
        break;
      case Script::kCjk:
        CompleteWord(t);
        Emit(t, vocab_.unit(c));
        break;
      case Script::kBlank:
        break;
    }
    return t;
  }

  /// Completes the trailing word and scores </s>.
  PrefixTrack Finish(const PrefixTrack& track) const {
    PrefixTrack t = track;
    CompleteWord(t);
    if (lm_) t.lm = lm_->Score(t.lm, NGramModel::kEosId).second;
    return t;
  }

  double Fuse(double ctc_logp, const PrefixTrack& t) const {
    double s = ctc_logp + cfg_.beta * static_cast<double>(t.words);
    if (lm_) s += cfg_.alpha * std::numbers::ln10 * t.lm.log10_total;
    return s;
  }

 private:
  void CompleteWord(PrefixTrack& t) const {
    if (t.pending.empty()) return;
    Emit(t, t.pending);
    t.pending.clear();
  }
  void Emit(PrefixTrack& t, const std::string& word) const {
    if (lm_) t.lm = lm_->Score(t.lm, word).second;
    ++t.words;
  }

  const GraphemeVocab& vocab_;
  const NGramModel* lm_;
  FusionConfig cfg_;
};

struct BeamEntry {
  double logp_blank = kLogZero;
  double logp_nonblank = kLogZero;
  PrefixTrack track;
  double total() const { return LogAdd(logp_blank, logp_nonblank); }
};

}  // namespace internal

/// CTC prefix beam search with shallow fusion. Each kept prefix splits its
/// mass into blank-ending and label-ending parts; the LM and word bonus are
/// applied once per completed token and prefixes are pruned on the fused
/// partial score. Ties are broken by ascending label sequence.
inline DecodeResult BeamDecode(const PosteriorGrid& grid, const GraphemeVocab& vocab,
                               const NGramModel* lm, const FusionConfig& cfg,
                               std::size_t nbest = 1) {
  cfg.Validate();
  if (grid.vocab_size() != vocab.size())
    throw Error("grid has " + std::to_string(grid.vocab_size()) +
                " columns but the vocabulary has " + std::to_string(vocab.size()) + " units");
  using internal::BeamEntry;
  const internal::PrefixScorer scorer(vocab, lm, cfg);
  const auto V = static_cast<Label>(grid.vocab_size());

  std::map<LabelSequence, BeamEntry> beam;
  beam[{}] = BeamEntry{0.0, kLogZero, scorer.Begin()};

  std::vector<std::pair<double, const LabelSequence*>> order;
  for (std::size_t t = 0; t < grid.frames(); ++t) {
    std::map<LabelSequence, BeamEntry> next;
    const double lp_blank = grid(t, kBlank);
    for (const auto& [prefix, e] : beam) {
      auto [self, fresh] = next.try_emplace(prefix);
      if (fresh) self->second.track = e.track;
      BeamEntry& stay = self->second;
      stay.logp_blank = LogAdd(stay.logp_blank, e.total() + lp_blank);
      const Label last = prefix.empty() ? kBlank : prefix.back();
      if (last != kBlank)
        stay.logp_nonblank = LogAdd(stay.logp_nonblank, e.logp_nonblank + grid(t, last));

      LabelSequence extended = prefix;
      extended.push_back(kBlank);
      for (Label c = 1; c < V; ++c) {
        const double lp = grid(t, c);
        if (lp == kLogZero) continue;
        extended.back() = c;
        auto [it, created] = next.try_emplace(extended);
        if (created) {
          auto known = beam.find(extended);
          it->second.track = known != beam.end() ? known->second.track : scorer.Extend(e.track, c);
        }
        const double from = c == last ? e.logp_blank : e.total();
        it->second.logp_nonblank = LogAdd(it->second.logp_nonblank, from + lp);
      }
    }

    order.clear();
    for (const auto& [prefix, e] : next) order.emplace_back(scorer.Fuse(e.total(), e.track), &prefix);
    const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(cfg.beam_width));
    // std::map iteration is already ascending by prefix, so a stable sort on
    // score alone yields the lexicographic tie-break.
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::map<LabelSequence, BeamEntry> kept;
    for (std::size_t i = 0; i < keep; ++i) {
      auto node = next.extract(*order[i].second);
      kept.insert(std::move(node));
    }
    beam = std::move(kept);
  }

  struct Final {
    double score;
    const LabelSequence* prefix;
    double ctc;
    internal::PrefixTrack track;
  };
  std::vector<Final> finals;
  for (const auto& [prefix, e] : beam) {
    auto done = scorer.Finish(e.track);
    const double ctc = e.total();
    finals.push_back({scorer.Fuse(ctc, done), &prefix, ctc, std::move(done)});
  }
  std::stable_sort(finals.begin(), finals.end(),
                   [](const Final& a, const Final& b) { return a.score > b.score; });

  DecodeResult result;
  result.config = cfg;
  result.used_lm = lm != nullptr;
  for (std::size_t i = 0; i < std::min(nbest, finals.size()); ++i) {
    DecodedHypothesis h;
    h.labels = *finals[i].prefix;
    h.text = DecodeIds(h.labels, vocab);
    h.score = finals[i].score;
    h.ctc_logp = finals[i].ctc;
    h.lm_log10 = finals[i].track.lm.log10_total;
    h.word_count = finals[i].track.words;
    result.nbest.push_back(std::move(h));
  }
  return result;
}

}  // namespace csasr
