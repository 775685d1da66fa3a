// csasr/metrics.hpp

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
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/ngram_lm.hpp"
#include "csasr/utf8.hpp"

namespace csasr {

class EmptyReference : public Error {
 public:
  EmptyReference() : Error("reference is empty") {}
};

struct EditCounts {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

enum class EditOp { kMatch, kSubstitute, kInsert, kDelete };

struct AlignmentStep {
  EditOp op;
  std::size_t ref;  // index into the reference (unused for kInsert)
  std::size_t hyp;  // index into the hypothesis (unused for kDelete)
};

namespace internal {

template <typename Seq>
std::vector<std::size_t> EditTable(const Seq& ref, const Seq& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0u : 1u),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});
  return d;
}

}  // namespace internal

/// Minimal-cost alignment, walked back from the end preferring
/// substitution (or match), then insertion, then deletion.
template <typename Seq>
std::vector<AlignmentStep> Align(const Seq& ref, const Seq& hyp) {
  const std::size_t m = hyp.size();
  const auto d = internal::EditTable(ref, hyp);
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (m + 1) + j]; };
  std::vector<AlignmentStep> steps;
  std::size_t i = ref.size(), j = hyp.size();
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0u : 1u)) {
        steps.push_back({same ? EditOp::kMatch : EditOp::kSubstitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      steps.push_back({EditOp::kInsert, i, j - 1});
      --j;
    } else {
      steps.push_back({EditOp::kDelete, i - 1, j});
      --i;
    }
  }
  return {steps.rbegin(), steps.rend()};
}

template <typename Seq>
EditCounts EditDistance(const Seq& ref, const Seq& hyp) {
  EditCounts c;
  for (const auto& s : Align(ref, hyp)) {
    if (s.op == EditOp::kSubstitute) ++c.substitutions;
    if (s.op == EditOp::kInsert) ++c.insertions;
    if (s.op == EditOp::kDelete) ++c.deletions;
  }
  c.distance = c.substitutions + c.insertions + c.deletions;
  return c;
}

struct ErrorRateReport {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_length = 0;
  double rate = 0.0;  // percent

  std::size_t errors() const { return substitutions + insertions + deletions; }
};

/// Rate formatted with two decimals, e.g. "48.57".
inline std::string FormatRate(double percent) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", percent);
  return buf;
}

/// How spaces enter the character error rate. Spaces never take part in the
/// alignment; kSpacedLength still counts the reference's spaces in the
/// denominator, which is how the published code-switching tables were scored.
enum class CerConvention { kSpacedLength, kNoSpaces };

inline std::u32string CerUnits(std::string_view text) {
  std::u32string out;
  for (const CodePoint& c : DecodeUtf8(text))
    if (c.value != U' ') out.push_back(c.value);
  return out;
}

inline ErrorRateReport Cer(std::string_view reference, std::string_view hypothesis,
                           CerConvention convention = CerConvention::kSpacedLength) {
  const std::u32string ref = CerUnits(reference), hyp = CerUnits(hypothesis);
  if (ref.empty()) throw EmptyReference();
  const EditCounts e = EditDistance(ref, hyp);
  ErrorRateReport r{e.substitutions, e.insertions, e.deletions, ref.size(), 0.0};
  if (convention == CerConvention::kSpacedLength)
    r.reference_length = DecodeUtf8(reference).size();
  r.rate = 100.0 * static_cast<double>(r.errors()) / static_cast<double>(r.reference_length);
  return r;
}

/// Word error rate over tokenize_lm units (Latin words, single CJK characters).
inline ErrorRateReport Wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = Surfaces(TokenizeLm(reference));
  const auto hyp = Surfaces(TokenizeLm(hypothesis));
  if (ref.empty()) throw EmptyReference();
  const EditCounts e = EditDistance(ref, hyp);
  ErrorRateReport r{e.substitutions, e.insertions, e.deletions, ref.size(), 0.0};
  r.rate = 100.0 * static_cast<double>(r.errors()) / static_cast<double>(r.reference_length);
  return r;
}

/// Accumulates errors over many utterances; the corpus rate divides total
/// errors by total reference length.
class ErrorRateAccumulator {
 public:
  void Add(const ErrorRateReport& r) {
    total_.substitutions += r.substitutions;
    total_.insertions += r.insertions;
    total_.deletions += r.deletions;
    total_.reference_length += r.reference_length;
    total_.rate = total_.reference_length
                      ? 100.0 * static_cast<double>(total_.errors()) /
                            static_cast<double>(total_.reference_length)
                      : 0.0;
    ++utterances_;
  }
  const ErrorRateReport& total() const { return total_; }
  std::size_t utterances() const { return utterances_; }

 private:
  ErrorRateReport total_;
  std::size_t utterances_ = 0;
};

struct SwitchPointScore {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t reference_points = 0;
  std::size_t hypothesis_points = 0;
  std::size_t correct = 0;
};

/// A switch point is the boundary between adjacent tokens of different
/// scripts, identified by the index of the token before it. Hypothesis
/// boundaries are mapped onto reference indices through the token alignment;
/// with no points on a side the corresponding ratio is 1.
inline SwitchPointScore ScoreSwitchPoints(std::string_view reference,
                                          std::string_view hypothesis) {
  const auto ref_tokens = TokenizeLm(reference);
  const auto hyp_tokens = TokenizeLm(hypothesis);
  auto points = [](const std::vector<Token>& toks) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i)
      if (toks[i].kind != toks[i + 1].kind) out.push_back(i);
    return out;
  };
  const auto ref_points = points(ref_tokens);
  const auto hyp_points = points(hyp_tokens);

  // Reference index that each hypothesis token sits on (or follows).
  std::vector<std::ptrdiff_t> hyp_to_ref(hyp_tokens.size(), -1);
  std::ptrdiff_t last_ref = -1;
  for (const auto& s : Align(Surfaces(ref_tokens), Surfaces(hyp_tokens))) {
    if (s.op == EditOp::kDelete) {
      last_ref = static_cast<std::ptrdiff_t>(s.ref);
    } else if (s.op == EditOp::kInsert) {
      hyp_to_ref[s.hyp] = last_ref;
    } else {
      last_ref = static_cast<std::ptrdiff_t>(s.ref);
      hyp_to_ref[s.hyp] = last_ref;
    }
  }

  SwitchPointScore score;
  score.reference_points = ref_points.size();
  score.hypothesis_points = hyp_points.size();
  std::vector<bool> used(ref_tokens.size(), false);
  for (std::size_t hp : hyp_points) {
    const std::ptrdiff_t r = hyp_to_ref[hp];
    if (r < 0) continue;
    const auto ri = static_cast<std::size_t>(r);
    if (std::binary_search(ref_points.begin(), ref_points.end(), ri) && !used[ri]) {
      used[ri] = true;
      ++score.correct;
    }
  }
  if (!hyp_points.empty())
    score.precision = static_cast<double>(score.correct) / static_cast<double>(hyp_points.size());
  if (!ref_points.empty())
    score.recall = static_cast<double>(score.correct) / static_cast<double>(ref_points.size());
  return score;
}

}  // namespace csasr
