// csasr/experiment.hpp

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

#include <array>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "csasr/acoustic_model.hpp"
#include "csasr/decoder.hpp"
#include "csasr/metrics.hpp"
#include "csasr/ngram_lm.hpp"
#include "csasr/synth.hpp"
#include "csasr/training.hpp"

namespace csasr {

/// Synthetic replica of the scratch-vs-joint-training grid: models trained
/// only on code-switching data versus models pretrained on both monolingual
/// sets and then fine-tuned, at several code-switching data fractions, plus
/// n-gram shallow fusion on the full-data models.
struct TransferConfig {
  static TrainConfig Epochs(int n) {
    TrainConfig c;
    c.epochs = n;
    return c;
  }

  std::uint64_t seed = 1;
  double sigma = 0.3;
  double p_switch = 0.3;
  std::size_t confusable = 6;
  std::size_t mono_count = 1250;  // per monolingual set
  std::size_t mixed_train_count = 1000;
  std::size_t test_count = 200;
  std::size_t hidden = 64;
  std::vector<double> fractions = {0.1, 0.5, 1.0};
  TrainConfig pretrain = Epochs(2);  // joint training on L1 + L2
  TrainConfig train = Epochs(10);    // scratch training and fine-tuning
  FusionConfig fusion;   // +LM rows
  int beam_without_lm = 100;
  int lm_order = 5;
};

struct TransferRow {
  std::string label;
  double scratch = 0.0;  // CER %
  double joint = 0.0;    // CER %
};

struct TransferResult {
  std::vector<TransferRow> rows;  // one per fraction, then "+ LM"
  double lm_perplexity = 0.0;   // on the code-switching test transcripts
  std::string Render() const {
    std::ostringstream os;
    os << "model\tscratch\tjoint+finetune\n";
    for (const auto& r : rows)
      os << r.label << '\t' << FormatRate(r.scratch) << '\t' << FormatRate(r.joint) << '\n';
    return os.str();
  }
};

using ProgressFn = std::function<void(const std::string&)>;

inline TransferResult RunTransferExperiment(const TransferConfig& cfg, const ProgressFn& progress = {}) {
  auto note = [&](const std::string& s) {
    if (progress) progress(s);
  };
  const SynthSpec spec = MakeSynthSpec(cfg.seed, cfg.sigma, cfg.p_switch, cfg.confusable);
  const GraphemeVocab vocab = SynthVocab(spec);
  const auto l1 = SynthCorpus(spec, vocab, Language::kL1, cfg.mono_count, 1);
  const auto l2 = SynthCorpus(spec, vocab, Language::kL2, cfg.mono_count, 2);
  const auto mixed = SynthCorpus(spec, vocab, Language::kMixed, cfg.mixed_train_count, 3);
  const auto test = SynthCorpus(spec, vocab, Language::kMixed, cfg.test_count, 4);

  std::vector<std::vector<std::string>> lm_text, test_text;
  for (const auto& u : mixed) lm_text.push_back(Surfaces(TokenizeLm(u.transcript)));
  for (const auto& u : test) test_text.push_back(Surfaces(TokenizeLm(u.transcript)));
  const NGramModel lm = TrainKneserNey(lm_text, cfg.lm_order);

  FusionConfig plain{0.0, 0.0, cfg.beam_without_lm};
  auto cer_plain = [&](const ToyAcousticModel& m) {
    return EvaluateBeam(m, test, vocab, nullptr, plain).rate;
  };
  auto cer_lm = [&](const ToyAcousticModel& m) {
    return EvaluateBeam(m, test, vocab, &lm, cfg.fusion).rate;
  };

  const auto init = ToyAcousticModel::Random(spec.dim, cfg.hidden, vocab.size(), cfg.seed);
  note("joint pretraining on " + std::to_string(l1.size() + l2.size()) + " utterances");
  ToyAcousticModel pretrained = init;
  RunJointTraining(pretrained, l1, l2, cfg.pretrain);

  TransferResult result;
  result.lm_perplexity = Perplexity(lm, test_text);
  for (double fraction : cfg.fractions) {
    char label[64];
    std::snprintf(label, sizeof label, "%d%% data", static_cast<int>(fraction * 100 + 0.5));
    ToyAcousticModel scratch = init;
    RunFinetune(scratch, mixed, cfg.train, fraction);
    ToyAcousticModel tuned = pretrained;
    RunFinetune(tuned, mixed, cfg.train, fraction);
    TransferRow row{label, cer_plain(scratch), cer_plain(tuned)};
    note(std::string(label) + ": scratch " + FormatRate(row.scratch) + ", joint " +
         FormatRate(row.joint));
    result.rows.push_back(row);
    if (fraction == 1.0) {
      TransferRow lm_row{"+ LM", cer_lm(scratch), cer_lm(tuned)};
      note("+ LM: scratch " + FormatRate(lm_row.scratch) + ", joint " + FormatRate(lm_row.joint));
      result.rows.push_back(lm_row);
    }
  }
  return result;
}

}  // namespace csasr
