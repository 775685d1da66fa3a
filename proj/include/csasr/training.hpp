// csasr/training.hpp

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
#include <map>
#include <string>
#include <vector>

#include "csasr/acoustic_model.hpp"
#include "csasr/common.hpp"
#include "csasr/ctc.hpp"
#include "csasr/dataset.hpp"
#include "csasr/decoder.hpp"
#include "csasr/metrics.hpp"
#include "csasr/vocab.hpp"

namespace csasr {

class EmptyBatch : public Error {
 public:
  EmptyBatch() : Error("empty training batch") {}
};

class AllInfeasible : public Error {
 public:
  explicit AllInfeasible(std::size_t n)
      : Error("all " + std::to_string(n) + " utterances in the batch are infeasible") {}
};

struct TrainConfig {
  double learning_rate = 3e-4;
  double momentum = 0.9;
  bool nesterov = true;
  std::size_t batch_size = 20;
  int epochs = 10;
  std::uint64_t seed = 1;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables

  void Validate() const {
    if (!(learning_rate >= 0.0)) throw Error("learning rate must be >= 0");
    if (batch_size < 1) throw Error("batch size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw Error("momentum must be in [0, 1)");
  }
};

/// SGD with (optionally Nesterov) momentum in the usual deep-learning form:
///   v <- mu v + g;  p <- p - lr (g + mu v)   (Nesterov)
///                   p <- p - lr v            (classical)
/// With mu = 0 both reduce to p <- p - lr g.
class SgdOptimizer {
 public:
  void Step(std::vector<double>& params, const std::vector<double>& grad, const TrainConfig& cfg) {
    if (velocity_.size() != params.size()) velocity_.assign(params.size(), 0.0);
    const double mu = cfg.momentum, lr = cfg.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
      velocity_[i] = mu * velocity_[i] + grad[i];
      const double update = cfg.nesterov ? grad[i] + mu * velocity_[i] : velocity_[i];
      params[i] -= lr * update;
    }
  }
  const std::vector<double>& velocity() const { return velocity_; }

 private:
  std::vector<double> velocity_;
};

struct StepResult {
  double mean_loss = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;  // infeasible targets
  std::vector<double> losses;  // per used utterance, batch order
};

/// One optimizer step on the mean CTC loss of the feasible batch members.
inline StepResult TrainStep(ToyAcousticModel& model, SgdOptimizer& opt,
                            std::span<const Utterance* const> batch, const TrainConfig& cfg) {
  if (batch.empty()) throw EmptyBatch();
  StepResult r;
  std::vector<double> grad(model.parameter_count(), 0.0);
  double sum = 0.0;
  for (const Utterance* u : batch) {
    if (u->features.size() < MinFrames(u->labels)) {
      ++r.skipped;
      continue;
    }
    const auto acts = model.Run(u->features);
    const CtcLossResult ctc = CtcLoss(PosteriorGrid::FromLogits(acts.logits), u->labels);
    model.Backward(u->features, acts, ctc.grad, grad);
    sum += ctc.loss;
    r.losses.push_back(ctc.loss);
    ++r.used;
  }
  if (r.used == 0) throw AllInfeasible(batch.size());
  const double scale = 1.0 / static_cast<double>(r.used);
  double norm2 = 0.0;
  for (double& g : grad) {
    g *= scale;
    norm2 += g * g;
  }
  if (cfg.clip_norm > 0.0 && norm2 > cfg.clip_norm * cfg.clip_norm) {
    const double c = cfg.clip_norm / std::sqrt(norm2);
    for (double& g : grad) g *= c;
  }
  opt.Step(model.params(), grad, cfg);
  r.mean_loss = sum * scale;
  return r;
}

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  std::map<Language, double> language_loss;  // mean per language seen
  std::size_t skipped = 0;
};

using TrainingLog = std::vector<EpochStats>;

/// Plain training loop: every epoch re-buckets the data with seed + epoch.
inline void Train(ToyAcousticModel& model, const std::vector<Utterance>& data,
                  const TrainConfig& cfg, TrainingLog* log = nullptr) {
  cfg.Validate();
  if (data.empty()) throw Error("no training data");
  SgdOptimizer opt;
  const std::vector<double> durations = Durations(data);
  std::vector<const Utterance*> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    std::map<Language, std::pair<double, std::size_t>> per_lang;
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& bucket : MakeBatches(durations, cfg.batch_size, cfg.seed + static_cast<std::uint64_t>(epoch))) {
      batch.clear();
      for (std::size_t i : bucket) batch.push_back(&data[i]);
      const StepResult r = TrainStep(model, opt, batch, cfg);
      stats.skipped += r.skipped;
      std::size_t k = 0;
      for (const Utterance* u : batch) {
        if (u->features.size() < MinFrames(u->labels)) continue;
        auto& acc = per_lang[u->language];
        acc.first += r.losses[k];
        acc.second += 1;
        total += r.losses[k++];
        ++n;
      }
    }
    stats.mean_loss = n ? total / static_cast<double>(n) : 0.0;
    for (const auto& [lang, acc] : per_lang)
      stats.language_loss[lang] = acc.first / static_cast<double>(acc.second);
    if (log) log->push_back(stats);
  }
}

/// Pools both monolingual sets and trains on the mixture, so every epoch
/// interleaves the two languages.
inline void RunJointTraining(ToyAcousticModel& model, const std::vector<Utterance>& l1,
                             const std::vector<Utterance>& l2, const TrainConfig& cfg,
                             TrainingLog* log = nullptr) {
  if (l1.empty() || l2.empty())
    throw Error("joint training needs both monolingual sets to be non-empty");
  std::vector<Utterance> pool = l1;
  pool.insert(pool.end(), l2.begin(), l2.end());
  Train(model, pool, cfg, log);
}

/// Indices of the code-switching subset used for a given data fraction.
inline std::vector<std::size_t> FinetuneSubset(const std::vector<Utterance>& data,
                                               double fraction, std::uint64_t seed) {
  const auto durations = Durations(data);
  return StratifiedSubset(durations, fraction, seed);
}

/// Continues training on a duration-stratified fraction of the data.
inline void RunFinetune(ToyAcousticModel& model, const std::vector<Utterance>& data,
                        const TrainConfig& cfg, double fraction, TrainingLog* log = nullptr) {
  std::vector<Utterance> subset;
  for (std::size_t i : FinetuneSubset(data, fraction, cfg.seed)) subset.push_back(data[i]);
  Train(model, subset, cfg, log);
}

// ---------------------------------------------------------------------------
// Evaluation.

inline ErrorRateReport EvaluateGreedy(const ToyAcousticModel& model,
                                      const std::vector<Utterance>& data,
                                      const GraphemeVocab& vocab) {
  ErrorRateAccumulator acc;
  for (const auto& u : data) {
    const auto hyp = DecodeIds(GreedyDecode(model.Forward(u.features)), vocab);
    acc.Add(Cer(u.transcript, hyp));
  }
  return acc.total();
}

inline ErrorRateReport EvaluateBeam(const ToyAcousticModel& model,
                                    const std::vector<Utterance>& data,
                                    const GraphemeVocab& vocab, const NGramModel* lm,
                                    const FusionConfig& fusion) {
  ErrorRateAccumulator acc;
  for (const auto& u : data) {
    const auto result = BeamDecode(model.Forward(u.features), vocab, lm, fusion);
    acc.Add(Cer(u.transcript, result.nbest.front().text));
  }
  return acc.total();
}

}  // namespace csasr
