// tools/csasr.cpp

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

// Command-line front end: synthetic data generation, language-model and
// acoustic-model training, decoding, scoring and the scratch-vs-joint grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csasr/acoustic_model.hpp"
#include "csasr/ctc.hpp"
#include "csasr/dataset.hpp"
#include "csasr/decoder.hpp"
#include "csasr/experiment.hpp"
#include "csasr/features.hpp"
#include "csasr/metrics.hpp"
#include "csasr/ngram_lm.hpp"
#include "csasr/synth.hpp"
#include "csasr/training.hpp"
#include "csasr/vocab.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace csasr {
namespace {

// Bad arguments or missing inputs; mapped to exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

void RequireFile(const std::string& path) {
  if (path.empty()) return;
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
}

struct Globals {
  std::uint64_t seed = 1;
  std::string output_dir;
};

// Writes config.json (command, seed and every option) into the output
// directory, creating it if needed.
void Snapshot(const Globals& g, const std::string& command, json options) {
  if (g.output_dir.empty()) return;
  fs::create_directories(g.output_dir);
  json j;
  j["command"] = command;
  j["seed"] = g.seed;
  j["options"] = std::move(options);
  std::ofstream os(fs::path(g.output_dir) / "config.json");
  os << j.dump(2) << '\n';
}

std::string OutPath(const Globals& g, const std::string& name) {
  return g.output_dir.empty() ? name : (fs::path(g.output_dir) / name).string();
}

json TrainJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"nesterov", c.nesterov},           {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"clip_norm", c.clip_norm}};
}

void AddTrainOptions(CLI::App* cmd, TrainConfig& c) {
  cmd->add_option("--lr", c.learning_rate, "learning rate")->capture_default_str();
  cmd->add_option("--momentum", c.momentum, "momentum coefficient")->capture_default_str();
  cmd->add_option("--batch", c.batch_size, "utterances per batch")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "passes over the data")->capture_default_str();
  cmd->add_option("--clip", c.clip_norm, "gradient norm clip, 0 disables")->capture_default_str();
  cmd->add_flag("!--no-nesterov", c.nesterov, "classical momentum instead of Nesterov");
}

void AddFusionOptions(CLI::App* cmd, FusionConfig& f) {
  cmd->add_option("--alpha", f.alpha, "LM weight")->capture_default_str();
  cmd->add_option("--beta", f.beta, "word insertion bonus")->capture_default_str();
  cmd->add_option("--beam", f.beam_width, "beam width")->capture_default_str();
}

// Loads a manifest together with its feature files; paths are relative to
// the manifest's directory.
std::vector<Utterance> LoadUtterances(const std::string& manifest_path, const GraphemeVocab& vocab) {
  RequireFile(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<Utterance> out;
  for (const auto& e : LoadManifest(manifest_path)) {
    const std::string feat = (base / e.path).string();
    RequireFile(feat);
    Utterance u;
    u.features = LoadFeatures(feat);
    u.transcript = e.transcript;
    u.labels = Encode(e.transcript, vocab);
    u.language = e.language;
    u.duration_ms = e.duration_ms;
    out.push_back(std::move(u));
  }
  if (out.empty()) throw Error("manifest " + manifest_path + " has no entries");
  return out;
}

std::vector<std::vector<std::string>> LoadLmText(const std::string& path) {
  RequireFile(path);
  std::ifstream is(path);
  std::vector<std::vector<std::string>> out;
  for (std::string line; std::getline(is, line);) {
    const std::string norm = NormalizeText(line);
    if (!norm.empty()) out.push_back(Surfaces(TokenizeLm(norm)));
  }
  return out;
}

std::vector<std::string> ReadLines(const std::string& path) {
  RequireFile(path);
  std::ifstream is(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

Checkpoint LoadCheckedModel(const std::string& path, const GraphemeVocab& vocab) {
  RequireFile(path);
  Checkpoint ck = LoadCheckpoint(path);
  if (ck.vocab_hash != vocab.Hash())
    throw UsageError("checkpoint " + path + " was trained with a different vocabulary");
  return ck;
}

FeatureFrames Prepare(const Checkpoint& ck, const FeatureFrames& f) {
  return ck.normalizer ? ck.normalizer->Apply(f) : f;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string language = "mixed";
  std::size_t count = 100;
  std::uint64_t stream = 1;
  double sigma = 0.3;
  double p_switch = 0.3;
  std::size_t confusable = 6;
};

int Synth(const Globals& g, const SynthArgs& a) {
  if (g.output_dir.empty()) throw UsageError("synth needs --output-dir");
  const SynthSpec spec = MakeSynthSpec(g.seed, a.sigma, a.p_switch, a.confusable);
  const GraphemeVocab vocab = SynthVocab(spec);
  const Language lang = ParseLanguage(a.language);
  Snapshot(g, "synth", {{"language", a.language}, {"count", a.count}, {"stream", a.stream},
                        {"sigma", a.sigma}, {"p_switch", a.p_switch},
                        {"confusable", a.confusable}});
  fs::create_directories(fs::path(g.output_dir) / "feats");
  SynthTranscript stats;
  const auto corpus = SynthCorpus(spec, vocab, lang, a.count, a.stream, &stats);
  DatasetManifest manifest;
  std::ofstream text(OutPath(g, "text.txt"));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "feats/%06zu.feat", i);
    SaveFeatures(OutPath(g, name), corpus[i].features);
    manifest.push_back({name, corpus[i].transcript, lang, corpus[i].duration_ms});
    text << corpus[i].transcript << '\n';
  }
  SaveManifest(OutPath(g, "manifest.csv"), manifest);
  SaveVocab(OutPath(g, "vocab.txt"), vocab);
  std::cout << "utterances=" << corpus.size() << "\nboundaries=" << stats.boundaries
            << "\nswitches=" << stats.switches << '\n';
  return 0;
}

int TrainLm(const Globals& g, const std::string& text, int order, const std::string& out) {
  const auto corpus = LoadLmText(text);
  if (corpus.empty()) throw UsageError("no sentences in " + text);
  const NGramModel lm = TrainKneserNey(corpus, order);
  Snapshot(g, "train-lm", {{"text", text}, {"order", order}});
  const std::string path = out.empty() ? OutPath(g, "lm.arpa") : out;
  SaveArpa(path, lm);
  std::cout << "sentences=" << corpus.size() << "\nwords=" << lm.vocab_size()
            << "\ndegenerate_discount=" << (lm.metadata().degenerate ? 1 : 0) << "\narpa=" << path
            << '\n';
  return 0;
}

int PerplexityCmd(const std::string& lm_path, const std::string& text) {
  RequireFile(lm_path);
  const NGramModel lm = LoadArpa(lm_path);
  const auto corpus = LoadLmText(text);
  std::printf("perplexity=%.6f\n", Perplexity(lm, corpus));
  return 0;
}

struct TrainArgs {
  std::vector<std::string> manifests;
  std::string vocab;
  std::string model;  // finetune only
  std::size_t hidden = 64;
  bool normalize = false;
  double fraction = 1.0;
  TrainConfig cfg;
};

void PrintLog(const TrainingLog& log) {
  for (const auto& e : log) {
    std::printf("epoch=%d loss=%.6f", e.epoch, e.mean_loss);
    for (const auto& [lang, loss] : e.language_loss) std::printf(" loss_%s=%.6f", LanguageName(lang), loss);
    std::printf(" skipped=%zu\n", e.skipped);
  }
}

int TrainCmd(const Globals& g, TrainArgs a, bool finetune) {
  RequireFile(a.vocab);
  const GraphemeVocab vocab = LoadVocab(a.vocab);
  std::vector<std::vector<Utterance>> sets;
  for (const auto& m : a.manifests) sets.push_back(LoadUtterances(m, vocab));
  a.cfg.seed = g.seed;

  Checkpoint ck;
  if (finetune) {
    ck = LoadCheckedModel(a.model, vocab);
  } else {
    ck.vocab_hash = vocab.Hash();
    if (a.normalize) {
      std::vector<FeatureFrames> all;
      for (const auto& s : sets)
        for (const auto& u : s) all.push_back(u.features);
      ck.normalizer = FeatureNormalizer::Fit(all);
    }
    ck.model = ToyAcousticModel::Random(sets[0][0].features.dim(), a.hidden, vocab.size(), g.seed);
  }
  for (auto& s : sets)
    for (auto& u : s) u.features = Prepare(ck, u.features);

  json opts = {{"manifests", a.manifests}, {"vocab", a.vocab}, {"train", TrainJson(a.cfg)}};
  TrainingLog log;
  if (finetune) {
    opts["model"] = a.model;
    opts["fraction"] = a.fraction;
    std::vector<Utterance> pool;
    for (auto& s : sets) pool.insert(pool.end(), s.begin(), s.end());
    RunFinetune(ck.model, pool, a.cfg, a.fraction, &log);
  } else {
    opts["hidden"] = a.hidden;
    opts["normalize"] = a.normalize;
    if (sets.size() == 2) {
      RunJointTraining(ck.model, sets[0], sets[1], a.cfg, &log);
    } else {
      std::vector<Utterance> pool;
      for (auto& s : sets) pool.insert(pool.end(), s.begin(), s.end());
      Train(ck.model, pool, a.cfg, &log);
    }
  }
  Snapshot(g, finetune ? "finetune" : "train", opts);
  PrintLog(log);
  const std::string path = OutPath(g, "model.ckpt");
  SaveCheckpoint(path, ck);
  std::cout << "checkpoint=" << path << '\n';
  return 0;
}

struct DecodeArgs {
  std::string grid, model, features, manifest, vocab, lm, output;
  std::size_t nbest = 1;
  FusionConfig fusion;
};

int DecodeCmd(const Globals& g, const DecodeArgs& a) {
  RequireFile(a.vocab);
  RequireFile(a.lm);
  const GraphemeVocab vocab = LoadVocab(a.vocab);
  std::optional<NGramModel> lm;
  if (!a.lm.empty()) lm = LoadArpa(a.lm);
  const NGramModel* lmp = lm ? &*lm : nullptr;
  const int sources = !a.grid.empty() + !a.features.empty() + !a.manifest.empty();
  if (sources != 1) throw UsageError("give exactly one of --grid, --features, --manifest");
  if (a.grid.empty() && a.model.empty()) throw UsageError("--features/--manifest need --model");
  Snapshot(g, "decode", {{"grid", a.grid}, {"model", a.model}, {"features", a.features},
                         {"manifest", a.manifest}, {"vocab", a.vocab}, {"lm", a.lm},
                         {"alpha", a.fusion.alpha}, {"beta", a.fusion.beta},
                         {"beam", a.fusion.beam_width}, {"nbest", a.nbest}});

  auto print_nbest = [&](const PosteriorGrid& grid) {
    const DecodeResult r = BeamDecode(grid, vocab, lmp, a.fusion, a.nbest);
    for (const auto& h : r.nbest) std::printf("%.6f\t%s\n", h.score, h.text.c_str());
  };
  if (!a.grid.empty()) {
    RequireFile(a.grid);
    print_nbest(LoadGrid(a.grid));
    return 0;
  }
  const Checkpoint ck = LoadCheckedModel(a.model, vocab);
  if (!a.features.empty()) {
    RequireFile(a.features);
    print_nbest(ck.model.Forward(Prepare(ck, LoadFeatures(a.features))));
    return 0;
  }
  // Whole manifest: one best hypothesis per line, manifest order.
  const auto data = LoadUtterances(a.manifest, vocab);
  std::ofstream file;
  const std::string out = a.output.empty() && !g.output_dir.empty() ? OutPath(g, "hyp.txt") : a.output;
  if (!out.empty()) file.open(out);
  std::ostream& os = out.empty() ? std::cout : file;
  for (const auto& u : data) {
    const auto r = BeamDecode(ck.model.Forward(Prepare(ck, u.features)), vocab, lmp, a.fusion);
    os << r.nbest.front().text << '\n';
  }
  if (!out.empty()) std::cout << "hypotheses=" << out << '\n';
  return 0;
}

int EvaluateCmd(const std::string& ref_path, const std::string& hyp_path, bool no_spaces) {
  const auto refs = ReadLines(ref_path);
  const auto hyps = ReadLines(hyp_path);
  if (refs.size() != hyps.size())
    throw UsageError(ref_path + " has " + std::to_string(refs.size()) + " lines but " + hyp_path +
                     " has " + std::to_string(hyps.size()));
  const auto conv = no_spaces ? CerConvention::kNoSpaces : CerConvention::kSpacedLength;
  ErrorRateAccumulator cer, wer;
  double precision = 0.0, recall = 0.0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::string r = NormalizeText(refs[i]), h = NormalizeText(hyps[i]);
    if (r.empty()) continue;
    cer.Add(Cer(r, h, conv));
    wer.Add(Wer(r, h));
    const auto sp = ScoreSwitchPoints(r, h);
    precision += sp.precision;
    recall += sp.recall;
  }
  if (cer.utterances() == 0) throw UsageError("no non-empty references in " + ref_path);
  const double n = static_cast<double>(cer.utterances());
  const auto& c = cer.total();
  const auto& w = wer.total();
  std::printf("%-8s %8s %6s %6s %6s %8s\n", "metric", "rate", "sub", "ins", "del", "ref_len");
  std::printf("%-8s %8s %6zu %6zu %6zu %8zu\n", "CER", FormatRate(c.rate).c_str(), c.substitutions,
              c.insertions, c.deletions, c.reference_length);
  std::printf("%-8s %8s %6zu %6zu %6zu %8zu\n", "WER", FormatRate(w.rate).c_str(), w.substitutions,
              w.insertions, w.deletions, w.reference_length);
  std::printf("utterances=%zu\ncer=%s\nwer=%s\nswitch_precision=%.4f\nswitch_recall=%.4f\n",
              cer.utterances(), FormatRate(c.rate).c_str(), FormatRate(w.rate).c_str(),
              precision / n, recall / n);
  return 0;
}

int TransferCmd(const Globals& g, TransferConfig cfg) {
  cfg.seed = g.seed;
  cfg.train.seed = cfg.pretrain.seed = g.seed;
  Snapshot(g, "run-table3",
           {{"sigma", cfg.sigma},
            {"p_switch", cfg.p_switch},
            {"confusable", cfg.confusable},
            {"mono_count", cfg.mono_count},
            {"mixed_train_count", cfg.mixed_train_count},
            {"test_count", cfg.test_count},
            {"hidden", cfg.hidden},
            {"fractions", cfg.fractions},
            {"pretrain", TrainJson(cfg.pretrain)},
            {"train", TrainJson(cfg.train)},
            {"fusion", {{"alpha", cfg.fusion.alpha}, {"beta", cfg.fusion.beta},
                        {"beam", cfg.fusion.beam_width}}},
            {"beam_without_lm", cfg.beam_without_lm},
            {"lm_order", cfg.lm_order}});
  // Progress lines double as the partial result if a later cell fails.
  std::ofstream progress;
  if (!g.output_dir.empty()) progress.open(OutPath(g, "progress.log"));
  const TransferResult r = RunTransferExperiment(cfg, [&](const std::string& s) {
    std::cerr << s << '\n';
    if (progress) progress << s << std::endl;
  });
  const std::string table = r.Render();
  std::cout << table;
  std::printf("lm_perplexity=%.4f\n", r.lm_perplexity);
  if (!g.output_dir.empty()) {
    std::ofstream os(OutPath(g, "cer_grid.tsv"));
    os << table;
  }
  return 0;
}

}  // namespace
}  // namespace csasr

int main(int argc, char** argv) {
  using namespace csasr;
  CLI::App app{"csasr: code-switching CTC speech recognition toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "directory for artifacts and config.json");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  c_synth->add_option("--language", synth.language, "L1, L2 or mixed")->capture_default_str();
  c_synth->add_option("--count", synth.count, "number of utterances")->capture_default_str();
  c_synth->add_option("--stream", synth.stream, "noise stream id")->capture_default_str();
  c_synth->add_option("--sigma", synth.sigma, "feature noise")->capture_default_str();
  c_synth->add_option("--p-switch", synth.p_switch, "switch probability")->capture_default_str();
  c_synth->add_option("--confusable", synth.confusable, "cross-language confusable pairs")
      ->capture_default_str();

  std::string lm_text, lm_out;
  int lm_order = 5;
  auto* c_lm = app.add_subcommand("train-lm", "train a Kneser-Ney n-gram model");
  c_lm->add_option("--text", lm_text, "one transcript per line")->required();
  c_lm->add_option("--order", lm_order, "n-gram order")->capture_default_str();
  c_lm->add_option("--output", lm_out, "ARPA file (default <output-dir>/lm.arpa)");

  std::string ppl_lm, ppl_text;
  auto* c_ppl = app.add_subcommand("perplexity", "perplexity of a text under an ARPA model");
  c_ppl->add_option("--lm", ppl_lm, "ARPA file")->required();
  c_ppl->add_option("--text", ppl_text, "one sentence per line")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train an acoustic model; two manifests train jointly");
  c_train->add_option("--manifest", train.manifests, "training manifest(s)")->required();
  c_train->add_option("--vocab", train.vocab, "vocabulary file")->required();
  c_train->add_option("--hidden", train.hidden, "recurrent units")->capture_default_str();
  c_train->add_flag("--normalize", train.normalize, "fit and store mean/variance normalization");
  AddTrainOptions(c_train, train.cfg);

  TrainArgs ft;
  auto* c_ft = app.add_subcommand("finetune", "continue training on a data fraction");
  c_ft->add_option("--model", ft.model, "checkpoint to start from")->required();
  c_ft->add_option("--manifest", ft.manifests, "code-switching manifest")->required();
  c_ft->add_option("--vocab", ft.vocab, "vocabulary file")->required();
  c_ft->add_option("--fraction", ft.fraction, "data fraction in (0, 1]")->capture_default_str();
  AddTrainOptions(c_ft, ft.cfg);

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "prefix beam search with optional LM fusion");
  c_dec->add_option("--grid", dec.grid, "posterior grid file");
  c_dec->add_option("--model", dec.model, "acoustic model checkpoint");
  c_dec->add_option("--features", dec.features, "feature file (with --model)");
  c_dec->add_option("--manifest", dec.manifest, "decode every entry (with --model)");
  c_dec->add_option("--vocab", dec.vocab, "vocabulary file")->required();
  c_dec->add_option("--lm", dec.lm, "ARPA language model");
  c_dec->add_option("--nbest", dec.nbest, "hypotheses to print")->capture_default_str();
  c_dec->add_option("--output", dec.output, "hypothesis file for --manifest");
  AddFusionOptions(c_dec, dec.fusion);

  std::string ref, hyp;
  bool no_spaces = false;
  auto* c_eval = app.add_subcommand("evaluate", "CER/WER of line-aligned files");
  c_eval->add_option("--ref", ref, "reference transcripts")->required();
  c_eval->add_option("--hyp", hyp, "hypotheses")->required();
  c_eval->add_flag("--no-spaces", no_spaces, "exclude spaces from the CER denominator");

  TransferConfig t3;
  auto* c_t3 = app.add_subcommand("run-table3", "scratch vs joint+finetune CER grid on synthetic data");
  c_t3->add_option("--sigma", t3.sigma, "feature noise")->capture_default_str();
  c_t3->add_option("--mono-count", t3.mono_count, "utterances per monolingual set")->capture_default_str();
  c_t3->add_option("--mixed-count", t3.mixed_train_count, "code-switching training utterances")
      ->capture_default_str();
  c_t3->add_option("--test-count", t3.test_count, "test utterances")->capture_default_str();
  c_t3->add_option("--hidden", t3.hidden, "recurrent units")->capture_default_str();
  c_t3->add_option("--epochs", t3.train.epochs, "scratch/finetune epochs")->capture_default_str();
  c_t3->add_option("--pretrain-epochs", t3.pretrain.epochs, "joint training epochs")
      ->capture_default_str();
  c_t3->add_option("--alpha", t3.fusion.alpha, "LM weight")->capture_default_str();
  c_t3->add_option("--beta", t3.fusion.beta, "word bonus")->capture_default_str();
  c_t3->add_option("--beam", t3.fusion.beam_width, "beam width")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_synth) return Synth(g, synth);
    if (*c_lm) return TrainLm(g, lm_text, lm_order, lm_out);
    if (*c_ppl) return PerplexityCmd(ppl_lm, ppl_text);
    if (*c_train) return TrainCmd(g, train, false);
    if (*c_ft) return TrainCmd(g, ft, true);
    if (*c_dec) return DecodeCmd(g, dec);
    if (*c_eval) return EvaluateCmd(ref, hyp, no_spaces);
    if (*c_t3) return TransferCmd(g, t3);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
