// csasr/ngram_lm.hpp

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
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/utf8.hpp"

namespace csasr {

// ---------------------------------------------------------------------------
// Hybrid tokens: a maximal [a-z']+ run is one word, every CJK ideograph is
// its own token, spaces only delimit.

enum class TokenKind { kLatinWord, kCjkChar, kSentBoundary };

struct Token {
  std::string surface;
  TokenKind kind;
  friend bool operator==(const Token&, const Token&) = default;
};

inline std::vector<Token> TokenizeLm(std::string_view text) {
  std::vector<Token> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back({std::move(word), TokenKind::kLatinWord});
    word.clear();
  };
  for (const CodePoint& c : DecodeUtf8(text)) {
    if (IsLatinGrapheme(c.value)) {
      word.push_back(static_cast<char>(c.value));
    } else {
      flush();
      if (IsCjk(c.value)) out.push_back({EncodeUtf8(c.value), TokenKind::kCjkChar});
    }
  }
  flush();
  return out;
}

inline std::vector<std::string> Surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

using WordId = std::int32_t;
using NGram = std::vector<WordId>;

class MalformedArpa : public Error {
 public:
  MalformedArpa(std::size_t line, const std::string& reason)
      : Error("malformed ARPA at line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Words seen so far in a hypothesis plus the accumulated log10 score.
struct LmState {
  NGram context;
  double log10_total = 0.0;
  friend bool operator==(const LmState&, const LmState&) = default;
  friend auto operator<=>(const LmState& a, const LmState& b) {
    return a.context <=> b.context;
  }
};

/// Backoff n-gram model in ARPA form: every stored k-gram carries a log10
/// probability and, when it is a context, a log10 backoff weight.
class NGramModel {
 public:
  static constexpr WordId kUnkId = 0;
  static constexpr WordId kBosId = 1;
  static constexpr WordId kEosId = 2;
  static constexpr double kLog10Zero = -99.0;

  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
    bool has_backoff = false;
  };

  struct Metadata {
    std::vector<double> discounts;  // one per order, index 0 = unigrams
    bool degenerate = false;        // a discount fell back to 0.5
  };

  explicit NGramModel(int order = 5) : order_(order), tables_(static_cast<std::size_t>(order)) {
    if (order < 1) throw Error("n-gram order must be >= 1");
    AddWord(std::string(kUnk));
    AddWord(std::string(kBos));
    AddWord(std::string(kEos));
  }

  int order() const { return order_; }
  std::size_t vocab_size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  const Metadata& metadata() const { return meta_; }
  Metadata& mutable_metadata() { return meta_; }

  WordId Id(std::string_view w) const {
    auto it = ids_.find(std::string(w));
    return it == ids_.end() ? kUnkId : it->second;
  }

  WordId AddWord(const std::string& w) {
    auto [it, inserted] = ids_.emplace(w, static_cast<WordId>(words_.size()));
    if (inserted) words_.push_back(w);
    return it->second;
  }

  /// Table of k-grams, k in [1, order].
  const std::map<NGram, Entry>& table(int k) const {
    return tables_.at(static_cast<std::size_t>(k - 1));
  }
  std::map<NGram, Entry>& mutable_table(int k) {
    return tables_.at(static_cast<std::size_t>(k - 1));
  }

  const Entry* Find(const NGram& gram) const {
    if (gram.empty() || gram.size() > tables_.size()) return nullptr;
    const auto& t = tables_[gram.size() - 1];
    auto it = t.find(gram);
    return it == t.end() ? nullptr : &it->second;
  }

  /// log10 P(word | context) with ARPA backoff semantics: the explicit entry
  /// if (context, word) is stored, else backoff(context) + P(word | shorter).
  double LogProb10(std::span<const WordId> context, WordId word) const {
    std::size_t k = std::min<std::size_t>(context.size(), static_cast<std::size_t>(order_ - 1));
    double acc = 0.0;
    NGram gram;
    for (;; --k) {
      gram.assign(context.end() - static_cast<std::ptrdiff_t>(k), context.end());
      gram.push_back(word);
      if (const Entry* e = Find(gram)) return acc + e->log10_prob;
      if (k == 0) break;
      gram.pop_back();
      if (const Entry* c = Find(gram)) acc += c->log10_backoff;
    }
    // Unreachable for a well-formed model: <unk> is always a unigram.
    return acc + kLog10Zero;
  }

  LmState BeginState() const { return LmState{{kBosId}, 0.0}; }

  /// Scores one token and returns the advanced state.
  std::pair<double, LmState> Score(const LmState& state, WordId word) const {
    const double lp = LogProb10(state.context, word);
    LmState next;
    next.log10_total = state.log10_total + lp;
    const std::size_t keep = static_cast<std::size_t>(order_ - 1);
    next.context = state.context;
    next.context.push_back(word);
    if (next.context.size() > keep)
      next.context.erase(next.context.begin(),
                         next.context.end() - static_cast<std::ptrdiff_t>(keep));
    return {lp, std::move(next)};
  }

  std::pair<double, LmState> Score(const LmState& state, std::string_view word) const {
    return Score(state, Id(word));
  }

  /// log10 P of a whole sentence, </s> included.
  double SentenceLogProb10(const std::vector<std::string>& sentence) const {
    LmState st = BeginState();
    for (const auto& w : sentence) st = Score(st, w).second;
    return Score(st, kEosId).second.log10_total;
  }

 private:
  int order_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::map<NGram, Entry>> tables_;
  Metadata meta_;
};

// ---------------------------------------------------------------------------
// Counting and training.

/// Raw k-gram counts for k = 1..order over sentences padded as <s> ... </s>.
/// Words are registered in `model`'s vocabulary in first-appearance order.
inline std::vector<std::map<NGram, double>> CountNGrams(
    const std::vector<std::vector<std::string>>& corpus, int order, NGramModel& model) {
  std::vector<std::map<NGram, double>> counts(static_cast<std::size_t>(order));
  NGram sent;
  for (const auto& s : corpus) {
    sent.assign(1, NGramModel::kBosId);
    for (const auto& w : s) sent.push_back(model.AddWord(w));
    sent.push_back(NGramModel::kEosId);
    for (std::size_t i = 0; i < sent.size(); ++i)
      for (std::size_t k = 1; k <= static_cast<std::size_t>(order) && i + k <= sent.size(); ++k)
        counts[k - 1][NGram(sent.begin() + static_cast<std::ptrdiff_t>(i),
                            sent.begin() + static_cast<std::ptrdiff_t>(i + k))] += 1.0;
  }
  return counts;
}

/// Interpolated Kneser-Ney with one discount per order, D = n1 / (n1 + 2 n2).
/// The highest order and k-grams starting with <s> use raw counts; every
/// other lower order uses continuation counts. <unk> takes the unigram
/// leftover mass. The result is stored in backoff form.
inline NGramModel TrainKneserNey(const std::vector<std::vector<std::string>>& corpus, int order) {
  if (corpus.empty()) throw Error("cannot train a language model on an empty corpus");
  NGramModel model(order);
  const auto raw = CountNGrams(corpus, order, model);
  const std::size_t n = static_cast<std::size_t>(order);

  // Adjusted counts.
  std::vector<std::map<NGram, double>> adj(n);
  adj[n - 1] = raw[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    for (const auto& [gram, c] : raw[k])
      if (gram[0] == NGramModel::kBosId) adj[k][gram] = c;
    for (const auto& [gram, c] : raw[k + 1]) {
      if (c <= 0.0) continue;
      NGram suffix(gram.begin() + 1, gram.end());
      adj[k][suffix] += 1.0;
    }
  }
  adj[0].erase(NGram{NGramModel::kBosId});

  auto& meta = model.mutable_metadata();
  meta.discounts.assign(n, 0.5);
  for (std::size_t k = 0; k < n; ++k) {
    double n1 = 0, n2 = 0;
    for (const auto& [gram, c] : adj[k]) {
      if (c == 1.0) ++n1;
      if (c == 2.0) ++n2;
    }
    const double d = (n1 + 2 * n2) > 0 ? n1 / (n1 + 2 * n2) : 0.0;
    if (d > 0.0 && d < 1.0) {
      meta.discounts[k] = d;
    } else {
      meta.discounts[k] = 0.5;
      meta.degenerate = true;
    }
  }

  // Unigrams.
  {
    const double d = meta.discounts[0];
    double total = 0.0;
    for (const auto& [gram, c] : adj[0]) total += c;
    const double leftover = d * static_cast<double>(adj[0].size()) / total;
    auto& table = model.mutable_table(1);
    for (WordId w = 0; w < static_cast<WordId>(model.vocab_size()); ++w) {
      if (w == NGramModel::kBosId) continue;
      auto it = adj[0].find(NGram{w});
      double p = it == adj[0].end() ? 0.0 : (it->second - d) / total;
      if (w == NGramModel::kUnkId) p += leftover;
      table[NGram{w}].log10_prob = std::log10(p);
    }
    table[NGram{NGramModel::kBosId}].log10_prob = NGramModel::kLog10Zero;
  }

  // Higher orders, built bottom-up so that lower distributions are final.
  for (std::size_t k = 1; k < n; ++k) {
    const double d = meta.discounts[k];
    std::map<NGram, std::pair<double, double>> ctx;  // context -> (denominator, types)
    for (const auto& [gram, c] : adj[k]) {
      auto& acc = ctx[NGram(gram.begin(), gram.end() - 1)];
      acc.first += c;
      acc.second += 1.0;
    }
    auto& lower = model.mutable_table(static_cast<int>(k));
    for (const auto& [context, acc] : ctx) {
      auto& e = lower[context];
      e.log10_backoff = std::log10(d * acc.second / acc.first);
      e.has_backoff = true;
    }
    auto& table = model.mutable_table(static_cast<int>(k + 1));
    for (const auto& [gram, c] : adj[k]) {
      const NGram context(gram.begin(), gram.end() - 1);
      const auto& acc = ctx.at(context);
      const double gamma = d * acc.second / acc.first;
      const std::span<const WordId> shorter(context.data() + 1, context.size() - 1);
      const double p_lower = std::pow(10.0, model.LogProb10(shorter, gram.back()));
      table[gram].log10_prob = std::log10((c - d) / acc.first + gamma * p_lower);
    }
  }
  return model;
}

inline NGramModel TrainKneserNey(const std::vector<std::vector<Token>>& corpus, int order) {
  std::vector<std::vector<std::string>> words;
  words.reserve(corpus.size());
  for (const auto& s : corpus) words.push_back(Surfaces(s));
  return TrainKneserNey(words, order);
}

/// 10^(-sum log10 P / N); N counts every predicted token plus one </s> per
/// sentence.
inline double Perplexity(const NGramModel& model,
                         const std::vector<std::vector<std::string>>& corpus) {
  double sum = 0.0;
  std::size_t events = 0;
  for (const auto& s : corpus) {
    sum += model.SentenceLogProb10(s);
    events += s.size() + 1;
  }
  if (events == 0) throw Error("perplexity of an empty corpus");
  return std::pow(10.0, -sum / static_cast<double>(events));
}

// ---------------------------------------------------------------------------
// ARPA text format.

inline void WriteArpa(std::ostream& os, const NGramModel& model) {
  os << "\n\\data\\\n";
  for (int k = 1; k <= model.order(); ++k)
    os << "ngram " << k << "=" << model.table(k).size() << '\n';
  char buf[64];
  for (int k = 1; k <= model.order(); ++k) {
    os << "\n\\" << k << "-grams:\n";
    for (const auto& [gram, e] : model.table(k)) {
      std::snprintf(buf, sizeof buf, "%.10f", e.log10_prob);
      os << buf << '\t';
      for (std::size_t i = 0; i < gram.size(); ++i) {
        if (i) os << ' ';
        os << model.word(gram[i]);
      }
      if (k < model.order() && e.has_backoff) {
        std::snprintf(buf, sizeof buf, "%.10f", e.log10_backoff);
        os << '\t' << buf;
      }
      os << '\n';
    }
  }
  os << "\n\\end\\\n";
}

inline NGramModel ReadArpa(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto blank = [&] { return line.find_first_not_of(" \t") == std::string::npos; };

  bool found = false;
  while (next())
    if (line == "\\data\\") {
      found = true;
      break;
    }
  if (!found) throw MalformedArpa(lineno, "missing \\data\\ section");

  std::vector<std::size_t> counts;
  while (next() && !blank()) {
    int k = 0;
    unsigned long c = 0;
    if (std::sscanf(line.c_str(), "ngram %d=%lu", &k, &c) != 2)
      throw MalformedArpa(lineno, "bad count line '" + line + "'");
    if (k != static_cast<int>(counts.size()) + 1)
      throw MalformedArpa(lineno, "n-gram counts out of order");
    counts.push_back(c);
  }
  if (counts.empty()) throw MalformedArpa(lineno, "no n-gram counts");

  const int order = static_cast<int>(counts.size());
  NGramModel model(order);
  std::vector<std::vector<std::pair<std::vector<std::string>, NGramModel::Entry>>> sections(
      static_cast<std::size_t>(order));

  for (int k = 1; k <= order; ++k) {
    bool got;
    while ((got = next()) && blank()) {
    }
    if (!got) throw MalformedArpa(lineno, "unexpected end of file");
    const std::string want = "\\" + std::to_string(k) + "-grams:";
    if (line != want) throw MalformedArpa(lineno, "expected '" + want + "'");
    std::size_t seen = 0;
    while (next() && !blank()) {
      if (line[0] == '\\')
        throw MalformedArpa(lineno, "section " + want + " lists " + std::to_string(seen) +
                                        " entries, header says " +
                                        std::to_string(counts[static_cast<std::size_t>(k - 1)]));
      std::istringstream ls(line);
      std::vector<std::string> fields;
      std::string f;
      while (ls >> f) fields.push_back(f);
      const std::size_t kk = static_cast<std::size_t>(k);
      if (fields.size() != kk + 1 && fields.size() != kk + 2)
        throw MalformedArpa(lineno, "expected " + std::to_string(k) + " words");
      NGramModel::Entry e;
      try {
        e.log10_prob = std::stod(fields[0]);
        if (fields.size() == kk + 2) {
          e.log10_backoff = std::stod(fields.back());
          e.has_backoff = true;
        }
      } catch (const std::logic_error&) {
        throw MalformedArpa(lineno, "bad number");
      }
      sections[kk - 1].emplace_back(
          std::vector<std::string>(fields.begin() + 1, fields.begin() + 1 + k), e);
      ++seen;
    }
    if (seen != counts[static_cast<std::size_t>(k - 1)])
      throw MalformedArpa(lineno, "section " + want + " lists " + std::to_string(seen) +
                                      " entries, header says " +
                                      std::to_string(counts[static_cast<std::size_t>(k - 1)]));
  }
  bool ended = false;
  while (next()) {
    if (blank()) continue;
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    throw MalformedArpa(lineno, "unexpected line '" + line + "'");
  }
  if (!ended) throw MalformedArpa(lineno, "missing \\end\\ marker");

  // Ids follow the unigram section order after the three reserved words.
  for (const auto& [words, e] : sections[0]) model.AddWord(words[0]);
  for (std::string_view required : {kUnk, kBos, kEos})
    if (!std::any_of(sections[0].begin(), sections[0].end(),
                     [&](const auto& p) { return p.first[0] == required; }))
      throw MalformedArpa(lineno, "unigram section lacks " + std::string(required));
  for (int k = 1; k <= order; ++k) {
    auto& table = model.mutable_table(k);
    for (const auto& [words, e] : sections[static_cast<std::size_t>(k - 1)]) {
      NGram gram;
      for (const auto& w : words) {
        const WordId id = model.Id(w);
        if (id == NGramModel::kUnkId && w != kUnk)
          throw MalformedArpa(lineno, "word '" + w + "' missing from unigrams");
        gram.push_back(id);
      }
      table[gram] = e;
    }
  }
  return model;
}

inline void SaveArpa(const std::string& path, const NGramModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write ARPA file " + path);
  WriteArpa(os, model);
}

inline NGramModel LoadArpa(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open ARPA file " + path);
  return ReadArpa(is);
}

}  // namespace csasr
