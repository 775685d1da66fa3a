// csasr/vocab.hpp

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
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/utf8.hpp"

namespace csasr {

enum class Script { kBlank, kLatin, kCjk, kSeparator };

inline constexpr std::string_view kBlankSymbol = "<blank>";

class UnknownGrapheme : public Error {
 public:
  UnknownGrapheme(std::string character, std::size_t offset)
      : Error("unknown grapheme '" + character + "' at byte offset " +
              std::to_string(offset)),
        character_(std::move(character)),
        offset_(offset) {}
  const std::string& character() const { return character_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string character_;
  std::size_t offset_;
};

class InvalidId : public Error {
 public:
  InvalidId(Label id, std::string why)
      : Error("invalid grapheme id " + std::to_string(id) + ": " + why), id_(id) {}
  Label id() const { return id_; }

 private:
  Label id_;
};

// ---------------------------------------------------------------------------
// Text normalization.

struct NormalizeOptions {
  // Removed as whole Latin tokens after lowercasing.
  std::vector<std::string> hesitations = {"uh", "um", "er", "ah", "hmm"};
};

namespace internal {

inline bool IsWhitespace(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\v' || cp == U'\f' || cp == 0x00A0 || cp == 0x3000 ||
         (cp >= 0x2000 && cp <= 0x200A);
}

}  // namespace internal

/// Lowercases Latin letters, keeps a-z, apostrophe and CJK ideographs, turns
/// whitespace into single spaces and deletes everything else (punctuation,
/// digits, other scripts). Hesitation tokens are then dropped.
inline std::string NormalizeText(std::string_view raw,
                                 const NormalizeOptions& opts = {}) {
  // Pass 1: character filter. Right single quotation mark counts as apostrophe.
  std::u32string kept;
  for (const CodePoint& c : DecodeUtf8(raw)) {
    char32_t cp = c.value;
    if (cp >= U'A' && cp <= U'Z') cp = cp - U'A' + U'a';
    if (cp == 0x2019) cp = U'\'';
    if (IsLatinGrapheme(cp) || IsCjk(cp)) {
      kept.push_back(cp);
    } else if (internal::IsWhitespace(cp)) {
      kept.push_back(U' ');
    }
  }

  // Pass 2: drop hesitations (maximal Latin runs) and collapse spaces.
  std::string out;
  auto emit_space = [&out] {
    if (!out.empty() && out.back() != ' ') out.push_back(' ');
  };
  std::size_t i = 0;
  while (i < kept.size()) {
    const char32_t cp = kept[i];
    if (cp == U' ') {
      emit_space();
      ++i;
    } else if (IsCjk(cp)) {
      AppendUtf8(out, cp);
      ++i;
    } else {
      std::string word;
      while (i < kept.size() && IsLatinGrapheme(kept[i]))
        word.push_back(static_cast<char>(kept[i++]));
      if (std::find(opts.hesitations.begin(), opts.hesitations.end(), word) ==
          opts.hesitations.end())
        out += word;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  // Removing a hesitation can leave "a  b" or a leading space.
  std::string collapsed;
  for (char ch : out) {
    if (ch == ' ' && (collapsed.empty() || collapsed.back() == ' ')) continue;
    collapsed.push_back(ch);
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

// ---------------------------------------------------------------------------
// GraphemeVocab

/// Ordered output inventory of the recognizer. Id 0 is the CTC blank; every
/// other unit is a single code point: a-z, apostrophe, space or a CJK ideograph.
class GraphemeVocab {
 public:
  GraphemeVocab() : GraphemeVocab(std::vector<std::string>{std::string(kBlankSymbol)}) {}

  explicit GraphemeVocab(std::vector<std::string> units) : units_(std::move(units)) {
    if (units_.empty() || units_[0] != kBlankSymbol)
      throw Error("vocab: unit 0 must be " + std::string(kBlankSymbol));
    scripts_.push_back(Script::kBlank);
    for (std::size_t id = 1; id < units_.size(); ++id) {
      const auto cps = DecodeUtf8(units_[id]);
      if (cps.size() != 1)
        throw Error("vocab: unit " + std::to_string(id) +
                    " is not a single code point: '" + units_[id] + "'");
      const char32_t cp = cps[0].value;
      Script script;
      if (cp == U' ') {
        script = Script::kSeparator;
      } else if (IsLatinGrapheme(cp)) {
        script = Script::kLatin;
      } else if (IsCjk(cp)) {
        script = Script::kCjk;
      } else {
        throw Error("vocab: unsupported grapheme '" + units_[id] + "'");
      }
      if (!index_.emplace(cp, static_cast<Label>(id)).second)
        throw Error("vocab: duplicate unit '" + units_[id] + "'");
      scripts_.push_back(script);
    }
  }

  std::size_t size() const { return units_.size(); }
  Label blank_id() const { return kBlank; }
  const std::vector<std::string>& units() const { return units_; }
  const std::string& unit(Label id) const { return units_.at(static_cast<std::size_t>(id)); }
  Script script_of(Label id) const { return scripts_.at(static_cast<std::size_t>(id)); }

  std::optional<Label> Find(char32_t cp) const {
    auto it = index_.find(cp);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<Label> space_id() const { return Find(U' '); }

  /// FNV-1a over the serialized units; stored in model checkpoints.
  std::uint64_t Hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& u : units_) {
      for (unsigned char ch : u) {
        h ^= ch;
        h *= 1099511628211ULL;
      }
      h ^= '\n';
      h *= 1099511628211ULL;
    }
    return h;
  }

  friend bool operator==(const GraphemeVocab& a, const GraphemeVocab& b) {
    return a.units_ == b.units_;
  }

 private:
  std::vector<std::string> units_;
  std::vector<Script> scripts_;
  std::unordered_map<char32_t, Label> index_;
};

/// blank, a..z, space, apostrophe, then every CJK code point seen in the
/// corpus in code-point order.
template <typename Range>
GraphemeVocab BuildVocab(const Range& corpus) {
  std::vector<std::string> units{std::string(kBlankSymbol)};
  for (char c = 'a'; c <= 'z'; ++c) units.emplace_back(1, c);
  units.emplace_back(" ");
  units.emplace_back("'");
  std::set<char32_t> cjk;
  for (const auto& line : corpus)
    for (const CodePoint& c : DecodeUtf8(line))
      if (IsCjk(c.value)) cjk.insert(c.value);
  for (char32_t cp : cjk) units.push_back(EncodeUtf8(cp));
  return GraphemeVocab(std::move(units));
}

inline LabelSequence Encode(std::string_view text, const GraphemeVocab& vocab) {
  LabelSequence ids;
  for (const CodePoint& c : DecodeUtf8(text)) {
    auto id = vocab.Find(c.value);
    if (!id) throw UnknownGrapheme(EncodeUtf8(c.value), c.offset);
    ids.push_back(*id);
  }
  return ids;
}

inline std::string DecodeIds(std::span<const Label> ids, const GraphemeVocab& vocab) {
  std::string out;
  for (Label id : ids) {
    if (id == kBlank) throw InvalidId(id, "blank in transcript");
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size())
      throw InvalidId(id, "out of range");
    out += vocab.unit(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization: one unit per line, line 1 is <blank>. The space unit is a
// line holding a single space, so lines are never trimmed.

inline void WriteVocab(std::ostream& os, const GraphemeVocab& vocab) {
  for (const auto& u : vocab.units()) os << u << '\n';
}

inline GraphemeVocab ReadVocab(std::istream& is) {
  std::vector<std::string> units;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    units.push_back(line);
  }
  return GraphemeVocab(std::move(units));
}

inline void SaveVocab(const std::string& path, const GraphemeVocab& vocab) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write vocab file " + path);
  WriteVocab(os, vocab);
}

inline GraphemeVocab LoadVocab(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open vocab file " + path);
  return ReadVocab(is);
}

}  // namespace csasr
