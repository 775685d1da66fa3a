// csasr/ctc.hpp

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
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "csasr/common.hpp"

namespace csasr {

class InfeasibleTarget : public Error {
 public:
  InfeasibleTarget(std::size_t frames, std::size_t required)
      : Error("infeasible CTC target: " + std::to_string(frames) +
              " frames, at least " + std::to_string(required) + " required"),
        frames_(frames),
        required_(required) {}
  std::size_t frames() const { return frames_; }
  std::size_t required() const { return required_; }

 private:
  std::size_t frames_;
  std::size_t required_;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

/// T x V grid of per-frame log-probabilities. Every row is normalized.
class PosteriorGrid {
 public:
  static constexpr double kRowTolerance = 1e-6;

  PosteriorGrid() = default;

  explicit PosteriorGrid(Matrix logp) : logp_(std::move(logp)) {
    if (logp_.rows() < 1) throw Error("posterior grid needs at least one frame");
    if (logp_.cols() < 2) throw Error("posterior grid needs blank plus one label");
    for (std::size_t t = 0; t < logp_.rows(); ++t) {
      for (double x : logp_.row(t))
        if (std::isnan(x) || x > 0.0)
          throw Error("posterior grid frame " + std::to_string(t) +
                      " holds an invalid log-probability");
      const double z = LogSumExp(logp_.row(t));
      if (!(std::abs(z) <= kRowTolerance))
        throw Error("posterior grid frame " + std::to_string(t) +
                    " is not normalized (logsumexp = " + std::to_string(z) + ")");
    }
  }

  /// Applies log-softmax to each row of unnormalized scores.
  static PosteriorGrid FromLogits(const Matrix& logits) {
    Matrix logp(logits.rows(), logits.cols());
    for (std::size_t t = 0; t < logits.rows(); ++t) {
      const double z = LogSumExp(logits.row(t));
      for (std::size_t v = 0; v < logits.cols(); ++v) logp(t, v) = logits(t, v) - z;
    }
    return PosteriorGrid(std::move(logp));
  }

  std::size_t frames() const { return logp_.rows(); }
  std::size_t vocab_size() const { return logp_.cols(); }
  double operator()(std::size_t t, Label v) const {
    return logp_(t, static_cast<std::size_t>(v));
  }
  std::span<const double> frame(std::size_t t) const { return logp_.row(t); }
  const Matrix& logp() const { return logp_; }

  friend bool operator==(const PosteriorGrid&, const PosteriorGrid&) = default;

 private:
  Matrix logp_;
};

/// The B map: merge adjacent repeats, then delete blanks.
inline LabelSequence Collapse(std::span<const Label> path) {
  LabelSequence out;
  Label prev = -1;
  for (Label l : path) {
    if (l != prev && l != kBlank) out.push_back(l);
    prev = l;
  }
  return out;
}

/// Minimum number of frames needed to emit `target`.
inline std::size_t MinFrames(std::span<const Label> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

struct CtcLossResult {
  double loss = 0.0;  // -ln P(target | grid), nats
  Matrix grad;        // d loss / d logp, rows sum to zero
};

namespace internal {

inline void CheckTarget(const PosteriorGrid& grid, std::span<const Label> target) {
  for (Label l : target)
    if (l == kBlank || l < 0 || static_cast<std::size_t>(l) >= grid.vocab_size())
      throw Error("CTC target holds invalid label " + std::to_string(l));
  const std::size_t need = MinFrames(target);
  if (grid.frames() < need) throw InfeasibleTarget(grid.frames(), need);
}

// Extended label sequence: blank, l1, blank, l2, ..., blank.
inline LabelSequence Extend(std::span<const Label> target) {
  LabelSequence ext(2 * target.size() + 1, kBlank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

// alpha(t, s): log mass of prefixes ending at extended state s at frame t,
// emission at t included.
inline Matrix ForwardVariables(const PosteriorGrid& grid, const LabelSequence& ext) {
  const std::size_t T = grid.frames(), S = ext.size();
  Matrix alpha(T, S, kLogZero);
  alpha(0, 0) = grid(0, ext[0]);
  if (S > 1) alpha(0, 1) = grid(0, ext[1]);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2])
        a = LogAdd(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kLogZero ? kLogZero : a + grid(t, ext[s]);
    }
  }
  return alpha;
}

inline double TotalFromAlpha(const Matrix& alpha) {
  const std::size_t T = alpha.rows(), S = alpha.cols();
  double total = alpha(T - 1, S - 1);
  if (S > 1) total = LogAdd(total, alpha(T - 1, S - 2));
  return total;
}

}  // namespace internal

/// ln P(target | grid) by the forward recursion; kLogZero when infeasible.
inline double CtcLogLikelihood(const PosteriorGrid& grid, std::span<const Label> target) {
  for (Label l : target)
    if (l == kBlank || l < 0 || static_cast<std::size_t>(l) >= grid.vocab_size())
      throw Error("CTC target holds invalid label " + std::to_string(l));
  if (grid.frames() < MinFrames(target)) return kLogZero;
  const LabelSequence ext = internal::Extend(target);
  return internal::TotalFromAlpha(internal::ForwardVariables(grid, ext));
}

/// Negative log-likelihood of `target` summed over every alignment, with its
/// gradient with respect to the (row-normalized) log-probabilities.
inline CtcLossResult CtcLoss(const PosteriorGrid& grid, std::span<const Label> target) {
  internal::CheckTarget(grid, target);
  const std::size_t T = grid.frames(), V = grid.vocab_size();
  const LabelSequence ext = internal::Extend(target);
  const std::size_t S = ext.size();

  const Matrix alpha = internal::ForwardVariables(grid, ext);
  const double log_total = internal::TotalFromAlpha(alpha);
  if (log_total == kLogZero) throw InfeasibleTarget(T, MinFrames(target));

  // beta(t, s): log mass of suffixes after frame t given state s at t,
  // emission at t excluded.
  Matrix beta(T, S, kLogZero);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + grid(t + 1, ext[s]);
      if (s + 1 < S) b = LogAdd(b, beta(t + 1, s + 1) + grid(t + 1, ext[s + 1]));
      if (s + 2 < S && ext[s + 2] != kBlank && ext[s + 2] != ext[s])
        b = LogAdd(b, beta(t + 1, s + 2) + grid(t + 1, ext[s + 2]));
      beta(t, s) = b;
    }
  }

  CtcLossResult result;
  result.loss = -log_total;
  result.grad = Matrix(T, V);
  std::vector<double> occupancy(V);
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kLogZero);
    for (std::size_t s = 0; s < S; ++s) {
      const auto v = static_cast<std::size_t>(ext[s]);
      occupancy[v] = LogAdd(occupancy[v], alpha(t, s) + beta(t, s));
    }
    for (std::size_t v = 0; v < V; ++v)
      result.grad(t, v) = std::exp(grid(t, static_cast<Label>(v))) -
                          std::exp(occupancy[v] - log_total);
  }
  return result;
}

/// Oracle: enumerates all V^T paths. Refuses grids with V^T > 1e7.
inline double CtcLossBruteforce(const PosteriorGrid& grid, std::span<const Label> target) {
  const std::size_t T = grid.frames(), V = grid.vocab_size();
  double count = 1.0;
  for (std::size_t t = 0; t < T; ++t) {
    count *= static_cast<double>(V);
    if (count > 1e7) throw TooLarge("brute-force CTC needs V^T <= 1e7");
  }
  const LabelSequence want(target.begin(), target.end());
  LabelSequence path(T, kBlank);
  double total = kLogZero;
  for (;;) {
    if (Collapse(path) == want) {
      double lp = 0.0;
      for (std::size_t t = 0; t < T; ++t) lp += grid(t, path[t]);
      total = LogAdd(total, lp);
    }
    std::size_t t = 0;
    while (t < T && static_cast<std::size_t>(++path[t]) == V) path[t++] = 0;
    if (t == T) break;
  }
  if (total == kLogZero) throw InfeasibleTarget(T, MinFrames(target));
  return -total;
}

// ---------------------------------------------------------------------------
// Grid files: "CTCGRID v1 T=<T> V=<V>" then T lines of V log-probabilities.

inline void WriteGrid(std::ostream& os, const PosteriorGrid& grid) {
  os << "CTCGRID v1 T=" << grid.frames() << " V=" << grid.vocab_size() << '\n';
  char buf[32];
  for (std::size_t t = 0; t < grid.frames(); ++t) {
    for (std::size_t v = 0; v < grid.vocab_size(); ++v) {
      std::snprintf(buf, sizeof buf, "%.17g", grid.logp()(t, v));
      if (v) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

namespace internal {

// Parses "<MAGIC> v1 A=<a> B=<b>" headers shared by the grid and feature files.
inline std::pair<std::size_t, std::size_t> ParseShapeHeader(const std::string& line,
                                                            const std::string& magic,
                                                            char key_a, char key_b) {
  std::istringstream is(line);
  std::string m, ver, a, b, extra;
  if (!(is >> m >> ver >> a >> b) || (is >> extra) || m != magic || ver != "v1" ||
      a.size() < 3 || b.size() < 3 || a[0] != key_a || a[1] != '=' ||
      b[0] != key_b || b[1] != '=')
    throw Error("bad " + magic + " header: '" + line + "'");
  try {
    std::size_t pa = 0, pb = 0;
    const unsigned long va = std::stoul(a.substr(2), &pa);
    const unsigned long vb = std::stoul(b.substr(2), &pb);
    if (pa != a.size() - 2 || pb != b.size() - 2) throw std::invalid_argument("");
    return {va, vb};
  } catch (const std::logic_error&) {
    throw Error("bad " + magic + " header: '" + line + "'");
  }
}

inline Matrix ReadRows(std::istream& is, std::size_t rows, std::size_t cols,
                       const std::string& what) {
  Matrix m(rows, cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(is, line))
      throw Error(what + ": expected " + std::to_string(rows) + " rows, got " +
                  std::to_string(r));
    std::istringstream ls(line);
    std::string tok;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(ls >> tok))
        throw Error(what + ": row " + std::to_string(r) + " has too few values");
      if (tok == "-inf" || tok == "-Infinity") {
        m(r, c) = kLogZero;
      } else {
        try {
          std::size_t used = 0;
          m(r, c) = std::stod(tok, &used);
          if (used != tok.size()) throw std::invalid_argument("");
        } catch (const std::logic_error&) {
          throw Error(what + ": row " + std::to_string(r) + " holds bad number '" +
                      tok + "'");
        }
      }
    }
    if (ls >> tok) throw Error(what + ": row " + std::to_string(r) + " has too many values");
  }
  return m;
}

}  // namespace internal

inline PosteriorGrid ReadGrid(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error("empty grid file");
  const auto [T, V] = internal::ParseShapeHeader(header, "CTCGRID", 'T', 'V');
  return PosteriorGrid(internal::ReadRows(is, T, V, "CTCGRID"));
}

inline void SaveGrid(const std::string& path, const PosteriorGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write grid file " + path);
  WriteGrid(os, grid);
}

inline PosteriorGrid LoadGrid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open grid file " + path);
  return ReadGrid(is);
}

}  // namespace csasr
