// csasr/acoustic_model.hpp

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
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csasr/common.hpp"
#include "csasr/ctc.hpp"
#include "csasr/features.hpp"

namespace csasr {

/// Single tanh recurrent layer followed by an affine map and log-softmax:
///   h_t = tanh(Wx x_t + Wh h_{t-1} + bh),  log P(.|x_{1..t}) = logsoftmax(Wo h_t + bo).
/// Parameters live in one flat vector so that gradients and optimizer state
/// share its layout.
class ToyAcousticModel {
 public:
  ToyAcousticModel() = default;

  ToyAcousticModel(std::size_t input_dim, std::size_t hidden, std::size_t vocab)
      : F_(input_dim), H_(hidden), V_(vocab), params_(Count(input_dim, hidden, vocab), 0.0) {
    if (F_ == 0 || H_ == 0 || V_ < 2) throw Error("invalid acoustic model shape");
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static ToyAcousticModel Random(std::size_t input_dim, std::size_t hidden, std::size_t vocab,
                                 std::uint64_t seed) {
    ToyAcousticModel m(input_dim, hidden, vocab);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t offset, std::size_t n, double scale) {
      std::uniform_real_distribution<double> u(-scale, scale);
      for (std::size_t i = 0; i < n; ++i) m.params_[offset + i] = u(rng);
    };
    fill(m.wx_offset(), m.H_ * m.F_, 1.0 / std::sqrt(static_cast<double>(m.F_)));
    fill(m.wh_offset(), m.H_ * m.H_, 1.0 / std::sqrt(static_cast<double>(m.H_)));
    fill(m.wo_offset(), m.V_ * m.H_, 1.0 / std::sqrt(static_cast<double>(m.H_)));
    return m;
  }

  static std::size_t Count(std::size_t F, std::size_t H, std::size_t V) {
    return H * F + H * H + H + V * H + V;
  }

  std::size_t input_dim() const { return F_; }
  std::size_t hidden() const { return H_; }
  std::size_t vocab_size() const { return V_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::size_t wx_offset() const { return 0; }
  std::size_t wh_offset() const { return H_ * F_; }
  std::size_t bh_offset() const { return H_ * F_ + H_ * H_; }
  std::size_t wo_offset() const { return bh_offset() + H_; }
  std::size_t bo_offset() const { return wo_offset() + V_ * H_; }

  struct Activations {
    Matrix hidden;  // T x H
    Matrix logits;  // T x V
  };

  Activations Run(const FeatureFrames& x) const {
    if (x.dim() != F_)
      throw ShapeMismatch("features have dimension " + std::to_string(x.dim()) +
                          ", model expects " + std::to_string(F_));
    if (x.size() == 0) throw ShapeMismatch("no feature frames");
    const std::size_t T = x.size();
    const double* wx = &params_[wx_offset()];
    const double* wh = &params_[wh_offset()];
    const double* bh = &params_[bh_offset()];
    const double* wo = &params_[wo_offset()];
    const double* bo = &params_[bo_offset()];
    Activations a{Matrix(T, H_), Matrix(T, V_)};
    for (std::size_t t = 0; t < T; ++t) {
      const auto xt = x.frames.row(t);
      auto ht = a.hidden.row(t);
      for (std::size_t i = 0; i < H_; ++i) {
        double s = bh[i];
        const double* wrow = wx + i * F_;
        for (std::size_t k = 0; k < F_; ++k) s += wrow[k] * xt[k];
        if (t > 0) {
          const auto hp = a.hidden.row(t - 1);
          const double* urow = wh + i * H_;
          for (std::size_t j = 0; j < H_; ++j) s += urow[j] * hp[j];
        }
        ht[i] = std::tanh(s);
      }
      for (std::size_t v = 0; v < V_; ++v) {
        double s = bo[v];
        const double* orow = wo + v * H_;
        for (std::size_t i = 0; i < H_; ++i) s += orow[i] * ht[i];
        a.logits(t, v) = s;
      }
    }
    return a;
  }

  PosteriorGrid Forward(const FeatureFrames& x) const {
    return PosteriorGrid::FromLogits(Run(x).logits);
  }

  /// Back-propagates d loss / d logits through time; accumulates into `grad`.
  void Backward(const FeatureFrames& x, const Activations& a, const Matrix& dlogits,
                std::vector<double>& grad) const {
    const std::size_t T = x.size();
    double* gwx = &grad[wx_offset()];
    double* gwh = &grad[wh_offset()];
    double* gbh = &grad[bh_offset()];
    double* gwo = &grad[wo_offset()];
    double* gbo = &grad[bo_offset()];
    const double* wh = &params_[wh_offset()];
    const double* wo = &params_[wo_offset()];
    std::vector<double> dh(H_), dnext(H_, 0.0), da(H_);
    for (std::size_t t = T; t-- > 0;) {
      const auto ht = a.hidden.row(t);
      const auto dz = dlogits.row(t);
      std::copy(dnext.begin(), dnext.end(), dh.begin());
      for (std::size_t v = 0; v < V_; ++v) {
        const double g = dz[v];
        if (g == 0.0) continue;
        gbo[v] += g;
        double* orow = gwo + v * H_;
        const double* wrow = wo + v * H_;
        for (std::size_t i = 0; i < H_; ++i) {
          orow[i] += g * ht[i];
          dh[i] += g * wrow[i];
        }
      }
      for (std::size_t i = 0; i < H_; ++i) da[i] = dh[i] * (1.0 - ht[i] * ht[i]);
      const auto xt = x.frames.row(t);
      for (std::size_t i = 0; i < H_; ++i) {
        const double g = da[i];
        gbh[i] += g;
        double* grow = gwx + i * F_;
        for (std::size_t k = 0; k < F_; ++k) grow[k] += g * xt[k];
      }
      std::fill(dnext.begin(), dnext.end(), 0.0);
      if (t > 0) {
        const auto hp = a.hidden.row(t - 1);
        for (std::size_t i = 0; i < H_; ++i) {
          const double g = da[i];
          double* grow = gwh + i * H_;
          const double* urow = wh + i * H_;
          for (std::size_t j = 0; j < H_; ++j) {
            grow[j] += g * hp[j];
            dnext[j] += g * urow[j];
          }
        }
      }
    }
  }

  friend bool operator==(const ToyAcousticModel&, const ToyAcousticModel&) = default;

 private:
  std::size_t F_ = 0, H_ = 0, V_ = 0;
  std::vector<double> params_;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// CTC loss of one utterance and its gradient w.r.t. every model parameter.
inline LossAndGradient CtcLossAndGradient(const ToyAcousticModel& model, const FeatureFrames& x,
                                          std::span<const Label> target) {
  const auto acts = model.Run(x);
  const PosteriorGrid grid = PosteriorGrid::FromLogits(acts.logits);
  CtcLossResult ctc = CtcLoss(grid, target);
  LossAndGradient out{ctc.loss, std::vector<double>(model.parameter_count(), 0.0)};
  model.Backward(x, acts, ctc.grad, out.grad);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: a text header with a version tag and the vocabulary hash,
// then every parameter as a C99 hex float so that save(load(x)) == x.

struct Checkpoint {
  ToyAcousticModel model;
  std::uint64_t vocab_hash = 0;
  std::optional<FeatureNormalizer> normalizer;
};

inline void WriteCheckpoint(std::ostream& os, const Checkpoint& ck) {
  const auto& m = ck.model;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(ck.vocab_hash));
  os << "CSASR-CHECKPOINT v1\n";
  os << "vocab_hash " << buf << '\n';
  os << "shape " << m.input_dim() << ' ' << m.hidden() << ' ' << m.vocab_size() << '\n';
  os << "normalizer " << (ck.normalizer ? 1 : 0) << '\n';
  auto dump = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", v[i]);
      os << buf << ((i + 1) % 8 == 0 || i + 1 == v.size() ? '\n' : ' ');
    }
  };
  if (ck.normalizer) {
    dump(ck.normalizer->mean());
    dump(ck.normalizer->stddev());
  }
  os << "params " << m.parameter_count() << '\n';
  dump(m.params());
  os << "end\n";
}

inline Checkpoint ReadCheckpoint(std::istream& is) {
  std::string line, key;
  auto expect = [&](const std::string& want) {
    if (!(is >> key) || key != want) throw Error("checkpoint: expected '" + want + "'");
  };
  if (!std::getline(is, line) || line != "CSASR-CHECKPOINT v1")
    throw Error("checkpoint: missing or unsupported version tag");
  Checkpoint ck;
  std::string hash;
  expect("vocab_hash");
  is >> hash;
  try {
    ck.vocab_hash = std::stoull(hash, nullptr, 16);
  } catch (const std::logic_error&) {
    throw Error("checkpoint: bad vocab hash");
  }
  std::size_t F = 0, H = 0, V = 0;
  int has_norm = 0;
  expect("shape");
  if (!(is >> F >> H >> V)) throw Error("checkpoint: bad shape");
  expect("normalizer");
  if (!(is >> has_norm)) throw Error("checkpoint: bad normalizer flag");
  auto load = [&](std::size_t n) {
    std::vector<double> v(n);
    std::string tok;
    for (auto& x : v) {
      if (!(is >> tok)) throw Error("checkpoint: truncated values");
      x = std::strtod(tok.c_str(), nullptr);
    }
    return v;
  };
  if (has_norm) {
    auto mean = load(F);
    auto sd = load(F);
    ck.normalizer = FeatureNormalizer(std::move(mean), std::move(sd));
  }
  std::size_t count = 0;
  expect("params");
  if (!(is >> count)) throw Error("checkpoint: bad parameter count");
  ck.model = ToyAcousticModel(F, H, V);
  if (count != ck.model.parameter_count())
    throw Error("checkpoint: parameter count does not match shape");
  ck.model.params() = load(count);
  expect("end");
  return ck;
}

inline void SaveCheckpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write checkpoint " + path);
  WriteCheckpoint(os, ck);
}

inline Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path);
  return ReadCheckpoint(is);
}

}  // namespace csasr
