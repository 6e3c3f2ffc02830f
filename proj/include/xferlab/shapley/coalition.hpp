#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xferlab/model/inference.hpp"
#include "xferlab/util/error.hpp"

namespace xferlab::shapley {

using Bits = std::uint64_t;

// present[m] = true keeps patch m of the input; false takes it from the
// baseline.
struct CoalitionMask {
  std::vector<bool> present;

  static CoalitionMask full(std::size_t M) { return {std::vector<bool>(M, true)}; }
  static CoalitionMask empty(std::size_t M) { return {std::vector<bool>(M, false)}; }

  static CoalitionMask from_bits(Bits bits, std::size_t M) {
    if (M > 64) throw ContractError("bitmask coalitions support at most 64 patches");
    CoalitionMask out{std::vector<bool>(M)};
    for (std::size_t m = 0; m < M; ++m) out.present[m] = ((bits >> m) & 1u) != 0;
    return out;
  }

  Bits bits() const {
    if (present.size() > 64) throw ContractError("bitmask coalitions support at most 64 patches");
    Bits b = 0;
    for (std::size_t m = 0; m < present.size(); ++m)
      if (present[m]) b |= Bits(1) << m;
    return b;
  }

  CoalitionMask complement() const {
    CoalitionMask out = *this;
    out.present.flip();
    return out;
  }

  std::size_t size() const { return present.size(); }
};

inline Bits all_bits(std::size_t M) { return M >= 64 ? ~Bits(0) : (Bits(1) << M) - 1; }

// Copies kept patches from x and the rest from the baseline.
inline std::vector<double> mask_apply(const model::ModelConfig& cfg, std::span<const double> x,
                                      const CoalitionMask& mask, std::span<const double> baseline) {
  if (x.size() != cfg.image_values() || baseline.size() != cfg.image_values()) {
    throw DimensionError("mask_apply: image/baseline size does not match the model geometry");
  }
  if (mask.size() != cfg.num_patches()) {
    throw DimensionError("mask_apply: mask has " + std::to_string(mask.size()) + " entries, model has " +
                         std::to_string(cfg.num_patches()) + " patches");
  }
  std::vector<double> out(baseline.begin(), baseline.end());
  const auto G = cfg.grid(), P = cfg.patch_size, S = cfg.image_size;
  for (std::size_t m = 0; m < mask.size(); ++m) {
    if (!mask.present[m]) continue;
    const auto gy = m / G, gx = m % G;
    for (std::size_t c = 0; c < cfg.channels; ++c)
      for (std::size_t dy = 0; dy < P; ++dy) {
        const auto base = c * S * S + (gy * P + dy) * S + gx * P;
        for (std::size_t dx = 0; dx < P; ++dx) out[base + dx] = x[base + dx];
      }
  }
  return out;
}

// v(S) = class-c logit of the masked input.
inline double value(const model::ModelConfig& cfg, const model::ParameterVector& theta, const model::HeadMatrix& head,
                    std::span<const double> x, const CoalitionMask& mask, std::span<const double> baseline,
                    std::size_t c) {
  if (c >= head.num_classes()) throw IndexError("class " + std::to_string(c) + " out of range");
  model::InferenceEngine engine(cfg, theta, head);
  return engine.logit(mask_apply(cfg, x, mask, baseline), c);
}

// Model-backed coalition game for one (x, baseline, class). Patch embeddings
// of x and of the baseline are computed once; each coalition then assembles
// its embedding rows directly, which equals embedding the masked image.
class ModelGame {
 public:
  ModelGame(model::InferenceEngine& engine, std::span<const double> x, std::span<const double> baseline,
            std::size_t c)
      : engine_(engine), c_(c) {
    const auto& cfg = engine.config();
    if (c >= engine.num_classes()) throw IndexError("class " + std::to_string(c) + " out of range");
    if (baseline.size() != cfg.image_values()) throw DimensionError("baseline size does not match model geometry");
    engine_.embed_image(x, emb_x_);
    engine_.embed_image(baseline, emb_b_);
    rows_.resize(emb_x_.size());
    num_patches_ = cfg.num_patches();
    dim_ = cfg.embed_dim;
  }

  std::size_t num_players() const { return num_patches_; }

  double operator()(Bits s) {
    for (std::size_t m = 0; m < num_patches_; ++m) {
      const auto& src = ((s >> m) & 1u) ? emb_x_ : emb_b_;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(m * dim_), dim_,
                  rows_.begin() + static_cast<std::ptrdiff_t>(m * dim_));
    }
    return engine_.run_embedded(rows_, /*cls_only=*/true)[c_];
  }

 private:
  model::InferenceEngine& engine_;
  std::size_t c_;
  std::size_t num_patches_ = 0, dim_ = 0;
  std::vector<double> emb_x_, emb_b_, rows_;
};

}  // namespace xferlab::shapley
