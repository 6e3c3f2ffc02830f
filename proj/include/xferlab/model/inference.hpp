#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xferlab/model/vit.hpp"
#include "xferlab/numerics/ops.hpp"

namespace xferlab::model {

// Allocation-free forward pass for evaluation-heavy work (Shapley
// enumeration, infidelity, metrics). Uses the same kernels in the same order
// as ModelGraph::forward, so both paths return bit-identical outputs.
// Not thread-safe: one engine per worker.
class InferenceEngine {
 public:
  InferenceEngine(const ModelConfig& cfg, const ParameterVector& theta, const HeadMatrix& head)
      : cfg_(cfg), theta_(theta.values().begin(), theta.values().end()), head_(head) {
    cfg_.validate();
    auto expected = model_layout(cfg_);
    if (theta.layout_fingerprint() != expected->fingerprint()) {
      throw CompatibilityError("parameter layout " + hex64(theta.layout_fingerprint()) +
                               " does not match model config layout " + hex64(expected->fingerprint()));
    }
    if (head.dim != cfg_.embed_dim) {
      throw DimensionError("head dimension " + std::to_string(head.dim) + " != embed_dim " +
                           std::to_string(cfg_.embed_dim));
    }
    const auto& layout = theta.layout();
    auto at = [&](const std::string& name) { return theta_.data() + layout.entry(name).offset; };
    cls_ = at("cls_token");
    pos_ = at("pos_embed");
    pe_w_ = at("patch_embed.weight");
    pe_b_ = at("patch_embed.bias");
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
      const auto p = "blocks." + std::to_string(l) + ".";
      blocks_.push_back({at(p + "ln1.gain"), at(p + "ln1.bias"), at(p + "attn.q.weight"), at(p + "attn.q.bias"),
                         at(p + "attn.k.weight"), at(p + "attn.v.weight"), at(p + "attn.v.bias"),
                         at(p + "attn.out.weight"), at(p + "attn.out.bias"), at(p + "ln2.gain"), at(p + "ln2.bias"),
                         at(p + "mlp.fc1.weight"), at(p + "mlp.fc1.bias"), at(p + "mlp.fc2.weight"),
                         at(p + "mlp.fc2.bias")});
    }
    fl_g_ = at("final_ln.gain");
    fl_b_ = at("final_ln.bias");
    const auto T = cfg_.num_patches() + 1, K = cfg_.embed_dim, Hd = cfg_.hidden_dim(), dh = cfg_.head_dim();
    h_.resize(T * K);
    a_.resize(T * K);
    q_.resize(T * K);
    k_.resize(T * K);
    v_.resize(T * K);
    qh_.resize(T * dh);
    kh_.resize(T * dh);
    vh_.resize(T * dh);
    scores_.resize(T * T);
    probs_.resize(T * T);
    oh_.resize(T * dh);
    merged_.resize(T * K);
    o_.resize(T * K);
    hid_.resize(T * Hd);
    out_.resize(T * head_.num_classes());
  }

  const ModelConfig& config() const { return cfg_; }
  std::size_t num_classes() const { return head_.num_classes(); }

  // Full forward on an image; returns (M+1) x C head outputs, row 0 = logits.
  std::span<const double> run(std::span<const double> image) {
    embed_image(image, emb_);
    return run_embedded(emb_, /*cls_only=*/false);
  }

  SelfExplainingOutput evaluate(std::span<const double> image) {
    auto out = run(image);
    const auto C = num_classes(), M = cfg_.num_patches();
    SelfExplainingOutput r;
    r.num_patches = M;
    r.num_classes = C;
    r.logits.assign(out.begin(), out.begin() + C);
    r.attributions.assign(out.begin() + C, out.end());
    return r;
  }

  // Logits only. The last block is evaluated for the [CLS] row alone, which
  // gives the same values as the full pass since rows only interact through
  // attention keys and values.
  std::span<const double> logits(std::span<const double> image) {
    embed_image(image, emb_);
    return run_embedded(emb_, /*cls_only=*/true);
  }

  double logit(std::span<const double> image, std::size_t c) { return logits(image)[c]; }

  // Patch embedding rows (M x K, bias included) for an image. Row m depends
  // only on patch m, so masked inputs can be assembled from cached rows.
  void embed_image(std::span<const double> image, std::vector<double>& rows) {
    auto p = extract_patches(cfg_, image);
    const auto M = cfg_.num_patches(), K = cfg_.embed_dim;
    rows.assign(M * K, 0.0);
    numerics::detail::gemm_nn(p.data(), pe_w_, rows.data(), M, cfg_.patch_dim(), K);
    add_bias_rows(rows.data(), pe_b_, M, K);
  }

  // Forward from patch embedding rows. With cls_only the result holds the C
  // logits; otherwise (M+1) x C outputs.
  std::span<const double> run_embedded(std::span<const double> rows, bool cls_only) {
    if (rows.size() != cfg_.num_patches() * cfg_.embed_dim) throw DimensionError("embedding rows size mismatch");
    return run_tokens(rows.data(), cls_only);
  }

 private:
  struct Block {
    const double *ln1_g, *ln1_b, *q_w, *q_b, *k_w, *v_w, *v_b, *o_w, *o_b, *ln2_g, *ln2_b, *fc1_w, *fc1_b, *fc2_w,
        *fc2_b;
  };

  static void add_bias_rows(double* x, const double* b, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) x[i * cols + j] += b[j];
  }

  std::span<const double> run_tokens(const double* emb, bool cls_only) {
    namespace d = numerics::detail;
    const auto M = cfg_.num_patches(), T = M + 1, K = cfg_.embed_dim;
    const auto H = cfg_.num_heads, dh = cfg_.head_dim(), Hd = cfg_.hidden_dim(), C = head_.num_classes();
    for (std::size_t j = 0; j < K; ++j) h_[j] = cls_[j] + pos_[j];
    for (std::size_t i = 0; i < M * K; ++i) h_[K + i] = emb[i] + pos_[K + i];
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      const auto& b = blocks_[l];
      // Rows whose outputs are still needed after this block.
      const std::size_t R = (cls_only && l + 1 == blocks_.size()) ? 1 : T;
      for (std::size_t t = 0; t < T; ++t) d::layer_norm_row(&h_[t * K], b.ln1_g, b.ln1_b, kLayerNormEps, &a_[t * K], K);
      std::fill(q_.begin(), q_.begin() + R * K, 0.0);
      std::fill(k_.begin(), k_.end(), 0.0);
      std::fill(v_.begin(), v_.end(), 0.0);
      d::gemm_nn(a_.data(), b.q_w, q_.data(), R, K, K);
      add_bias_rows(q_.data(), b.q_b, R, K);
      d::gemm_nn(a_.data(), b.k_w, k_.data(), T, K, K);
      d::gemm_nn(a_.data(), b.v_w, v_.data(), T, K, K);
      add_bias_rows(v_.data(), b.v_b, T, K);
      for (std::size_t hd = 0; hd < H; ++hd) {
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t j = 0; j < dh; ++j) {
            kh_[t * dh + j] = k_[t * K + hd * dh + j];
            vh_[t * dh + j] = v_[t * K + hd * dh + j];
          }
        for (std::size_t t = 0; t < R; ++t)
          for (std::size_t j = 0; j < dh; ++j) qh_[t * dh + j] = q_[t * K + hd * dh + j];
        std::fill(scores_.begin(), scores_.begin() + R * T, 0.0);
        d::gemm_nt(qh_.data(), kh_.data(), scores_.data(), R, dh, T);
        for (std::size_t i = 0; i < R * T; ++i) scores_[i] *= inv_sqrt;
        for (std::size_t t = 0; t < R; ++t) d::softmax_row(&scores_[t * T], &probs_[t * T], T);
        std::fill(oh_.begin(), oh_.begin() + R * dh, 0.0);
        d::gemm_nn(probs_.data(), vh_.data(), oh_.data(), R, T, dh);
        for (std::size_t t = 0; t < R; ++t)
          for (std::size_t j = 0; j < dh; ++j) merged_[t * K + hd * dh + j] = oh_[t * dh + j];
      }
      std::fill(o_.begin(), o_.begin() + R * K, 0.0);
      d::gemm_nn(merged_.data(), b.o_w, o_.data(), R, K, K);
      add_bias_rows(o_.data(), b.o_b, R, K);
      for (std::size_t i = 0; i < R * K; ++i) h_[i] = h_[i] + o_[i];
      for (std::size_t t = 0; t < R; ++t) d::layer_norm_row(&h_[t * K], b.ln2_g, b.ln2_b, kLayerNormEps, &a_[t * K], K);
      std::fill(hid_.begin(), hid_.begin() + R * Hd, 0.0);
      d::gemm_nn(a_.data(), b.fc1_w, hid_.data(), R, K, Hd);
      add_bias_rows(hid_.data(), b.fc1_b, R, Hd);
      for (std::size_t i = 0; i < R * Hd; ++i) hid_[i] = numerics::gelu_value(hid_[i]);
      std::fill(o_.begin(), o_.begin() + R * K, 0.0);
      d::gemm_nn(hid_.data(), b.fc2_w, o_.data(), R, Hd, K);
      add_bias_rows(o_.data(), b.fc2_b, R, K);
      for (std::size_t i = 0; i < R * K; ++i) h_[i] = h_[i] + o_[i];
    }
    const std::size_t R = cls_only ? 1 : T;
    for (std::size_t t = 0; t < R; ++t) d::layer_norm_row(&h_[t * K], fl_g_, fl_b_, kLayerNormEps, &a_[t * K], K);
    std::fill(out_.begin(), out_.begin() + R * C, 0.0);
    d::gemm_nn(a_.data(), head_.weights.data(), out_.data(), R, K, C);
    return std::span<const double>(out_).first(R * C);
  }

  ModelConfig cfg_;
  std::vector<double> theta_;
  HeadMatrix head_;
  const double *cls_ = nullptr, *pos_ = nullptr, *pe_w_ = nullptr, *pe_b_ = nullptr, *fl_g_ = nullptr,
               *fl_b_ = nullptr;
  std::vector<Block> blocks_;
  std::vector<double> emb_, h_, a_, q_, k_, v_, qh_, kh_, vh_, scores_, probs_, oh_, merged_, o_, hid_, out_;
};

}  // namespace xferlab::model
