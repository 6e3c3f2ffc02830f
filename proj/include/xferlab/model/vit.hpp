#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xferlab/model/config.hpp"
#include "xferlab/model/head.hpp"
#include "xferlab/model/parameters.hpp"
#include "xferlab/numerics/graph.hpp"
#include "xferlab/numerics/ops.hpp"

namespace xferlab::model {

namespace nx = xferlab::numerics;

// Logits for the [CLS] token and one attribution row per patch, both from a
// single pass through the frozen head.
struct SelfExplainingOutput {
  std::vector<double> logits;        // C
  std::vector<double> attributions;  // M x C, row m = patch m
  std::size_t num_patches = 0;
  std::size_t num_classes = 0;

  double attribution(std::size_t m, std::size_t c) const { return attributions[m * num_classes + c]; }

  std::vector<double> attribution_column(std::size_t c) const {
    std::vector<double> out(num_patches);
    for (std::size_t m = 0; m < num_patches; ++m) out[m] = attribution(m, c);
    return out;
  }
};

// argmax of the logits, lowest index on ties.
inline std::size_t predict_class(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c)
    if (logits[c] > logits[best]) best = c;
  return best;
}

inline std::size_t predict_class(const SelfExplainingOutput& out) { return predict_class(out.logits); }

// Image (channels x H x W, row-major) to an M x patch_dim matrix. Patch m is
// grid cell (m / grid, m % grid); within a patch values are ordered by
// channel, then row, then column.
inline std::vector<double> extract_patches(const ModelConfig& cfg, std::span<const double> image) {
  if (image.size() != cfg.image_values()) {
    throw DimensionError("image has " + std::to_string(image.size()) + " values, model expects " +
                         std::to_string(cfg.image_values()) + " (" + std::to_string(cfg.channels) + "x" +
                         std::to_string(cfg.image_size) + "x" + std::to_string(cfg.image_size) + ")");
  }
  const auto G = cfg.grid(), P = cfg.patch_size, S = cfg.image_size, C = cfg.channels;
  std::vector<double> out(cfg.num_patches() * cfg.patch_dim());
  std::size_t k = 0;
  for (std::size_t gy = 0; gy < G; ++gy)
    for (std::size_t gx = 0; gx < G; ++gx)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t dy = 0; dy < P; ++dy)
          for (std::size_t dx = 0; dx < P; ++dx) out[k++] = image[c * S * S + (gy * P + dy) * S + (gx * P + dx)];
  return out;
}

// The self-explaining classifier bound to one parameter vector and head.
// Parameters are graph leaves created once; each forward() appends the
// per-image computation, which rewind() can discard so many inputs can be
// evaluated without copying theta again.
class ModelGraph {
 public:
  struct Outputs {
    nx::Var logits;        // C
    nx::Var attributions;  // M x C
  };

  ModelGraph(const ModelConfig& cfg, const ParameterVector& theta, const HeadMatrix& head, bool trainable)
      : cfg_(cfg), layout_(theta.shared_layout()) {
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
    auto values = theta.values();
    for (const auto& e : theta.layout().entries()) {
      auto s = values.subspan(e.offset, e.size);
      Tensor t(e.shape, std::vector<double>(s.begin(), s.end()));
      auto v = trainable ? graph_.parameter(std::move(t)) : graph_.constant(std::move(t));
      params_.push_back(v);
      by_name_.emplace(e.name, v);
    }
    head_ = graph_.constant(Tensor({head.dim, head.num_classes()}, head.weights));
    num_classes_ = head.num_classes();
    base_mark_ = graph_.mark();
  }

  Outputs forward(std::span<const double> image) {
    auto& g = graph_;
    const auto M = cfg_.num_patches();
    auto patches = g.constant(Tensor({M, cfg_.patch_dim()}, extract_patches(cfg_, image)));
    auto emb = nx::add_bias(g, nx::matmul(g, patches, p("patch_embed.weight")), p("patch_embed.bias"));
    auto h = nx::add(g, nx::concat_rows(g, p("cls_token"), emb), p("pos_embed"));
    const auto heads = cfg_.num_heads, dh = cfg_.head_dim();
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
      const auto pre = "blocks." + std::to_string(l) + ".";
      auto a = nx::layer_norm(g, h, p(pre + "ln1.gain"), p(pre + "ln1.bias"), kLayerNormEps);
      auto q = nx::add_bias(g, nx::matmul(g, a, p(pre + "attn.q.weight")), p(pre + "attn.q.bias"));
      auto k = nx::matmul(g, a, p(pre + "attn.k.weight"));
      auto v = nx::add_bias(g, nx::matmul(g, a, p(pre + "attn.v.weight")), p(pre + "attn.v.bias"));
      std::vector<nx::Var> head_out;
      head_out.reserve(heads);
      for (std::size_t hd = 0; hd < heads; ++hd) {
        auto qh = heads == 1 ? q : nx::slice_cols(g, q, hd * dh, dh);
        auto kh = heads == 1 ? k : nx::slice_cols(g, k, hd * dh, dh);
        auto vh = heads == 1 ? v : nx::slice_cols(g, v, hd * dh, dh);
        auto attn = nx::softmax(g, nx::scale(g, nx::matmul_nt(g, qh, kh), inv_sqrt));
        head_out.push_back(nx::matmul(g, attn, vh));
      }
      auto merged = heads == 1 ? head_out[0] : nx::concat_cols(g, head_out);
      auto o = nx::add_bias(g, nx::matmul(g, merged, p(pre + "attn.out.weight")), p(pre + "attn.out.bias"));
      h = nx::add(g, h, o);
      auto a2 = nx::layer_norm(g, h, p(pre + "ln2.gain"), p(pre + "ln2.bias"), kLayerNormEps);
      auto hid = nx::gelu(g, nx::add_bias(g, nx::matmul(g, a2, p(pre + "mlp.fc1.weight")), p(pre + "mlp.fc1.bias")));
      auto m = nx::add_bias(g, nx::matmul(g, hid, p(pre + "mlp.fc2.weight")), p(pre + "mlp.fc2.bias"));
      h = nx::add(g, h, m);
    }
    auto f = nx::layer_norm(g, h, p("final_ln.gain"), p("final_ln.bias"), kLayerNormEps);
    auto out = nx::matmul(g, f, head_);  // (M+1) x C
    return {nx::row(g, out, 0), nx::slice_rows(g, out, 1, M)};
  }

  SelfExplainingOutput read(const Outputs& o) const {
    SelfExplainingOutput out;
    auto l = graph_.value(o.logits).data();
    auto a = graph_.value(o.attributions).data();
    out.logits.assign(l.begin(), l.end());
    out.attributions.assign(a.begin(), a.end());
    out.num_patches = cfg_.num_patches();
    out.num_classes = num_classes_;
    return out;
  }

  // Forward pass that leaves the graph as it was.
  SelfExplainingOutput evaluate(std::span<const double> image) {
    auto mark = graph_.mark();
    auto out = read(forward(image));
    graph_.rewind(mark);
    return out;
  }

  // Class-c logit only; the value function of the Shapley explainers.
  double logit(std::span<const double> image, std::size_t c) {
    auto mark = graph_.mark();
    auto o = forward(image);
    double v = graph_.value(o.logits)[c];
    graph_.rewind(mark);
    return v;
  }

  nx::Graph& graph() { return graph_; }
  void reset() { graph_.rewind(base_mark_); }

  // Accumulated gradient in canonical layout order (zeros where none flowed).
  std::vector<double> flat_gradient() const {
    std::vector<double> out;
    out.reserve(layout_->total());
    for (auto v : params_) {
      auto gr = graph_.grad(v);
      if (gr.empty()) {
        out.insert(out.end(), graph_.value(v).size(), 0.0);
      } else {
        out.insert(out.end(), gr.begin(), gr.end());
      }
    }
    return out;
  }

  void zero_grad() { graph_.zero_grad(); }

  const ModelConfig& config() const { return cfg_; }
  std::size_t num_classes() const { return num_classes_; }

 private:
  nx::Var p(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw IndexError("no parameter named '" + name + "'");
    return it->second;
  }

  ModelConfig cfg_;
  std::shared_ptr<const ParameterLayout> layout_;
  nx::Graph graph_;
  std::vector<nx::Var> params_;
  std::unordered_map<std::string, nx::Var> by_name_;
  nx::Var head_;
  std::size_t num_classes_ = 0;
  std::size_t base_mark_ = 0;
};

inline SelfExplainingOutput forward(const ModelConfig& cfg, const ParameterVector& theta, const HeadMatrix& head,
                                    std::span<const double> image) {
  ModelGraph mg(cfg, theta, head, /*trainable=*/false);
  return mg.evaluate(image);
}

}  // namespace xferlab::model
