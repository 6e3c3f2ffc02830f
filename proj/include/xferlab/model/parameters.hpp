#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/model/config.hpp"
#include "xferlab/numerics/tensor.hpp"
#include "xferlab/util/error.hpp"
#include "xferlab/util/hash.hpp"

namespace xferlab::model {

using numerics::Shape;
using numerics::Tensor;

// Named tensors; std::map keeps them sorted by name, which is the canonical
// flattening order.
using NamedParameters = std::map<std::string, Tensor>;

struct LayoutEntry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t size = 0;

  bool operator==(const LayoutEntry&) const = default;
};

class ParameterLayout {
 public:
  ParameterLayout() = default;

  explicit ParameterLayout(std::vector<LayoutEntry> entries) : entries_(std::move(entries)) {
    Fnv1a h;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto& e = entries_[i];
      if (i > 0 && !(entries_[i - 1].name < e.name)) {
        throw FormatError("parameter layout is not strictly sorted at '" + e.name + "'");
      }
      if (e.offset != offset || e.size != numerics::element_count(e.shape)) {
        throw FormatError("parameter layout entry '" + e.name + "' is not contiguous");
      }
      offset += e.size;
      h.str(e.name).u64(e.shape.size());
      for (auto d : e.shape) h.u64(d);
    }
    total_ = offset;
    fingerprint_ = h.u64(total_).digest();
  }

  static ParameterLayout from_shapes(const std::vector<std::pair<std::string, Shape>>& named_shapes) {
    std::vector<LayoutEntry> entries;
    std::size_t offset = 0;
    for (const auto& [name, shape] : named_shapes) {
      auto n = numerics::element_count(shape);
      entries.push_back({name, shape, offset, n});
      offset += n;
    }
    return ParameterLayout(std::move(entries));
  }

  const std::vector<LayoutEntry>& entries() const { return entries_; }
  std::size_t total() const { return total_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  const LayoutEntry& entry(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e;
    throw IndexError("no parameter named '" + name + "'");
  }

 private:
  std::vector<LayoutEntry> entries_;
  std::size_t total_ = 0;
  std::uint64_t fingerprint_ = 0;
};

// Flat parameter vector theta in R^D with its canonical layout. Two vectors
// are arithmetic-compatible iff their layout fingerprints agree.
class ParameterVector {
 public:
  ParameterVector() = default;

  ParameterVector(std::shared_ptr<const ParameterLayout> layout, std::vector<double> values)
      : layout_(std::move(layout)), values_(std::move(values)) {
    if (!layout_) throw ContractError("parameter vector without layout");
    if (values_.size() != layout_->total()) {
      throw DimensionError("parameter vector has " + std::to_string(values_.size()) + " values, layout needs " +
                           std::to_string(layout_->total()));
    }
  }

  const ParameterLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParameterLayout>& shared_layout() const { return layout_; }
  std::uint64_t layout_fingerprint() const { return layout_ ? layout_->fingerprint() : 0; }

  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> slice(const std::string& name) const {
    const auto& e = layout_->entry(name);
    return std::span<const double>(values_).subspan(e.offset, e.size);
  }

  // Content hash over layout and values; the artifact identity.
  std::uint64_t fingerprint() const { return Fnv1a().u64(layout_fingerprint()).doubles(values_).digest(); }

  bool compatible_with(const ParameterVector& other) const {
    return layout_fingerprint() == other.layout_fingerprint();
  }

 private:
  std::shared_ptr<const ParameterLayout> layout_;
  std::vector<double> values_;
};

inline void require_compatible(const ParameterVector& a, const ParameterVector& b, const std::string& what) {
  if (!a.compatible_with(b)) {
    throw CompatibilityError(what + ": layout fingerprints " + hex64(a.layout_fingerprint()) + " and " +
                             hex64(b.layout_fingerprint()) + " differ");
  }
}

inline ParameterVector flatten(const NamedParameters& params) {
  std::vector<std::pair<std::string, Shape>> shapes;
  std::size_t total = 0;
  for (const auto& [name, t] : params) {
    shapes.emplace_back(name, t.shape());
    total += t.size();
  }
  auto layout = std::make_shared<const ParameterLayout>(ParameterLayout::from_shapes(shapes));
  std::vector<double> values;
  values.reserve(total);
  for (const auto& [name, t] : params) values.insert(values.end(), t.data().begin(), t.data().end());
  return ParameterVector(std::move(layout), std::move(values));
}

inline NamedParameters unflatten(const ParameterVector& theta) {
  NamedParameters out;
  auto values = theta.values();
  for (const auto& e : theta.layout().entries()) {
    auto s = values.subspan(e.offset, e.size);
    out.emplace(e.name, Tensor(e.shape, std::vector<double>(s.begin(), s.end())));
  }
  return out;
}

// Unflatten against an expected layout; refuses foreign vectors.
inline NamedParameters unflatten(const ParameterVector& theta, const ParameterLayout& expected) {
  if (theta.layout_fingerprint() != expected.fingerprint()) {
    throw CompatibilityError("unflatten: vector layout " + hex64(theta.layout_fingerprint()) +
                             " does not match expected " + hex64(expected.fingerprint()));
  }
  return unflatten(theta);
}

// Parameter names and shapes of the transformer, in canonical order.
inline std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& cfg) {
  cfg.validate();
  const auto K = cfg.embed_dim, H = cfg.hidden_dim(), M = cfg.num_patches();
  std::map<std::string, Shape> shapes;
  shapes["cls_token"] = {1, K};
  shapes["pos_embed"] = {M + 1, K};
  shapes["patch_embed.weight"] = {cfg.patch_dim(), K};
  shapes["patch_embed.bias"] = {K};
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const auto p = "blocks." + std::to_string(l) + ".";
    shapes[p + "ln1.gain"] = {K};
    shapes[p + "ln1.bias"] = {K};
    shapes[p + "attn.q.weight"] = {K, K};
    shapes[p + "attn.q.bias"] = {K};
    // No key bias: it shifts every score in a softmax row equally.
    shapes[p + "attn.k.weight"] = {K, K};
    shapes[p + "attn.v.weight"] = {K, K};
    shapes[p + "attn.v.bias"] = {K};
    shapes[p + "attn.out.weight"] = {K, K};
    shapes[p + "attn.out.bias"] = {K};
    shapes[p + "ln2.gain"] = {K};
    shapes[p + "ln2.bias"] = {K};
    shapes[p + "mlp.fc1.weight"] = {K, H};
    shapes[p + "mlp.fc1.bias"] = {H};
    shapes[p + "mlp.fc2.weight"] = {H, K};
    shapes[p + "mlp.fc2.bias"] = {K};
  }
  shapes["final_ln.gain"] = {K};
  shapes["final_ln.bias"] = {K};
  return {shapes.begin(), shapes.end()};
}

inline std::shared_ptr<const ParameterLayout> model_layout(const ModelConfig& cfg) {
  return std::make_shared<const ParameterLayout>(ParameterLayout::from_shapes(parameter_shapes(cfg)));
}

// Random initialization: N(0, 0.02^2) weights and embeddings, zero biases,
// unit layer-norm gains. Deterministic in cfg.seed.
inline NamedParameters init_parameters(const ModelConfig& cfg) {
  NamedParameters out;
  for (const auto& [name, shape] : parameter_shapes(cfg)) {
    std::vector<double> values(numerics::element_count(shape), 0.0);
    const bool is_gain = name.ends_with(".gain");
    const bool is_bias = name.ends_with(".bias");
    if (is_gain) {
      std::fill(values.begin(), values.end(), 1.0);
    } else if (!is_bias) {
      std::mt19937_64 rng(derive_seed(cfg.seed, "init", name));
      std::normal_distribution<double> normal(0.0, 0.02);
      for (auto& v : values) v = normal(rng);
    }
    out.emplace(name, Tensor(shape, std::move(values)));
  }
  return out;
}

inline ParameterVector init_parameter_vector(const ModelConfig& cfg) { return flatten(init_parameters(cfg)); }

}  // namespace xferlab::model
