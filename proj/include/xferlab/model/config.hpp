#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "xferlab/util/error.hpp"
#include "xferlab/util/hash.hpp"

namespace xferlab::model {

// Geometry and width of the self-explaining vision transformer.
struct ModelConfig {
  std::size_t image_size = 32;
  std::size_t patch_size = 8;
  std::size_t channels = 3;
  std::size_t embed_dim = 64;
  std::size_t num_layers = 4;
  std::size_t num_heads = 4;
  std::size_t mlp_ratio = 4;
  std::uint64_t seed = 0;

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t patch_dim() const { return patch_size * patch_size * channels; }
  std::size_t image_values() const { return channels * image_size * image_size; }
  std::size_t head_dim() const { return embed_dim / num_heads; }
  std::size_t hidden_dim() const { return embed_dim * mlp_ratio; }

  void validate() const {
    if (image_size == 0 || patch_size == 0 || channels == 0 || embed_dim == 0 || num_layers == 0 ||
        num_heads == 0 || mlp_ratio == 0) {
      throw ConfigError("model dimensions must be positive");
    }
    if (image_size % patch_size != 0) {
      throw ConfigError("image_size " + std::to_string(image_size) + " is not divisible by patch_size " +
                        std::to_string(patch_size));
    }
    if (embed_dim % num_heads != 0) {
      throw ConfigError("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
                        std::to_string(num_heads));
    }
    if (embed_dim < 2) throw ConfigError("embed_dim must be at least 2");
  }

  std::uint64_t fingerprint() const {
    return Fnv1a()
        .u64(image_size)
        .u64(patch_size)
        .u64(channels)
        .u64(embed_dim)
        .u64(num_layers)
        .u64(num_heads)
        .u64(mlp_ratio)
        .u64(seed)
        .digest();
  }

  bool operator==(const ModelConfig&) const = default;
};

// Layer norm epsilon used throughout the network.
inline constexpr double kLayerNormEps = 1e-5;

}  // namespace xferlab::model
