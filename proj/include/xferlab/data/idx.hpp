#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "xferlab/data/dataset.hpp"
#include "xferlab/data/synthetic.hpp"
#include "xferlab/util/binio.hpp"
#include "xferlab/util/error.hpp"

namespace xferlab::data {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be32(std::string_view bytes, std::size_t offset, const std::string& context) {
  if (offset + 4 > bytes.size()) throw FormatError(context + ": truncated IDX header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

}  // namespace detail

// MNIST-style IDX pair. Images are resampled to the requested geometry by
// nearest neighbour, replicated across channels and scaled to [0, 1].
// Classes are named "digit<k>" for k up to the largest label present.
inline Dataset parse_idx(std::string_view images, std::string_view labels, const ImageGeometry& geo,
                         const std::string& name, const std::string& images_ctx = "images",
                         const std::string& labels_ctx = "labels") {
  geo.validate();
  auto img_magic = detail::read_be32(images, 0, images_ctx);
  if (img_magic != kIdxImagesMagic) {
    throw FormatError(images_ctx + ": bad IDX magic " + hex64(img_magic) + ", expected 0x00000803");
  }
  auto lbl_magic = detail::read_be32(labels, 0, labels_ctx);
  if (lbl_magic != kIdxLabelsMagic) {
    throw FormatError(labels_ctx + ": bad IDX magic " + hex64(lbl_magic) + ", expected 0x00000801");
  }
  const std::size_t n = detail::read_be32(images, 4, images_ctx);
  const std::size_t rows = detail::read_be32(images, 8, images_ctx);
  const std::size_t cols = detail::read_be32(images, 12, images_ctx);
  const std::size_t n_labels = detail::read_be32(labels, 4, labels_ctx);
  if (n != n_labels) {
    throw ConsistencyError(images_ctx + " holds " + std::to_string(n) + " images but " + labels_ctx + " holds " +
                           std::to_string(n_labels) + " labels");
  }
  if (rows == 0 || cols == 0) throw FormatError(images_ctx + ": zero image dimension");
  if (images.size() != 16 + n * rows * cols) {
    throw FormatError(images_ctx + ": payload has " + std::to_string(images.size() - 16) + " bytes, header implies " +
                      std::to_string(n * rows * cols));
  }
  if (labels.size() != 8 + n) {
    throw FormatError(labels_ctx + ": payload has " + std::to_string(labels.size() - 8) + " bytes, header implies " +
                      std::to_string(n));
  }
  std::size_t max_label = 1;
  for (std::size_t i = 0; i < n; ++i) max_label = std::max<std::size_t>(max_label, static_cast<unsigned char>(labels[8 + i]));

  Dataset d;
  d.name = name;
  d.split = "train";
  d.domain = name;
  d.channels = geo.channels;
  d.image_size = geo.image_size;
  d.num_patches = geo.num_patches();
  for (std::size_t k = 0; k <= max_label; ++k) d.class_names.push_back("digit" + std::to_string(k));
  const auto S = geo.image_size;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = name + ":" + std::to_string(i);
    s.label = static_cast<unsigned char>(labels[8 + i]);
    s.pixels.resize(geo.values());
    const char* src = images.data() + 16 + i * rows * cols;
    for (std::size_t y = 0; y < S; ++y) {
      const auto sy = y * rows / S;
      for (std::size_t x = 0; x < S; ++x) {
        const auto sx = x * cols / S;
        const double v = static_cast<unsigned char>(src[sy * cols + sx]) / 255.0;
        for (std::size_t c = 0; c < geo.channels; ++c) s.pixels[c * S * S + y * S + x] = v;
      }
    }
    d.samples.push_back(std::move(s));
  }
  d.set_meta("source", "idx");
  return d;
}

inline Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        const ImageGeometry& geo, const std::string& name = "idx") {
  return parse_idx(read_file(images_path), read_file(labels_path), geo, name, images_path.string(),
                   labels_path.string());
}

}  // namespace xferlab::data
