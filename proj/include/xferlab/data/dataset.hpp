#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xferlab/util/binio.hpp"
#include "xferlab/util/error.hpp"
#include "xferlab/util/hash.hpp"

namespace xferlab::data {

// Labeled image with optional ground-truth patch attributions. Pixels are
// channels x H x W, row-major, in [0, 1].
struct Sample {
  std::string id;
  std::size_t label = 0;
  std::vector<double> pixels;
  std::optional<std::vector<double>> phi;
  // Patches holding the class glyph; generator bookkeeping only.
  std::vector<std::size_t> planted;

  bool explained() const { return phi.has_value(); }
  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::string name;
  std::string split;
  std::string domain;
  std::size_t channels = 3;
  std::size_t image_size = 0;
  std::size_t num_patches = 0;
  std::vector<std::string> class_names;
  std::vector<Sample> samples;
  // Ordered key/value provenance (explainer kind, budget, reference model...).
  std::vector<std::pair<std::string, std::string>> provenance;

  std::size_t size() const { return samples.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  std::size_t image_values() const { return channels * image_size * image_size; }

  std::size_t explained_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.explained() ? 1 : 0;
    return n;
  }

  std::optional<std::string> meta(std::string_view key) const {
    for (const auto& [k, v] : provenance)
      if (k == key) return v;
    return std::nullopt;
  }

  void set_meta(const std::string& key, std::string value) {
    for (auto& [k, v] : provenance) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    provenance.emplace_back(key, std::move(value));
  }

  // Per-pixel mean image over the samples.
  std::vector<double> mean_image() const {
    std::vector<double> mean(image_values(), 0.0);
    if (samples.empty()) return mean;
    for (const auto& s : samples)
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.pixels[i];
    for (auto& v : mean) v /= static_cast<double>(samples.size());
    return mean;
  }

  void validate() const {
    if (class_names.size() < 1) throw FormatError("dataset '" + name + "' has no classes");
    for (const auto& s : samples) {
      if (s.pixels.size() != image_values()) {
        throw FormatError("sample '" + s.id + "' has " + std::to_string(s.pixels.size()) + " values, expected " +
                          std::to_string(image_values()));
      }
      if (s.label >= class_names.size()) throw FormatError("sample '" + s.id + "' label out of range");
      for (double v : s.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError("sample '" + s.id + "' pixel outside [0, 1]");
      }
      if (s.phi) {
        if (s.phi->size() != num_patches) throw FormatError("sample '" + s.id + "' phi length mismatch");
        for (double v : *s.phi)
          if (!std::isfinite(v)) throw FormatError("sample '" + s.id + "' has non-finite phi");
      }
    }
  }

  std::uint64_t fingerprint() const;

  bool operator==(const Dataset&) const = default;
};

// "SEVD" container, little-endian:
//
//   magic "SEVD", version u32,
//   name, split, domain (u64 length + UTF-8 each),
//   channels u64, image_size u64, num_patches u64,
//   class count u64, class names,
//   provenance count u64, (key, value) string pairs,
//   sample count u64, per sample:
//     id string, label u64, pixel count u64, pixels f64...,
//     has_phi u8 [, phi count u64, phi f64...],
//     planted count u64, planted u64...
//   checksum u64 (FNV-1a 64 of every preceding byte)
inline constexpr std::string_view kDatasetMagic = "SEVD";
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::string encode_dataset(const Dataset& d) {
  BinaryWriter w;
  w.raw(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.str(d.name);
  w.str(d.split);
  w.str(d.domain);
  w.u64(d.channels);
  w.u64(d.image_size);
  w.u64(d.num_patches);
  w.u64(d.class_names.size());
  for (const auto& c : d.class_names) w.str(c);
  w.u64(d.provenance.size());
  for (const auto& [k, v] : d.provenance) {
    w.str(k);
    w.str(v);
  }
  w.u64(d.samples.size());
  for (const auto& s : d.samples) {
    w.str(s.id);
    w.u64(s.label);
    w.u64(s.pixels.size());
    w.doubles(s.pixels);
    w.u8(s.phi ? 1 : 0);
    if (s.phi) {
      w.u64(s.phi->size());
      w.doubles(*s.phi);
    }
    w.u64(s.planted.size());
    for (auto p : s.planted) w.u64(p);
  }
  w.seal();
  return w.bytes();
}

inline Dataset decode_dataset(std::string_view bytes, const std::string& context) {
  auto payload = verify_sealed(bytes, context);
  BinaryReader r(payload, context);
  if (r.raw(4) != kDatasetMagic) throw FormatError(context + ": bad magic, expected SEVD");
  auto version = r.u32();
  if (version != kDatasetVersion) throw FormatError(context + ": unsupported version " + std::to_string(version));
  Dataset d;
  d.name = r.str();
  d.split = r.str();
  d.domain = r.str();
  d.channels = r.u64();
  d.image_size = r.u64();
  d.num_patches = r.u64();
  auto nc = r.u64();
  if (nc > (1u << 20)) throw FormatError(context + ": implausible class count");
  for (std::uint64_t i = 0; i < nc; ++i) d.class_names.push_back(r.str());
  auto np = r.u64();
  if (np > (1u << 20)) throw FormatError(context + ": implausible provenance count");
  for (std::uint64_t i = 0; i < np; ++i) {
    auto k = r.str();
    auto v = r.str();
    d.provenance.emplace_back(std::move(k), std::move(v));
  }
  auto ns = r.u64();
  for (std::uint64_t i = 0; i < ns; ++i) {
    Sample s;
    s.id = r.str();
    s.label = r.u64();
    auto npx = r.u64();
    if (npx * 8 > r.remaining()) throw FormatError(context + ": truncated pixels");
    s.pixels = r.doubles(npx);
    if (r.u8() != 0) {
      auto nphi = r.u64();
      if (nphi * 8 > r.remaining()) throw FormatError(context + ": truncated phi");
      s.phi = r.doubles(nphi);
    }
    auto npl = r.u64();
    if (npl * 8 > r.remaining()) throw FormatError(context + ": truncated planted list");
    for (std::uint64_t k = 0; k < npl; ++k) s.planted.push_back(r.u64());
    d.samples.push_back(std::move(s));
  }
  if (r.remaining() != 0) throw FormatError(context + ": trailing bytes");
  d.validate();
  return d;
}

inline std::uint64_t Dataset::fingerprint() const {
  auto bytes = encode_dataset(*this);
  return Fnv1a().bytes(bytes.data(), bytes.size()).digest();
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& d) { write_file(path, encode_dataset(d)); }

inline Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file(path), path.string());
}

}  // namespace xferlab::data
