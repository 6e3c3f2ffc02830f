#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/data/dataset.hpp"
#include "xferlab/util/error.hpp"
#include "xferlab/util/hash.hpp"

namespace xferlab::data {

struct ImageGeometry {
  std::size_t image_size = 32;
  std::size_t patch_size = 8;
  std::size_t channels = 3;

  std::size_t grid() const { return image_size / patch_size; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t values() const { return channels * image_size * image_size; }

  void validate() const {
    if (image_size == 0 || patch_size == 0 || channels == 0 || image_size % patch_size != 0) {
      throw ConfigError("invalid image geometry " + std::to_string(image_size) + "/" + std::to_string(patch_size));
    }
  }
};

// Glyphs are drawn at patch resolution: a glyph occupies exactly one grid
// cell, so the evidence for a class is localized to the planted patches.
// Names are grouped into families; domains built from one family share
// low-level structure.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& glyph_families() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> families = {
      {"strokes", {"hbar", "vbar", "diag", "antidiag", "plus", "cross"}},
      {"blocks", {"checker", "ring", "dot", "quads", "topfill", "leftfill"}},
  };
  return families;
}

inline std::string glyph_family_of(const std::string& glyph) {
  for (const auto& [family, names] : glyph_families())
    if (std::find(names.begin(), names.end(), glyph) != names.end()) return family;
  throw ConfigError("unknown glyph '" + glyph + "'");
}

// Template value at (dy, dx) inside a p x p cell.
inline bool glyph_pixel(const std::string& glyph, std::size_t dy, std::size_t dx, std::size_t p) {
  const std::size_t lo = p / 2 - (p >= 2 ? 1 : 0), hi = p / 2;
  const bool mid_row = dy >= lo && dy <= hi;
  const bool mid_col = dx >= lo && dx <= hi;
  if (glyph == "hbar") return mid_row;
  if (glyph == "vbar") return mid_col;
  if (glyph == "diag") return dy == dx;
  if (glyph == "antidiag") return dy + dx == p - 1;
  if (glyph == "plus") return mid_row || mid_col;
  if (glyph == "cross") return dy == dx || dy + dx == p - 1;
  if (glyph == "checker") return (dy + dx) % 2 == 0;
  if (glyph == "ring") return dy == 0 || dx == 0 || dy == p - 1 || dx == p - 1;
  if (glyph == "dot") return mid_row && mid_col;
  if (glyph == "quads") return (dy < p / 2) == (dx < p / 2);
  if (glyph == "topfill") return dy < p / 2;
  if (glyph == "leftfill") return dx < p / 2;
  throw ConfigError("unknown glyph '" + glyph + "'");
}

inline const std::vector<std::string>& background_kinds() {
  static const std::vector<std::string> kinds = {"flat", "smooth", "stripes", "speckle"};
  return kinds;
}

struct DomainSpec {
  std::string name;
  std::string family;
  std::size_t glyph_count = 3;  // patches carrying the class glyph
  std::string background = "smooth";
  double noise = 0.03;
  std::vector<std::string> class_names;
  std::array<double, 3> color = {0.9, 0.9, 0.9};
  std::uint64_t seed = 0;

  void validate(const ImageGeometry& geo) const {
    geo.validate();
    if (name.empty()) throw ConfigError("domain without a name");
    if (name.find(':') != std::string::npos) throw ConfigError("domain name '" + name + "' may not contain ':'");
    if (class_names.size() < 2) throw ConfigError("domain '" + name + "' needs at least two classes");
    if (glyph_count == 0 || glyph_count > geo.num_patches()) {
      throw ConfigError("domain '" + name + "': glyph count " + std::to_string(glyph_count) + " outside [1, " +
                        std::to_string(geo.num_patches()) + "]");
    }
    for (const auto& c : class_names) {
      if (glyph_family_of(c) != family) {
        throw ConfigError("domain '" + name + "': glyph '" + c + "' is not in family '" + family + "'");
      }
    }
    std::vector<std::string> sorted = class_names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("domain '" + name + "' repeats a class");
    }
    if (std::find(background_kinds().begin(), background_kinds().end(), background) == background_kinds().end()) {
      throw ConfigError("domain '" + name + "': unknown background '" + background + "'");
    }
    if (!(noise >= 0.0 && noise <= 0.5)) throw ConfigError("domain '" + name + "': noise must lie in [0, 0.5]");
    for (double c : color)
      if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("domain '" + name + "': color channels must lie in [0, 1]");
  }
};

namespace detail {

inline void paint_background(const std::string& kind, const ImageGeometry& geo, std::mt19937_64& rng,
                             std::vector<double>& px) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto S = geo.image_size;
  const double level = 0.2 + 0.15 * u(rng);
  std::array<double, 3> tint{};
  for (auto& t : tint) t = 0.08 * (u(rng) - 0.5);
  const double angle = 2.0 * std::numbers::pi * u(rng);
  const double phase = 2.0 * std::numbers::pi * u(rng);
  for (std::size_t c = 0; c < geo.channels; ++c) {
    for (std::size_t y = 0; y < S; ++y) {
      for (std::size_t x = 0; x < S; ++x) {
        const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(S) - 0.5;
        const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(S) - 0.5;
        double v = level + tint[c % 3];
        if (kind == "smooth") {
          v += 0.2 * (std::cos(angle) * fx + std::sin(angle) * fy);
        } else if (kind == "stripes") {
          const double t = std::cos(angle) * fx + std::sin(angle) * fy;
          v += 0.1 * std::sin(2.0 * std::numbers::pi * 3.0 * t + phase);
        }
        px[c * S * S + y * S + x] = v;
      }
    }
  }
  if (kind == "speckle") {
    for (auto& v : px) v += 0.2 * (u(rng) - 0.5);
  }
}

}  // namespace detail

// One image of class `label`, seeded per sample so generation is independent
// of order and parallelizable.
inline Sample render_sample(const DomainSpec& spec, const ImageGeometry& geo, std::size_t label, std::string id,
                            std::uint64_t sample_seed) {
  std::mt19937_64 rng(sample_seed);
  Sample s;
  s.id = std::move(id);
  s.label = label;
  s.pixels.assign(geo.values(), 0.0);
  detail::paint_background(spec.background, geo, rng, s.pixels);

  // Choose k distinct patches by partial Fisher-Yates.
  const auto M = geo.num_patches();
  std::vector<std::size_t> cells(M);
  for (std::size_t m = 0; m < M; ++m) cells[m] = m;
  for (std::size_t i = 0; i < spec.glyph_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, M - 1);
    std::swap(cells[i], cells[pick(rng)]);
  }
  s.planted.assign(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(spec.glyph_count));
  std::sort(s.planted.begin(), s.planted.end());

  const auto& glyph = spec.class_names[label];
  const auto S = geo.image_size, P = geo.patch_size, G = geo.grid();
  for (auto m : s.planted) {
    const auto gy = m / G, gx = m % G;
    for (std::size_t dy = 0; dy < P; ++dy)
      for (std::size_t dx = 0; dx < P; ++dx) {
        if (!glyph_pixel(glyph, dy, dx, P)) continue;
        for (std::size_t c = 0; c < geo.channels; ++c)
          s.pixels[c * S * S + (gy * P + dy) * S + (gx * P + dx)] = spec.color[c % 3];
      }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& v : s.pixels) {
    if (spec.noise > 0.0) v += spec.noise * noise(rng);
    v = std::clamp(v, 0.0, 1.0);
  }
  return s;
}

inline std::string sample_id(const DomainSpec& spec, const std::string& split, std::size_t index) {
  return spec.name + ":" + std::to_string(spec.seed) + ":" + split + ":" + std::to_string(index);
}

// Balanced split: sample i has label i mod C.
inline Dataset gen_split(const DomainSpec& spec, const ImageGeometry& geo, const std::string& split, std::size_t n) {
  spec.validate(geo);
  if (n == 0) throw ConfigError("domain '" + spec.name + "': split '" + split + "' must have at least one sample");
  Dataset d;
  d.name = spec.name + "/" + split;
  d.split = split;
  d.domain = spec.name;
  d.channels = geo.channels;
  d.image_size = geo.image_size;
  d.num_patches = geo.num_patches();
  d.class_names = spec.class_names;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto id = sample_id(spec, split, i);
    auto seed = derive_seed(spec.seed, "sample", id);
    d.samples.push_back(render_sample(spec, geo, i % spec.class_names.size(), std::move(id), seed));
  }
  d.set_meta("family", spec.family);
  d.set_meta("background", spec.background);
  d.set_meta("glyph_count", std::to_string(spec.glyph_count));
  return d;
}

inline std::pair<Dataset, Dataset> gen_domain(const DomainSpec& spec, const ImageGeometry& geo, std::size_t n_train,
                                              std::size_t n_test) {
  return {gen_split(spec, geo, "train", n_train), gen_split(spec, geo, "test", n_test)};
}

// Classification mixture over the union of the given domains' label spaces.
// Each domain contributes n_per_domain images rendered with its own
// background but the mixture color, under a separate seed.
inline Dataset gen_mixture(const std::vector<DomainSpec>& specs, const ImageGeometry& geo, std::size_t n_per_domain,
                           const std::array<double, 3>& color, std::uint64_t seed) {
  if (specs.empty()) throw ConfigError("pretraining mixture needs at least one domain");
  Dataset d;
  d.name = "mixture/train";
  d.split = "train";
  d.domain = "mixture";
  d.channels = geo.channels;
  d.image_size = geo.image_size;
  d.num_patches = geo.num_patches();
  for (const auto& spec : specs)
    for (const auto& c : spec.class_names)
      if (std::find(d.class_names.begin(), d.class_names.end(), c) == d.class_names.end()) d.class_names.push_back(c);
  for (const auto& base : specs) {
    base.validate(geo);
    DomainSpec spec = base;
    spec.color = color;
    spec.seed = derive_seed(seed, "mixture", base.name);
    auto part = gen_split(spec, geo, "mixture", n_per_domain);
    for (auto& s : part.samples) {
      const auto& cname = spec.class_names[s.label];
      s.label = static_cast<std::size_t>(std::find(d.class_names.begin(), d.class_names.end(), cname) -
                                         d.class_names.begin());
      d.samples.push_back(std::move(s));
    }
  }
  return d;
}

}  // namespace xferlab::data
