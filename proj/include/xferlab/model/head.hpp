#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "xferlab/util/error.hpp"
#include "xferlab/util/hash.hpp"

namespace xferlab::model {

// Frozen linear head W in R^{K x C}, one unit-norm column per class name.
// Not part of the parameter vector.
struct HeadMatrix {
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  std::vector<double> weights;  // row-major K x C

  std::size_t num_classes() const { return class_names.size(); }
  double at(std::size_t k, std::size_t c) const { return weights[k * num_classes() + c]; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(dim);
    for (std::size_t k = 0; k < dim; ++k) out[k] = at(k, c);
    return out;
  }

  std::uint64_t fingerprint() const {
    Fnv1a h;
    h.u64(dim);
    for (const auto& n : class_names) h.str(n);
    return h.doubles(weights).digest();
  }

  bool operator==(const HeadMatrix&) const = default;
};

// Registry embedding for one class name: a Gaussian vector seeded by
// hash(registry_seed, name), normalized to unit length. The same name always
// maps to the same column, whichever dataset it appears in.
inline std::vector<double> class_embedding(const std::string& name, std::size_t dim, std::uint64_t registry_seed) {
  std::mt19937_64 rng(derive_seed(registry_seed, "class-registry", name));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

inline HeadMatrix make_head(const std::vector<std::string>& class_names, std::size_t dim,
                            std::uint64_t registry_seed) {
  if (class_names.empty()) throw ConfigError("head needs at least one class name");
  if (dim == 0) throw ConfigError("head dimension must be positive");
  std::set<std::string> seen;
  for (const auto& n : class_names) {
    if (n.empty()) throw ConfigError("empty class name");
    if (!seen.insert(n).second) throw ConfigError("duplicate class name '" + n + "'");
  }
  HeadMatrix head{dim, class_names, std::vector<double>(dim * class_names.size())};
  const auto C = class_names.size();
  for (std::size_t c = 0; c < C; ++c) {
    auto col = class_embedding(class_names[c], dim, registry_seed);
    for (std::size_t k = 0; k < dim; ++k) head.weights[k * C + c] = col[k];
  }
  return head;
}

}  // namespace xferlab::model
