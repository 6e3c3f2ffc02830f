#pragma once

#include <bit>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xferlab/shapley/coalition.hpp"

namespace xferlab::shapley {

inline constexpr std::size_t kExactPlayerLimit = 20;

// Shapley weight |S|!(M-|S|-1)!/M! = 1 / (M * binom(M-1, |S|)).
inline std::vector<double> shapley_weights(std::size_t M) {
  std::vector<double> w(M);
  double binom = 1.0;  // binom(M-1, s)
  for (std::size_t s = 0; s < M; ++s) {
    w[s] = 1.0 / (static_cast<double>(M) * binom);
    binom = binom * static_cast<double>(M - 1 - s) / static_cast<double>(s + 1);
  }
  return w;
}

// Exact Shapley values of a game over M players by full enumeration.
// value(S) is called once per coalition, in increasing bitmask order.
template <typename Game>
std::vector<double> exact_shapley(std::size_t M, Game&& value) {
  if (M == 0) throw ContractError("exact_shapley needs at least one player");
  if (M > kExactPlayerLimit) {
    throw ContractError("exact_shapley enumerates 2^M coalitions and refuses M = " + std::to_string(M) +
                        " > " + std::to_string(kExactPlayerLimit) + "; use kernel_shap instead");
  }
  const Bits n = Bits(1) << M;
  std::vector<double> v(n);
  for (Bits s = 0; s < n; ++s) v[s] = value(s);
  const auto w = shapley_weights(M);
  std::vector<double> phi(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    const Bits bit = Bits(1) << m;
    double acc = 0.0;
    for (Bits s = 0; s < n; ++s) {
      if (s & bit) continue;
      acc += w[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
    phi[m] = acc;
  }
  return phi;
}

inline std::vector<double> exact_shapley(model::InferenceEngine& engine, std::span<const double> x, std::size_t c,
                                         std::span<const double> baseline) {
  const auto M = engine.config().num_patches();
  if (M > kExactPlayerLimit) {
    throw ContractError("exact_shapley refuses M = " + std::to_string(M) + " patches (limit " +
                        std::to_string(kExactPlayerLimit) + "); use kernel_shap instead");
  }
  ModelGame game(engine, x, baseline, c);
  return exact_shapley(M, game);
}

inline std::vector<double> exact_shapley(const model::ModelConfig& cfg, const model::ParameterVector& theta,
                                         const model::HeadMatrix& head, std::span<const double> x, std::size_t c,
                                         std::span<const double> baseline) {
  model::InferenceEngine engine(cfg, theta, head);
  return exact_shapley(engine, x, c, baseline);
}

}  // namespace xferlab::shapley
