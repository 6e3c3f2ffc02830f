#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xferlab/shapley/coalition.hpp"

namespace xferlab::shapley {

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// SHAP kernel weight of one coalition of size s among M players,
// (M-1) / (binom(M, s) s (M-s)), for 0 < s < M.
inline double kernel_weight(std::size_t M, std::size_t s) {
  if (s == 0 || s >= M) throw ContractError("kernel weight is infinite for empty and full coalitions");
  return static_cast<double>(M - 1) / (binomial(M, s) * static_cast<double>(s) * static_cast<double>(M - s));
}

inline constexpr double kRidge = 1e-10;

struct KernelShapOptions {
  std::size_t budget = 200;
  std::uint64_t seed = 0;
};

struct KernelShapResult {
  std::vector<double> phi;
  bool enumerated = false;     // every proper coalition used once
  bool ridge_applied = false;  // normal equations were singular
  std::size_t evaluations = 0;
};

namespace detail {

// In-place Cholesky solve of the SPD system A x = b (A is n x n row-major).
// Returns false if a pivot falls below `floor`.
inline bool cholesky_solve(std::vector<double> a, std::vector<double>& b, std::size_t n, double floor) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > floor)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

}  // namespace detail

// Draws `budget` coalitions with replacement. A coalition of size s is drawn
// with probability proportional to its kernel weight: the size is chosen
// with mass pi(s) * binom(M, s) = (M-1) / (s (M-s)) and members uniformly
// given the size. Returned sorted, which is the order the regression
// consumes them in.
inline std::vector<Bits> sample_coalitions(std::size_t M, std::size_t budget, std::uint64_t seed) {
  if (M < 2) throw ContractError("kernel_shap needs at least two players");
  std::vector<double> size_mass(M - 1);
  for (std::size_t s = 1; s < M; ++s)
    size_mass[s - 1] = static_cast<double>(M - 1) / (static_cast<double>(s) * static_cast<double>(M - s));
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> size_dist(size_mass.begin(), size_mass.end());
  std::vector<std::size_t> order(M);
  std::vector<Bits> out;
  out.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    const auto s = size_dist(rng) + 1;
    for (std::size_t m = 0; m < M; ++m) order[m] = m;
    Bits b = 0;
    for (std::size_t k = 0; k < s; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, M - 1);
      std::swap(order[k], order[pick(rng)]);
      b |= Bits(1) << order[k];
    }
    out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Kernel SHAP: weighted least squares of v(S) - v(empty) on the coalition
// indicators, with sum(phi) = v(full) - v(empty) imposed by eliminating the
// last coordinate. If the budget covers every proper coalition they are all
// used once with row weight pi(|S|); otherwise sampled rows carry equal
// weight because the sampling distribution is already the kernel.
template <typename Game>
KernelShapResult kernel_shap(std::size_t M, Game&& value, const KernelShapOptions& opts) {
  if (M < 2) throw ContractError("kernel_shap needs at least two players");
  if (M > 62) throw ContractError("kernel_shap supports at most 62 patches");
  if (opts.budget == 0) throw ContractError("kernel_shap budget must be positive");
  KernelShapResult result;
  const double v_empty = value(Bits(0));
  const double v_full = value(all_bits(M));
  const double delta = v_full - v_empty;
  result.evaluations = 2;

  std::vector<Bits> rows;
  const bool can_enumerate = M <= 30 && static_cast<double>(opts.budget) >= std::ldexp(1.0, static_cast<int>(M)) - 2;
  if (can_enumerate) {
    result.enumerated = true;
    for (Bits s = 1; s + 1 < (Bits(1) << M); ++s) rows.push_back(s);
  } else {
    rows = sample_coalitions(M, opts.budget, opts.seed);
  }
  std::vector<double> size_weight(M, 0.0);
  for (std::size_t s = 1; s < M; ++s) size_weight[s] = result.enumerated ? kernel_weight(M, s) : 1.0;

  const std::size_t n = M - 1;
  std::vector<double> ata(n * n, 0.0), atb(n, 0.0), a(n);
  const Bits last = Bits(1) << (M - 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Bits s = rows[r];
    const double v = value(s);
    ++result.evaluations;
    const double z_last = (s & last) ? 1.0 : 0.0;
    const double w = size_weight[static_cast<std::size_t>(std::popcount(s))];
    const double target = v - v_empty - z_last * delta;
    for (std::size_t j = 0; j < n; ++j) a[j] = (((s >> j) & 1u) ? 1.0 : 0.0) - z_last;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] == 0.0) continue;
      const double wa = w * a[i];
      atb[i] += wa * target;
      for (std::size_t j = 0; j < n; ++j) ata[i * n + j] += wa * a[j];
    }
  }

  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, ata[i * n + i]);
  auto sol = atb;
  if (!detail::cholesky_solve(ata, sol, n, 1e-12 * max_diag)) {
    result.ridge_applied = true;
    for (std::size_t i = 0; i < n; ++i) ata[i * n + i] += kRidge;
    sol = atb;
    if (!detail::cholesky_solve(ata, sol, n, 0.0)) throw NumericError("kernel_shap normal equations unsolvable");
  }
  result.phi.assign(M, 0.0);
  double rest = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    result.phi[j] = sol[j];
    rest += sol[j];
  }
  result.phi[M - 1] = delta - rest;
  return result;
}

inline KernelShapResult kernel_shap(model::InferenceEngine& engine, std::span<const double> x, std::size_t c,
                                    std::span<const double> baseline, const KernelShapOptions& opts) {
  ModelGame game(engine, x, baseline, c);
  return kernel_shap(engine.config().num_patches(), game, opts);
}

}  // namespace xferlab::shapley
