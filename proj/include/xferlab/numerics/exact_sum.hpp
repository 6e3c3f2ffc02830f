#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace xferlab::numerics {

// Correctly rounded sum of doubles (Shewchuk's non-overlapping partials with
// the round-half-even fix-up used by Python's math.fsum). The result is the
// double nearest to the exact real sum, so it does not depend on the order
// of the inputs. Requires strict IEEE evaluation (no contraction, no
// fast-math). Inputs must be finite and the sum must not overflow.
class ExactAccumulator {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  // a * b added exactly, as the rounded product and its rounding error.
  void add_product(double a, double b) {
    const double p = a * b;
    add(p);
    add(std::fma(a, b, -p));
  }

  double result() const {
    std::size_t n = partials_.size();
    if (n == 0) return 0.0;
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // hi + lo is exact; if lo is exactly half an ulp the next partial decides
    // the direction of rounding.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
    return hi;
  }

  void clear() { partials_.clear(); }

 private:
  std::vector<double> partials_;
};

inline double exact_sum(std::span<const double> values) {
  ExactAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.result();
}

}  // namespace xferlab::numerics
