#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace hiertopics {

// Digamma via upward recurrence into the asymptotic series region.
// Absolute error below 1e-10 for x > 0.
double digamma(double x);

inline double log_gamma(double x) { return std::lgamma(x); }

// Memoized lgamma(k + offset) over non-negative integer k. Gibbs path
// scoring evaluates these by the million on integer counters; the table
// turns each evaluation into an indexed load.
class LgammaOffsetTable {
 public:
  explicit LgammaOffsetTable(double offset) : offset_(offset) { values_.reserve(1024); }

  double operator()(std::int64_t k) {
    auto idx = static_cast<std::size_t>(k);
    if (idx >= values_.size()) extend(idx);
    return values_[idx];
  }

  double offset() const { return offset_; }

 private:
  void extend(std::size_t upto);

  double offset_;
  std::vector<double> values_;
};

}  // namespace hiertopics
