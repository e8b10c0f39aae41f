#include "hiertopics/numerics.hpp"

namespace hiertopics {

double digamma(double x) {
  double result = 0.0;
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^{2n})
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

void LgammaOffsetTable::extend(std::size_t upto) {
  std::size_t target = upto + upto / 2 + 16;
  values_.reserve(target + 1);
  while (values_.size() <= target) {
    values_.push_back(std::lgamma(static_cast<double>(values_.size()) + offset_));
  }
}

}  // namespace hiertopics
