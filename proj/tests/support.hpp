#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "percol/problem.hpp"

namespace percol::test {

/// Point queries answered by a closed-form reference, with the periodic
/// shift applied to negative times unless unwrapped is set.
class ReferenceEvaluator final : public PointEvaluator {
 public:
  explicit ReferenceEvaluator(const ReferenceSolution& ref, bool unwrapped = false)
      : ref_(&ref), unwrapped_(unwrapped), x_(ref.dim_x), y_(ref.dim_y), dy_(ref.dim_y) {}

  double query(Block block, std::size_t component, double s, int derivative) override {
    const double t = !unwrapped_ && s < 0.0 ? s + 1.0 : s;
    if (derivative) {
      ref_->eval_y_deriv(t, dy_);
      return dy_[component];
    }
    ref_->eval(t, x_, y_);
    return block == Block::X ? x_[component] : y_[component];
  }

 private:
  const ReferenceSolution* ref_;
  bool unwrapped_;
  std::vector<double> x_, y_, dy_;
};

inline std::vector<double> uniform_samples(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace percol::test
