#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fbmwave {

/// Hurst index of a fractional Brownian motion, H in (0,1).
class HurstIndex {
public:
  explicit HurstIndex(double H) : H_(H) {
    if (!(H > 0.0 && H < 1.0))
      throw std::domain_error("Hurst index must lie in (0,1), got " + std::to_string(H));
  }

  double value() const { return H_; }

  /// Prefactor of the |r-u|^{2H-2} kernel in the H > 1/2 isometry.
  double alpha() const { return H_ * (2.0 * H_ - 1.0); }

  /// Decay exponent of the inverse-problem kernels.
  double gamma() const { return std::min(2.0 * H_, 1.0); }

  bool is_brownian() const { return H_ == 0.5; }

  friend bool operator==(const HurstIndex&, const HurstIndex&) = default;

private:
  double H_;
};

}  // namespace fbmwave
