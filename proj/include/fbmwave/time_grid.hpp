#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fbmwave {

/// Uniform grid t_n = n*T/n_t, n = 0..n_t.
class TimeGrid {
public:
  TimeGrid(std::size_t n_t, double T) : n_t_(n_t), T_(T) {
    if (n_t < 1) throw std::domain_error("TimeGrid: n_t must be >= 1");
    if (!(T > 0.0)) throw std::domain_error("TimeGrid: T must be positive");
  }

  std::size_t steps() const { return n_t_; }
  std::size_t nodes() const { return n_t_ + 1; }
  double final_time() const { return T_; }
  double step() const { return T_ / static_cast<double>(n_t_); }
  double t(std::size_t n) const { return n == n_t_ ? T_ : static_cast<double>(n) * step(); }

  template <class F>
  std::vector<double> sample(F&& fn) const {
    std::vector<double> v(nodes());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = fn(t(n));
    return v;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
  std::size_t n_t_;
  double T_;
};

}  // namespace fbmwave
