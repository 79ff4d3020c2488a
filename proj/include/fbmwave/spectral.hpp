#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmwave/matrix.hpp"

namespace fbmwave {

/// Uniform grid x_i = i*pi/n_x on the closed interval [0, pi].
class SpatialGrid {
public:
  explicit SpatialGrid(std::size_t n_x) : n_x_(n_x) {
    if (n_x < 1) throw std::domain_error("SpatialGrid: n_x must be >= 1");
  }

  std::size_t intervals() const { return n_x_; }
  std::size_t nodes() const { return n_x_ + 1; }
  double spacing() const { return std::numbers::pi / static_cast<double>(n_x_); }
  double x(std::size_t i) const { return i == n_x_ ? std::numbers::pi : static_cast<double>(i) * spacing(); }

  /// Largest mode index resolved without aliasing.
  std::size_t max_mode() const { return n_x_ / 4; }

  std::vector<double> coordinates() const {
    std::vector<double> xs(nodes());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = x(i);
    return xs;
  }

  template <class F>
  std::vector<double> sample(F&& fn) const {
    std::vector<double> v(nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(x(i));
    return v;
  }

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

private:
  std::size_t n_x_;
};

using CoeffVector = std::vector<double>;

struct EigenMode {
  std::size_t index;
  double lambda;
  std::vector<double> values;
};

inline double eigenfunction(std::size_t k, double x) {
  return std::sqrt(2.0 / std::numbers::pi) * std::sin(static_cast<double>(k) * x);
}

namespace detail {
inline void check_mode(std::size_t k, const SpatialGrid& grid) {
  if (k < 1) throw std::domain_error("mode index must be >= 1");
  if (k > grid.max_mode())
    throw std::domain_error("mode " + std::to_string(k) + " exceeds aliasing bound n_x/4 = " +
                            std::to_string(grid.max_mode()));
}

inline void check_length(std::span<const double> field, const SpatialGrid& grid) {
  if (field.size() != grid.nodes())
    throw std::domain_error("field has " + std::to_string(field.size()) + " samples, grid has " +
                            std::to_string(grid.nodes()) + " nodes");
}
}  // namespace detail

inline EigenMode eigenpair(std::size_t k, const SpatialGrid& grid) {
  detail::check_mode(k, grid);
  EigenMode mode{k, static_cast<double>(k * k), std::vector<double>(grid.nodes())};
  for (std::size_t i = 1; i + 1 < grid.nodes(); ++i) mode.values[i] = eigenfunction(k, grid.x(i));
  return mode;
}

/// Composite trapezoid rule for a grid function on [0, pi].
inline double integrate(std::span<const double> field, const SpatialGrid& grid) {
  detail::check_length(field, grid);
  double acc = 0.5 * (field.front() + field.back());
  for (std::size_t i = 1; i + 1 < field.size(); ++i) acc += field[i];
  return acc * grid.spacing();
}

inline double l2_norm(std::span<const double> field, const SpatialGrid& grid) {
  std::vector<double> sq(field.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = field[i] * field[i];
  return std::sqrt(integrate(sq, grid));
}

/// (field, phi_k) in L^2(0, pi). The boundary terms of the trapezoid rule
/// vanish because phi_k(0) = phi_k(pi) = 0.
inline double project(std::span<const double> field, std::size_t k, const SpatialGrid& grid) {
  detail::check_length(field, grid);
  detail::check_mode(k, grid);
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < field.size(); ++i) acc += field[i] * eigenfunction(k, grid.x(i));
  return acc * grid.spacing();
}

inline CoeffVector project_all(std::span<const double> field, std::size_t N, const SpatialGrid& grid) {
  CoeffVector c(N);
  for (std::size_t k = 1; k <= N; ++k) c[k - 1] = project(field, k, grid);
  return c;
}

inline std::vector<double> synthesize(std::span<const double> coeffs, const SpatialGrid& grid) {
  if (!coeffs.empty()) detail::check_mode(coeffs.size(), grid);
  std::vector<double> field(grid.nodes(), 0.0);
  for (std::size_t i = 1; i + 1 < field.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= coeffs.size(); ++k) acc += coeffs[k - 1] * eigenfunction(k, grid.x(i));
    field[i] = acc;
  }
  return field;
}

/// sum_{k,l} G_kl phi_k(x) phi_l(x) at every node.
inline std::vector<double> synthesize_rank2(const SquareMatrix& products, const SpatialGrid& grid) {
  if (!products.is_symmetric(1e-9)) throw std::domain_error("synthesize_rank2: product matrix is not symmetric");
  const std::size_t N = products.size();
  if (N > 0) detail::check_mode(N, grid);
  std::vector<double> field(grid.nodes(), 0.0);
  std::vector<double> phi(N);
  for (std::size_t i = 1; i + 1 < field.size(); ++i) {
    for (std::size_t k = 0; k < N; ++k) phi[k] = eigenfunction(k + 1, grid.x(i));
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      double row = 0.0;
      for (std::size_t l = 0; l < N; ++l) row += products(k, l) * phi[l];
      acc += phi[k] * row;
    }
    field[i] = acc;
  }
  return field;
}

}  // namespace fbmwave
