#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fbmwave {

/// Dense square matrix, row-major, indexed from 0.
class SquareMatrix {
public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  bool is_symmetric(double tol) const { return max_asymmetry() <= tol; }

  void symmetrize() {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double avg = 0.5 * ((*this)(i, j) + (*this)(j, i));
        (*this)(i, j) = avg;
        (*this)(j, i) = avg;
      }
  }

  static SquareMatrix outer(std::span<const double> v) {
    SquareMatrix m(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[i] * v[j];
    return m;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Entrywise (Hadamard) product.
inline SquareMatrix hadamard(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hadamard: size mismatch");
  SquareMatrix c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) c(i, j) = a(i, j) * b(i, j);
  return c;
}

}  // namespace fbmwave
