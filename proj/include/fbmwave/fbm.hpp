#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmwave/hurst.hpp"
#include "fbmwave/rng.hpp"

namespace fbmwave {

/// R(t,s) = E[B^H(t) B^H(s)].
inline double fbm_covariance(double t, double s, HurstIndex hurst) {
  if (t < 0.0 || s < 0.0) throw std::domain_error("fbm_covariance: negative time");
  const double two_h = 2.0 * hurst.value();
  return 0.5 * (std::pow(t, two_h) + std::pow(s, two_h) - std::pow(std::abs(t - s), two_h));
}

/// Autocovariance of fractional Gaussian noise at lag m on a grid of step dt.
inline double fgn_autocovariance(std::int64_t m, double dt, HurstIndex hurst) {
  const double two_h = 2.0 * hurst.value();
  const double a = std::abs(static_cast<double>(m));
  const double scale = std::pow(dt, two_h);
  if (m == 0) return scale;
  return 0.5 * scale * (std::pow(a + 1.0, two_h) + std::pow(a - 1.0, two_h) - 2.0 * std::pow(a, two_h));
}

enum class FgnMethod { circulant, dense_cholesky };

inline const char* to_string(FgnMethod m) {
  return m == FgnMethod::circulant ? "circulant" : "dense-cholesky";
}

namespace detail {

// FFTW planning is not thread-safe; execution on fresh arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline ComplexBuffer alloc_complex(std::size_t n) {
  auto* p = fftw_alloc_complex(n);
  if (!p) throw std::bad_alloc();
  return ComplexBuffer(p);
}

inline PlanHandle plan_forward(std::size_t n) {
  auto in = alloc_complex(n);
  auto out = alloc_complex(n);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  if (!p) throw std::runtime_error("fftw: planning failed");
  return PlanHandle(p);
}

}  // namespace detail

/// Exact sampler of fractional Gaussian noise on a uniform grid.
///
/// The stationary increment covariance is embedded in a circulant matrix of
/// size 2n whose eigenvalues come from one FFT. When the embedding is not
/// positive semidefinite the sampler falls back to a Cholesky factor of the
/// dense n x n covariance. Construction does all set-up work; sample() is
/// const and may be called concurrently.
class FgnSampler {
public:
  static constexpr std::size_t max_dense_size = 4096;

  FgnSampler(std::size_t n_steps, double dt, HurstIndex hurst,
             FgnMethod preferred = FgnMethod::circulant)
      : n_(n_steps), dt_(dt), hurst_(hurst) {
    if (n_steps < 1) throw std::domain_error("FgnSampler: n_steps must be >= 1");
    if (!(dt > 0.0)) throw std::domain_error("FgnSampler: dt must be positive");
    if (preferred == FgnMethod::circulant && build_circulant()) {
      method_ = FgnMethod::circulant;
    } else {
      build_dense();
      method_ = FgnMethod::dense_cholesky;
    }
  }

  std::size_t size() const { return n_; }
  double dt() const { return dt_; }
  HurstIndex hurst() const { return hurst_; }
  FgnMethod method() const { return method_; }

  void sample_into(Rng& rng, std::span<double> out) const {
    if (out.size() != n_) throw std::invalid_argument("FgnSampler: output size mismatch");
    std::normal_distribution<double> normal(0.0, 1.0);
    if (method_ == FgnMethod::circulant) {
      const std::size_t m = sqrt_eig_.size();
      auto in = detail::alloc_complex(m);
      auto spec = detail::alloc_complex(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double re = normal(rng);
        const double im = normal(rng);
        in[j][0] = sqrt_eig_[j] * re;
        in[j][1] = sqrt_eig_[j] * im;
      }
      fftw_execute_dft(plan_.get(), in.get(), spec.get());
      for (std::size_t j = 0; j < n_; ++j) out[j] = spec[j][0];
    } else {
      std::vector<double> z(n_);
      for (auto& v : z) v = normal(rng);
      for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        const double* row = &chol_[i * n_];
        for (std::size_t k = 0; k <= i; ++k) acc += row[k] * z[k];
        out[i] = acc;
      }
    }
  }

  std::vector<double> sample(Rng& rng) const {
    std::vector<double> out(n_);
    sample_into(rng, out);
    return out;
  }

  std::vector<double> sample(std::uint64_t seed) const {
    Rng rng(seed);
    return sample(rng);
  }

private:
  bool build_circulant() {
    const std::size_t m = 2 * n_;
    auto row = detail::alloc_complex(m);
    auto eig = detail::alloc_complex(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t lag = j <= n_ ? j : m - j;
      row[j][0] = fgn_autocovariance(static_cast<std::int64_t>(lag), dt_, hurst_);
      row[j][1] = 0.0;
    }
    plan_ = detail::plan_forward(m);
    fftw_execute_dft(plan_.get(), row.get(), eig.get());

    double max_eig = 0.0;
    for (std::size_t j = 0; j < m; ++j) max_eig = std::max(max_eig, eig[j][0]);
    const double neg_tol = 1e-10 * max_eig;
    sqrt_eig_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      double lam = eig[j][0];
      if (lam < -neg_tol) {
        sqrt_eig_.clear();
        plan_.reset();
        return false;
      }
      sqrt_eig_[j] = std::sqrt(std::max(lam, 0.0) / static_cast<double>(m));
    }
    return true;
  }

  void build_dense() {
    if (n_ > max_dense_size)
      throw std::runtime_error("FgnSampler: circulant embedding failed and n=" + std::to_string(n_) +
                               " exceeds the dense fallback limit");
    chol_.assign(n_ * n_, 0.0);
    std::vector<double> acov(n_);
    for (std::size_t j = 0; j < n_; ++j) acov[j] = fgn_autocovariance(static_cast<std::int64_t>(j), dt_, hurst_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double sum = acov[i - j];
        for (std::size_t k = 0; k < j; ++k) sum -= chol_[i * n_ + k] * chol_[j * n_ + k];
        if (i == j) {
          if (sum <= 0.0) throw std::runtime_error("FgnSampler: covariance is not positive definite");
          chol_[i * n_ + i] = std::sqrt(sum);
        } else {
          chol_[i * n_ + j] = sum / chol_[j * n_ + j];
        }
      }
    }
  }

  std::size_t n_;
  double dt_;
  HurstIndex hurst_;
  FgnMethod method_ = FgnMethod::circulant;
  std::vector<double> sqrt_eig_;
  detail::PlanHandle plan_;
  std::vector<double> chol_;  // row-major lower triangle
};

struct FgnSample {
  std::vector<double> increments;
  FgnMethod method;
};

inline FgnSample sample_fgn(std::size_t n_steps, double dt, HurstIndex hurst, std::uint64_t seed) {
  FgnSampler sampler(n_steps, dt, hurst);
  return {sampler.sample(seed), sampler.method()};
}

/// One trajectory of B^H on the grid t_j = j*dt, j = 0..n.
struct FbmPath {
  std::vector<double> times;
  std::vector<double> values;
  HurstIndex hurst;
  std::uint64_t seed = 0;

  std::size_t n_steps() const { return values.size() - 1; }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  double increment(std::size_t j) const { return values[j + 1] - values[j]; }
};

inline FbmPath fgn_to_path(std::span<const double> increments, double dt, HurstIndex hurst,
                           std::uint64_t seed = 0) {
  if (increments.empty()) throw std::invalid_argument("fgn_to_path: no increments");
  if (!(dt > 0.0)) throw std::domain_error("fgn_to_path: dt must be positive");
  FbmPath path{{}, {}, hurst, seed};
  path.times.resize(increments.size() + 1);
  path.values.resize(increments.size() + 1);
  path.values[0] = 0.0;
  for (std::size_t j = 0; j < path.times.size(); ++j) path.times[j] = static_cast<double>(j) * dt;
  double acc = 0.0;
  for (std::size_t j = 0; j < increments.size(); ++j) {
    acc += increments[j];
    path.values[j + 1] = acc;
  }
  return path;
}

inline FbmPath sample_fbm_path(const FgnSampler& sampler, std::uint64_t seed) {
  return fgn_to_path(sampler.sample(seed), sampler.dt(), sampler.hurst(), seed);
}

}  // namespace fbmwave
