#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbmwave/fbm.hpp"
#include "fbmwave/matrix.hpp"
#include "fbmwave/parallel.hpp"
#include "fbmwave/rng.hpp"
#include "fbmwave/time_grid.hpp"

namespace fbmwave {

/// Values below this magnitude are treated as numerically zero divisors.
inline constexpr double invertibility_floor = 1e-12;

/// Impulse response of mode k: G_k(t) = sin(k t)/k, since lambda_k = k^2.
inline double wave_kernel(std::size_t k, double t) {
  const double omega = static_cast<double>(k);
  return std::sin(omega * t) / omega;
}

/// h_k = int_0^T h(tau) sin(k (T - tau)) dtau, composite trapezoid on the
/// uniform time grid carrying h_samples. Negative samples violate the
/// nonnegativity assumption on h; a message is appended to `warnings` when
/// provided and the value is still computed.
inline double compute_hk(std::span<const double> h_samples, std::size_t k, double T,
                         std::vector<std::string>* warnings = nullptr) {
  if (h_samples.size() < 2) throw std::invalid_argument("compute_hk: need at least two time samples");
  if (k < 1) throw std::domain_error("compute_hk: k must be >= 1");
  if (!(T > 0.0)) throw std::domain_error("compute_hk: T must be positive");
  const std::size_t n_t = h_samples.size() - 1;
  const TimeGrid grid(n_t, T);
  const double omega = static_cast<double>(k);
  bool negative = false;
  double acc = 0.0;
  for (std::size_t n = 0; n <= n_t; ++n) {
    if (h_samples[n] < 0.0) negative = true;
    const double w = (n == 0 || n == n_t) ? 0.5 : 1.0;
    acc += w * h_samples[n] * std::sin(omega * (T - grid.t(n)));
  }
  if (negative && warnings)
    warnings->push_back("h has negative samples; recovery of f is not guaranteed (k=" + std::to_string(k) + ")");
  return acc * grid.step();
}

/// E_kl for standard Brownian motion (H = 1/2) in closed form.
inline double ekl_white(std::size_t k, std::size_t l, double T) {
  if (k < 1 || l < 1) throw std::domain_error("ekl_white: mode indices must be >= 1");
  const double a = static_cast<double>(k);
  const double b = static_cast<double>(l);
  if (k == l) return (T - std::sin(2.0 * a * T) / (2.0 * a)) / (2.0 * a * a);
  return (-std::sin((a + b) * T) / (2.0 * (a + b)) + std::sin((a - b) * T) / (2.0 * (a - b))) / (a * b);
}

namespace detail {

using Gauss = boost::math::quadrature::gauss<double, 10>;

template <class F>
double composite_gauss(F&& f, double lo, double hi, std::size_t panels) {
  if (hi <= lo) return 0.0;
  const double w = (hi - lo) / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + static_cast<double>(p) * w;
    acc += Gauss::integrate(f, a, p + 1 == panels ? hi : a + w);
  }
  return acc;
}


// alpha_H int_0^T y^{2H-2} S(y) dy with the weak singularity at y = 0
// integrated exactly against S(0); the remainder is bounded near 0 and is
// integrated on `panels` uniform panels, the first refined geometrically.
template <class S>
double lag_integral(S&& sym_corr, double T, HurstIndex hurst, std::size_t panels) {
  const double H = hurst.value();
  const double beta = 2.0 * H - 1.0;
  const double s0 = sym_corr(0.0);
  auto remainder = [&](double y) { return std::pow(y, beta - 1.0) * (sym_corr(y) - s0); };

  const double width = T / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t p = 1; p < panels; ++p) acc += Gauss::integrate(remainder, p * width, (p + 1) * width);
  // The neglected sliver below width * 0.15^16 is O(eps^{2H}).
  constexpr double ratio = 0.15;
  double hi = width;
  for (int level = 0; level < 16; ++level) {
    const double lo = hi * ratio;
    acc += Gauss::integrate(remainder, lo, hi);
    hi = lo;
  }
  return H * s0 * std::pow(T, beta) + hurst.alpha() * acc;
}

// int_0^L sin(k s) sin(l (s + y)) ds.
inline double sin_shift_integral(double k, double l, double y, double L) {
  auto cos_int = [L](double m, double c) {
    return m == 0.0 ? L * std::cos(c) : (std::sin(m * L + c) - std::sin(c)) / m;
  };
  return 0.5 * (cos_int(k - l, -l * y) - cos_int(k + l, l * y));
}

}  // namespace detail

/// alpha_H * int int a(r) b(u) |r-u|^{2H-2} du dr over [0,T]^2 for H in (1/2, 1).
///
/// The square is split along its diagonal by the lag y = r - u, leaving
///   E = alpha_H int_0^T y^{2H-2} S(y) dy,  S(y) = C(y) + C(-y),
/// with C the cross-correlation of a and b over [0,T], computed here with
/// composite Gauss-Legendre on `panels` panels.
inline double singular_covariance(const std::function<double(double)>& a,
                                  const std::function<double(double)>& b, double T, HurstIndex hurst,
                                  std::size_t panels) {
  if (!(hurst.value() > 0.5)) throw std::domain_error("singular_covariance: requires H > 1/2");
  if (panels < 1) throw std::domain_error("singular_covariance: panels must be >= 1");
  auto corr = [&](double y) {
    const auto inner_panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(panels * (T - y) / T)));
    const double plus = detail::composite_gauss([&](double r) { return a(r) * b(r - y); }, y, T, inner_panels);
    const double minus = detail::composite_gauss([&](double r) { return a(r) * b(r + y); }, 0.0, T - y, inner_panels);
    return plus + minus;
  };
  return detail::lag_integral(corr, T, hurst, panels);
}

/// singular_covariance for the wave kernels G_k(T - .), G_l(T - .), whose
/// cross-correlation is available in closed form.
inline double ekl_quadrature_highH(std::size_t k, std::size_t l, double T, HurstIndex hurst,
                                   std::size_t panels = 48) {
  if (k < 1 || l < 1) throw std::domain_error("ekl_quadrature_highH: mode indices must be >= 1");
  if (!(hurst.value() > 0.5)) throw std::domain_error("ekl_quadrature_highH: requires H > 1/2");
  if (panels < 1) throw std::domain_error("ekl_quadrature_highH: panels must be >= 1");
  const double dk = static_cast<double>(k), dl = static_cast<double>(l);
  auto corr = [&](double y) {
    return (detail::sin_shift_integral(dk, dl, y, T - y) + detail::sin_shift_integral(dl, dk, y, T - y)) / (dk * dl);
  };
  return detail::lag_integral(corr, T, hurst, panels);
}

struct MonteCarloEstimate {
  double estimate;
  double std_err;
};

struct MonteCarloTable {
  SquareMatrix estimate;
  SquareMatrix std_err;
};

/// Monte Carlo estimate of E_kl for k,l <= N. Path i draws fGn with seed
/// derive_seed(seed, kernel_path, i) and forms the left-endpoint sums
/// S_k = sum_j G_k(T - tau_j) dB_j; E_kl is the sample mean of S_k S_l.
inline MonteCarloTable ekl_monte_carlo_table(std::size_t N, double T, HurstIndex hurst, std::size_t n_steps,
                                             std::size_t M, std::uint64_t seed, unsigned workers = 1) {
  if (N < 1) throw std::domain_error("ekl_monte_carlo: N must be >= 1");
  if (M < 2) throw std::domain_error("ekl_monte_carlo: need M >= 2 paths");
  const TimeGrid grid(n_steps, T);
  const FgnSampler sampler(n_steps, grid.step(), hurst);

  std::vector<double> weights(N * n_steps);
  for (std::size_t k = 1; k <= N; ++k)
    for (std::size_t j = 0; j < n_steps; ++j) weights[(k - 1) * n_steps + j] = wave_kernel(k, T - grid.t(j));

  std::vector<double> sums(M * N);
  parallel_for(M, workers, [&](std::size_t i) {
    const auto dB = sampler.sample(derive_seed(seed, Stream::kernel_path, i));
    for (std::size_t k = 0; k < N; ++k) {
      const double* w = &weights[k * n_steps];
      double s = 0.0;
      for (std::size_t j = 0; j < n_steps; ++j) s += w[j] * dB[j];
      sums[i * N + k] = s;
    }
  });

  MonteCarloTable out{SquareMatrix(N), SquareMatrix(N)};
  const double m = static_cast<double>(M);
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t l = k; l < N; ++l) {
      double mean = 0.0;
      for (std::size_t i = 0; i < M; ++i) mean += sums[i * N + k] * sums[i * N + l];
      mean /= m;
      double ss = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        const double d = sums[i * N + k] * sums[i * N + l] - mean;
        ss += d * d;
      }
      const double se = std::sqrt(ss / (m - 1.0) / m);
      out.estimate(k, l) = out.estimate(l, k) = mean;
      out.std_err(k, l) = out.std_err(l, k) = se;
    }
  }
  return out;
}

inline MonteCarloEstimate ekl_monte_carlo(std::size_t k, std::size_t l, double T, HurstIndex hurst,
                                          std::size_t n_steps, std::size_t M, std::uint64_t seed,
                                          unsigned workers = 1) {
  if (k < 1 || l < 1) throw std::domain_error("ekl_monte_carlo: mode indices must be >= 1");
  const auto table = ekl_monte_carlo_table(std::max(k, l), T, hurst, n_steps, M, seed, workers);
  return {table.estimate(k - 1, l - 1), table.std_err(k - 1, l - 1)};
}

enum class EklMethod { closed_form, singular_quadrature, monte_carlo };

inline const char* to_string(EklMethod m) {
  switch (m) {
    case EklMethod::closed_form: return "closed-form";
    case EklMethod::singular_quadrature: return "singular-quadrature";
    case EklMethod::monte_carlo: return "monte-carlo";
  }
  return "?";
}

inline EklMethod default_method(HurstIndex hurst) {
  if (hurst.is_brownian()) return EklMethod::closed_form;
  return hurst.value() > 0.5 ? EklMethod::singular_quadrature : EklMethod::monte_carlo;
}

struct KernelOptions {
  std::size_t quad_panels = 48;
  std::size_t mc_paths = 10000;
  std::size_t mc_steps = 8192;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::optional<EklMethod> method;  // overrides the H-based choice
};

struct KernelTable {
  double T;
  HurstIndex hurst;
  std::size_t N;
  std::vector<double> hk;
  SquareMatrix ekl;
  EklMethod ekl_method;
  std::optional<SquareMatrix> mc_std_err;   // monte-carlo only
  std::optional<SquareMatrix> quad_error;   // singular-quadrature only: |E(P) - E(2P)|
  std::uint64_t seed = 0;
  std::vector<std::size_t> small_hk;                          // 1-based k with |h_k| below the floor
  std::vector<std::pair<std::size_t, std::size_t>> small_ekl;  // 1-based (k,l), k <= l
  std::vector<std::string> warnings;
};

inline KernelTable build_kernel_table(std::span<const double> h_samples, double T, HurstIndex hurst, std::size_t N,
                                      const KernelOptions& options = {}) {
  if (N < 1) throw std::domain_error("build_kernel_table: N must be >= 1");
  KernelTable table{T, hurst, N, std::vector<double>(N), SquareMatrix(N), options.method.value_or(default_method(hurst)),
                    std::nullopt, std::nullopt, options.seed, {}, {}, {}};

  std::vector<std::string> hk_warnings;
  for (std::size_t k = 1; k <= N; ++k) {
    table.hk[k - 1] = compute_hk(h_samples, k, T, &hk_warnings);
    if (std::abs(table.hk[k - 1]) < invertibility_floor) table.small_hk.push_back(k);
  }
  if (!hk_warnings.empty()) table.warnings.push_back(hk_warnings.front());

  switch (table.ekl_method) {
    case EklMethod::closed_form:
      if (!hurst.is_brownian()) throw std::domain_error("closed-form E_kl requires H = 1/2");
      for (std::size_t k = 1; k <= N; ++k)
        for (std::size_t l = 1; l <= N; ++l) table.ekl(k - 1, l - 1) = ekl_white(k, l, T);
      break;
    case EklMethod::singular_quadrature: {
      SquareMatrix err(N);
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t k = 1; k <= N; ++k)
        for (std::size_t l = k; l <= N; ++l) pairs.emplace_back(k, l);
      parallel_for(pairs.size(), options.workers, [&](std::size_t p) {
        const auto [k, l] = pairs[p];
        const double fine = ekl_quadrature_highH(k, l, T, hurst, 2 * options.quad_panels);
        const double rough = ekl_quadrature_highH(k, l, T, hurst, options.quad_panels);
        table.ekl(k - 1, l - 1) = table.ekl(l - 1, k - 1) = fine;
        err(k - 1, l - 1) = err(l - 1, k - 1) = std::abs(fine - rough);
      });
      table.quad_error = std::move(err);
      break;
    }
    case EklMethod::monte_carlo: {
      auto mc = ekl_monte_carlo_table(N, T, hurst, options.mc_steps, options.mc_paths, options.seed, options.workers);
      table.ekl = std::move(mc.estimate);
      table.mc_std_err = std::move(mc.std_err);
      break;
    }
  }
  table.ekl.symmetrize();

  for (std::size_t k = 1; k <= N; ++k)
    for (std::size_t l = k; l <= N; ++l)
      if (std::abs(table.ekl(k - 1, l - 1)) < invertibility_floor) table.small_ekl.emplace_back(k, l);
  return table;
}

}  // namespace fbmwave
