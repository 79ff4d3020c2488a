#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmwave/fbm.hpp"
#include "fbmwave/forward.hpp"
#include "fbmwave/matrix.hpp"
#include "fbmwave/parallel.hpp"
#include "fbmwave/rng.hpp"
#include "fbmwave/spectral.hpp"

namespace fbmwave {

enum class SolverKind { fd, spectral };

inline const char* to_string(SolverKind s) { return s == SolverKind::fd ? "fd" : "spectral"; }

inline SolverKind parse_solver(const std::string& s) {
  if (s == "fd") return SolverKind::fd;
  if (s == "spectral") return SolverKind::spectral;
  throw std::invalid_argument("unknown solver '" + s + "' (expected fd or spectral)");
}

struct EnsembleConfig {
  std::size_t M = 1000;
  std::uint64_t master_seed = 0;
  HurstIndex hurst{0.9};
  SpaceTimeGrid grid{SpatialGrid(100), TimeGrid(8192, 1.0)};
  SourceSpec source;
  std::size_t N = 9;
  SolverKind solver = SolverKind::fd;
  unsigned workers = 1;
  /// Keep every path's coefficients in EnsembleMoments::samples.
  bool keep_samples = false;
  /// Record E||u||^2 over D x [0,T] per path (fd solver only).
  bool track_spacetime_norm = false;
};

struct EnsembleMoments {
  CoeffVector mean;
  SquareMatrix cov;
  std::size_t M = 0;
  CoeffVector std_err_mean;
  // Provenance carried into serialized output.
  double hurst = 0.5;
  std::uint64_t master_seed = 0;
  SolverKind solver = SolverKind::fd;
  double delta = 0.0;
  std::optional<std::uint64_t> pollution_seed;
  std::vector<double> samples;               // M x N when kept
  std::vector<double> spacetime_norm_sq;     // per path when tracked
};

/// Runs M independent forward solves and returns the sample mean and the
/// unbiased (divisor M-1) sample covariance of u_k(T), k = 1..N. Path i uses
/// the seed derive_seed(master_seed, ensemble_path, i); moments are reduced in
/// path order, so the result is bit-identical for any worker count.
inline EnsembleMoments run_ensemble(const EnsembleConfig& cfg) {
  if (cfg.M < 2) throw std::domain_error("run_ensemble: M must be >= 2");
  if (cfg.N < 1) throw std::domain_error("run_ensemble: N must be >= 1");
  if (cfg.N > cfg.grid.space.max_mode())
    throw std::domain_error("run_ensemble: N exceeds aliasing bound " + std::to_string(cfg.grid.space.max_mode()));
  cfg.source.validate(cfg.grid);
  if (cfg.track_spacetime_norm && cfg.solver != SolverKind::fd)
    throw std::invalid_argument("run_ensemble: space-time norm tracking needs the fd solver");

  const std::size_t N = cfg.N;
  const bool noisy = cfg.source.has_noise();
  std::optional<FgnSampler> sampler;
  if (noisy) sampler.emplace(cfg.grid.time.steps(), cfg.grid.time.step(), cfg.hurst);

  std::vector<double> coeffs(cfg.M * N);
  std::vector<double> norms(cfg.track_spacetime_norm ? cfg.M : 0);

  parallel_for(cfg.M, cfg.workers, [&](std::size_t i) {
    try {
      std::optional<FbmPath> path;
      if (sampler) path = sample_fbm_path(*sampler, derive_seed(cfg.master_seed, Stream::ensemble_path, i));
      const FbmPath* p = path ? &*path : nullptr;
      CoeffVector c;
      if (cfg.solver == SolverKind::fd) {
        std::vector<double> last;
        const std::size_t nt = cfg.grid.time.steps();
        const double ht = cfg.grid.time.step();
        double norm_sq = 0.0;
        march_fd(cfg.source, cfg.grid, p, {}, [&](std::size_t n, std::span<const double> row) {
          if (cfg.track_spacetime_norm) {
            double row_sq = 0.0;
            for (std::size_t j = 1; j + 1 < row.size(); ++j) row_sq += row[j] * row[j];
            const double w = (n == 0 || n == nt) ? 0.5 : 1.0;
            norm_sq += w * row_sq * cfg.grid.space.spacing() * ht;
          }
          if (n == nt) last.assign(row.begin(), row.end());
        });
        c = project_all(last, N, cfg.grid.space);
        if (cfg.track_spacetime_norm) norms[i] = norm_sq;
      } else {
        c = solve_spectral(cfg.source, cfg.grid, p, N).final_coeffs();
      }
      std::copy(c.begin(), c.end(), coeffs.begin() + static_cast<std::ptrdiff_t>(i * N));
    } catch (const std::exception& e) {
      throw std::runtime_error("ensemble path " + std::to_string(i) + " failed: " + e.what());
    }
  });

  EnsembleMoments out;
  out.M = cfg.M;
  out.hurst = cfg.hurst.value();
  out.master_seed = cfg.master_seed;
  out.solver = cfg.solver;
  out.mean.assign(N, 0.0);
  out.cov = SquareMatrix(N);
  out.std_err_mean.assign(N, 0.0);
  const double m = static_cast<double>(cfg.M);
  for (std::size_t i = 0; i < cfg.M; ++i)
    for (std::size_t k = 0; k < N; ++k) out.mean[k] += coeffs[i * N + k];
  for (auto& v : out.mean) v /= m;
  for (std::size_t i = 0; i < cfg.M; ++i)
    for (std::size_t k = 0; k < N; ++k) {
      const double dk = coeffs[i * N + k] - out.mean[k];
      for (std::size_t l = k; l < N; ++l) out.cov(k, l) += dk * (coeffs[i * N + l] - out.mean[l]);
    }
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t l = k; l < N; ++l) {
      out.cov(k, l) /= (m - 1.0);
      out.cov(l, k) = out.cov(k, l);
    }
  for (std::size_t k = 0; k < N; ++k) out.std_err_mean[k] = std::sqrt(out.cov(k, k) / m);
  if (cfg.keep_samples) out.samples = std::move(coeffs);
  out.spacetime_norm_sq = std::move(norms);
  return out;
}

/// Multiplicative measurement noise: every mean and covariance entry x becomes
/// x (1 + delta U), U ~ Uniform(-1, 1) independent per entry; the covariance is
/// then re-symmetrized.
inline EnsembleMoments pollute(const EnsembleMoments& moments, double delta, std::uint64_t seed) {
  if (delta < 0.0) throw std::domain_error("pollute: delta must be nonnegative");
  EnsembleMoments out = moments;
  out.delta = delta;
  out.pollution_seed = seed;
  if (delta == 0.0) return out;
  Rng rng = make_rng(seed, Stream::pollution, 0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (auto& v : out.mean) v *= 1.0 + delta * unit(rng);
  for (auto& v : out.cov.data()) v *= 1.0 + delta * unit(rng);
  out.cov.symmetrize();
  return out;
}

struct RelativeError {
  double value;
  /// Set when the reference field is identically zero and `value` is the
  /// absolute L2 norm of the approximation.
  bool absolute = false;
};

inline RelativeError relative_l2_error(std::span<const double> exact, std::span<const double> approx,
                                       const SpatialGrid& grid) {
  if (exact.size() != approx.size()) throw std::domain_error("relative_l2_error: length mismatch");
  std::vector<double> diff(exact.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = approx[i] - exact[i];
  const double num = l2_norm(diff, grid);
  const double den = l2_norm(exact, grid);
  if (den == 0.0) return {num, true};
  return {num / den, false};
}

}  // namespace fbmwave
