#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fbmwave/estimator.hpp"
#include "fbmwave/kernels.hpp"
#include "fbmwave/matrix.hpp"
#include "fbmwave/spectral.hpp"

namespace fbmwave {

struct FCoeffRecovery {
  CoeffVector coeffs;
  std::vector<std::size_t> skipped;  // 1-based modes with |h_k| below the floor
};

/// f_k = m_k sqrt(lambda_k) / h_k, from E[u_k(T)] = f_k h_k / sqrt(lambda_k).
inline FCoeffRecovery recover_f_coeffs(std::span<const double> mean, const KernelTable& table) {
  if (mean.size() > table.N) throw std::domain_error("recover_f_coeffs: kernel table is shorter than the data");
  FCoeffRecovery out{CoeffVector(mean.size(), 0.0), {}};
  for (std::size_t k = 1; k <= mean.size(); ++k) {
    const double hk = table.hk[k - 1];
    if (std::abs(hk) < invertibility_floor) {
      out.skipped.push_back(k);
      continue;
    }
    out.coeffs[k - 1] = mean[k - 1] * static_cast<double>(k) / hk;
  }
  if (!mean.empty() && out.skipped.size() == mean.size())
    throw std::runtime_error("recover_f_coeffs: every h_k is below the invertibility floor; f cannot be recovered");
  return out;
}

struct GProductRecovery {
  SquareMatrix products;
  std::vector<std::pair<std::size_t, std::size_t>> skipped;  // 1-based (k,l), k <= l
};

/// G_kl = g_k g_l = Cov(u_k(T), u_l(T)) / E_kl.
inline GProductRecovery recover_g_products(const SquareMatrix& cov, const KernelTable& table) {
  const std::size_t N = cov.size();
  if (N > table.N) throw std::domain_error("recover_g_products: kernel table is shorter than the data");
  if (!cov.is_symmetric(1e-9 * std::max(1.0, cov.max_abs())))
    throw std::domain_error("recover_g_products: covariance is not symmetric");
  GProductRecovery out{SquareMatrix(N), {}};
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t l = k; l < N; ++l) {
      const double e = table.ekl(k, l);
      if (std::abs(e) < invertibility_floor) {
        out.skipped.emplace_back(k + 1, l + 1);
        continue;
      }
      out.products(k, l) = out.products(l, k) = cov(k, l) / e;
    }
  if (N > 0 && out.skipped.size() == N * (N + 1) / 2)
    throw std::runtime_error("recover_g_products: every E_kl is below the invertibility floor");
  return out;
}

/// Rank-one factor of G = g g^T, determined up to a global sign. The pivot is
/// the largest diagonal entry and the returned vector is nonnegative there.
inline CoeffVector extract_g_up_to_sign(const SquareMatrix& G) {
  const std::size_t N = G.size();
  if (N == 0) throw std::domain_error("extract_g_up_to_sign: empty matrix");
  std::size_t p = 0;
  for (std::size_t k = 1; k < N; ++k)
    if (G(k, k) > G(p, p)) p = k;
  if (!(G(p, p) > 0.0)) throw std::domain_error("extract_g_up_to_sign: degenerate matrix (no positive diagonal)");
  const double gp = std::sqrt(G(p, p));
  CoeffVector g(N);
  for (std::size_t k = 0; k < N; ++k) g[k] = G(p, k) / gp;
  g[p] = gp;
  return g;
}

struct ReconstructionResult {
  CoeffVector f_coeffs;
  SquareMatrix g_products;
  std::vector<double> f_field;
  std::vector<double> g2_field;
  std::optional<double> rel_err_f;
  std::optional<double> rel_err_g2;
  std::vector<std::size_t> skipped_modes;
  std::vector<std::pair<std::size_t, std::size_t>> skipped_products;
};

struct SourceTruth {
  std::vector<double> f;
  std::vector<double> g;
};

/// Truncated eigen-expansion of f and g^2 from the first N moments.
inline ReconstructionResult reconstruct_fields(const EnsembleMoments& moments, const KernelTable& table,
                                               const SpatialGrid& grid,
                                               const std::optional<SourceTruth>& truth = std::nullopt) {
  if (moments.cov.size() != moments.mean.size())
    throw std::domain_error("reconstruct_fields: mean and covariance dimensions differ");
  auto f = recover_f_coeffs(moments.mean, table);
  auto g = recover_g_products(moments.cov, table);

  ReconstructionResult out;
  out.f_field = synthesize(f.coeffs, grid);
  out.g2_field = synthesize_rank2(g.products, grid);
  out.f_coeffs = std::move(f.coeffs);
  out.g_products = std::move(g.products);
  out.skipped_modes = std::move(f.skipped);
  out.skipped_products = std::move(g.skipped);
  if (truth) {
    std::vector<double> g2(truth->g.size());
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = truth->g[i] * truth->g[i];
    out.rel_err_f = relative_l2_error(truth->f, out.f_field, grid).value;
    out.rel_err_g2 = relative_l2_error(g2, out.g2_field, grid).value;
  }
  return out;
}

}  // namespace fbmwave
