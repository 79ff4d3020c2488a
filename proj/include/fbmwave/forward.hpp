#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmwave/fbm.hpp"
#include "fbmwave/spectral.hpp"
#include "fbmwave/time_grid.hpp"

namespace fbmwave {

struct SpaceTimeGrid {
  SpatialGrid space;
  TimeGrid time;

  double courant_number() const { return time.step() / space.spacing(); }
};

/// Separable source F(x,t) = f(x) h(t) + g(x) dB^H/dt, sampled on a grid.
struct SourceSpec {
  std::vector<double> f;  // on the spatial grid
  std::vector<double> g;  // on the spatial grid
  std::vector<double> h;  // on the time grid

  void validate(const SpaceTimeGrid& grid) const {
    if (f.size() != grid.space.nodes() || g.size() != grid.space.nodes())
      throw std::domain_error("SourceSpec: f and g must have one sample per spatial node");
    if (h.size() != grid.time.nodes()) throw std::domain_error("SourceSpec: h must have one sample per time node");
  }

  bool has_noise() const {
    for (double v : g)
      if (v != 0.0) return true;
    return false;
  }
};

/// u[n][i] ~ u(x_i, t_n), stored row-major by time node.
class WaveField {
public:
  WaveField(std::size_t time_nodes, std::size_t space_nodes)
      : rows_(time_nodes), cols_(space_nodes), u_(time_nodes * space_nodes, 0.0) {}

  std::size_t time_nodes() const { return rows_; }
  std::size_t space_nodes() const { return cols_; }

  std::span<double> row(std::size_t n) { return {u_.data() + n * cols_, cols_}; }
  std::span<const double> row(std::size_t n) const { return {u_.data() + n * cols_, cols_}; }
  std::span<const double> final_row() const { return row(rows_ - 1); }

  double operator()(std::size_t n, std::size_t i) const { return u_[n * cols_ + i]; }

private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> u_;
};

/// Test hooks for the finite-difference solver.
struct FdOptions {
  /// Replaces the separable source by F(x, t) when set.
  std::function<double(double, double)> forcing;
  /// Nonzero initial displacement (zero initial velocity is kept).
  std::vector<double> initial_displacement;
};

namespace detail {

inline void check_courant(const SpaceTimeGrid& grid) {
  const double ht = grid.time.step();
  const double hx = grid.space.spacing();
  if (ht > hx) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Courant condition violated: h_t = " << ht << " exceeds h_x = " << hx
        << "; the explicit scheme is unstable";
    throw std::domain_error(msg.str());
  }
}

inline std::span<const double> path_values(const SpaceTimeGrid& grid, const FbmPath* path, bool needed) {
  if (!path) {
    if (needed) throw std::invalid_argument("a noise path is required when g is nonzero");
    return {};
  }
  if (path->n_steps() != grid.time.steps())
    throw std::domain_error("path has " + std::to_string(path->n_steps()) + " steps, grid has " +
                            std::to_string(grid.time.steps()));
  if (std::abs(path->dt() - grid.time.step()) > 1e-12 * grid.time.step())
    throw std::domain_error("path time step does not match the grid");
  return path->values;
}

}  // namespace detail

/// Explicit central-difference scheme for u_tt - u_xx = F with homogeneous
/// Dirichlet data and zero initial velocity. observer(n, row) is called for
/// every time node n = 0..n_t with the solution on that row.
///
/// The noise forcing at step n is g(x_i) (B(t_n) - B(t_{n-1}))/h_t and is zero
/// at n = 0. The first step eliminates the ghost level u^{-1} = u^1.
template <class Observer>
void march_fd(const SourceSpec& source, const SpaceTimeGrid& grid, const FbmPath* path, const FdOptions& options,
              Observer&& observer) {
  detail::check_courant(grid);
  source.validate(grid);
  const bool noisy = !options.forcing && source.has_noise();
  const auto B = detail::path_values(grid, path, noisy);

  const std::size_t nx = grid.space.nodes();
  const std::size_t nt = grid.time.steps();
  const double ht = grid.time.step();
  const double r2 = grid.courant_number() * grid.courant_number();
  const double ht2 = ht * ht;

  std::vector<double> prev(nx, 0.0), curr(nx, 0.0), next(nx, 0.0), force(nx, 0.0);
  if (!options.initial_displacement.empty()) {
    if (options.initial_displacement.size() != nx) throw std::domain_error("initial displacement size mismatch");
    curr = options.initial_displacement;
    curr.front() = curr.back() = 0.0;
  }

  auto fill_force = [&](std::size_t n) {
    if (options.forcing) {
      const double t = grid.time.t(n);
      for (std::size_t i = 1; i + 1 < nx; ++i) force[i] = options.forcing(grid.space.x(i), t);
      return;
    }
    const double hn = source.h[n];
    const double noise = (noisy && n > 0) ? (B[n] - B[n - 1]) / ht : 0.0;
    for (std::size_t i = 1; i + 1 < nx; ++i) force[i] = source.f[i] * hn + source.g[i] * noise;
  };

  observer(std::size_t{0}, std::span<const double>(curr));

  fill_force(0);
  for (std::size_t i = 1; i + 1 < nx; ++i)
    next[i] = curr[i] + 0.5 * r2 * (curr[i - 1] - 2.0 * curr[i] + curr[i + 1]) + 0.5 * ht2 * force[i];
  std::swap(prev, curr);
  std::swap(curr, next);
  observer(std::size_t{1}, std::span<const double>(curr));

  for (std::size_t n = 1; n < nt; ++n) {
    fill_force(n);
    for (std::size_t i = 1; i + 1 < nx; ++i)
      next[i] = 2.0 * curr[i] - prev[i] + r2 * (curr[i - 1] - 2.0 * curr[i] + curr[i + 1]) + ht2 * force[i];
    std::swap(prev, curr);
    std::swap(curr, next);
    observer(n + 1, std::span<const double>(curr));
  }
}

inline WaveField solve_fd(const SourceSpec& source, const SpaceTimeGrid& grid, const FbmPath* path,
                          const FdOptions& options = {}) {
  WaveField field(grid.time.nodes(), grid.space.nodes());
  march_fd(source, grid, path, options, [&](std::size_t n, std::span<const double> row) {
    std::copy(row.begin(), row.end(), field.row(n).begin());
  });
  return field;
}

inline WaveField solve_fd(const SourceSpec& source, const SpaceTimeGrid& grid, const FbmPath& path,
                          const FdOptions& options = {}) {
  return solve_fd(source, grid, &path, options);
}

/// Discrete energy of the leapfrog scheme between levels n and n+1; it is
/// conserved exactly by the unforced scheme.
inline double discrete_energy(std::span<const double> lower, std::span<const double> upper, const SpaceTimeGrid& grid) {
  const double ht = grid.time.step();
  const double hx = grid.space.spacing();
  double kinetic = 0.0, potential = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double v = (upper[i] - lower[i]) / ht;
    kinetic += v * v;
  }
  for (std::size_t i = 0; i + 1 < lower.size(); ++i)
    potential += (upper[i + 1] - upper[i]) * (lower[i + 1] - lower[i]) / (hx * hx);
  return 0.5 * (kinetic + potential) * hx;
}

/// Mode coefficients of the mild solution, with u_k = I1_k + I2_k.
struct SpectralTrajectory {
  std::size_t K;
  std::size_t time_nodes;
  std::vector<double> deterministic;  // I1, K x time_nodes
  std::vector<double> stochastic;     // I2, K x time_nodes

  double I1(std::size_t k, std::size_t n) const { return deterministic[(k - 1) * time_nodes + n]; }
  double I2(std::size_t k, std::size_t n) const { return stochastic[(k - 1) * time_nodes + n]; }
  double u(std::size_t k, std::size_t n) const { return I1(k, n) + I2(k, n); }

  CoeffVector final_coeffs() const {
    CoeffVector c(K);
    for (std::size_t k = 1; k <= K; ++k) c[k - 1] = u(k, time_nodes - 1);
    return c;
  }
};

/// Evaluates the mild solution mode by mode. I1 uses the composite trapezoid
/// rule in time; I2 is the left-endpoint sum over the path increments. Both
/// convolutions are evaluated by running sums after expanding
/// sin(k(t - s)) = sin(kt)cos(ks) - cos(kt)sin(ks).
inline SpectralTrajectory solve_spectral(const SourceSpec& source, const SpaceTimeGrid& grid, const FbmPath* path,
                                         std::size_t K, const FdOptions& options = {}) {
  source.validate(grid);
  if (K < 1) throw std::domain_error("solve_spectral: K must be >= 1");
  if (K > grid.space.max_mode())
    throw std::domain_error("solve_spectral: K = " + std::to_string(K) + " exceeds aliasing bound " +
                            std::to_string(grid.space.max_mode()));
  const bool noisy = source.has_noise();
  const auto B = detail::path_values(grid, path, noisy);
  const std::size_t nodes = grid.time.nodes();
  const double ht = grid.time.step();

  SpectralTrajectory out{K, nodes, std::vector<double>(K * nodes, 0.0), std::vector<double>(K * nodes, 0.0)};

  // Forcing coefficients F_k(t_m), only needed for the deterministic hook.
  std::vector<double> forcing_coeffs;
  if (options.forcing) {
    forcing_coeffs.assign(K * nodes, 0.0);
    std::vector<double> slice(grid.space.nodes(), 0.0);
    for (std::size_t m = 0; m < nodes; ++m) {
      const double t = grid.time.t(m);
      for (std::size_t i = 1; i + 1 < slice.size(); ++i) slice[i] = options.forcing(grid.space.x(i), t);
      for (std::size_t k = 1; k <= K; ++k) forcing_coeffs[(k - 1) * nodes + m] = project(slice, k, grid.space);
    }
  }

  for (std::size_t k = 1; k <= K; ++k) {
    const double omega = static_cast<double>(k);
    const double fk = options.forcing ? 1.0 : project(source.f, k, grid.space);
    const double gk = (options.forcing || !noisy) ? 0.0 : project(source.g, k, grid.space);
    auto drive = [&](std::size_t m) {
      return options.forcing ? forcing_coeffs[(k - 1) * nodes + m] : source.h[m];
    };

    double det_cos = 0.0, det_sin = 0.0, sto_cos = 0.0, sto_sin = 0.0;
    for (std::size_t n = 0; n < nodes; ++n) {
      const double t = grid.time.t(n);
      const double s = std::sin(omega * t), c = std::cos(omega * t);
      out.deterministic[(k - 1) * nodes + n] = fk * ht / omega * (s * det_cos - c * det_sin);
      out.stochastic[(k - 1) * nodes + n] = gk / omega * (s * sto_cos - c * sto_sin);
      // Accumulate node n for later times; the m = n trapezoid term carries G_k(0) = 0.
      const double w = n == 0 ? 0.5 : 1.0;
      det_cos += w * c * drive(n);
      det_sin += w * s * drive(n);
      if (gk != 0.0 && n + 1 < nodes) {
        const double dB = B[n + 1] - B[n];
        sto_cos += c * dB;
        sto_sin += s * dB;
      }
    }
  }
  return out;
}

inline SpectralTrajectory solve_spectral(const SourceSpec& source, const SpaceTimeGrid& grid, const FbmPath& path,
                                         std::size_t K, const FdOptions& options = {}) {
  return solve_spectral(source, grid, &path, K, options);
}

inline CoeffVector final_time_coeffs(const WaveField& field, std::size_t N, const SpatialGrid& grid) {
  return project_all(field.final_row(), N, grid);
}

}  // namespace fbmwave
