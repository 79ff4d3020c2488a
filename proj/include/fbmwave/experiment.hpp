#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmwave/csv_io.hpp"
#include "fbmwave/estimator.hpp"
#include "fbmwave/fbm.hpp"
#include "fbmwave/forward.hpp"
#include "fbmwave/inverse.hpp"
#include "fbmwave/kernels.hpp"
#include "fbmwave/rng.hpp"

namespace fbmwave {

/// Invalid configuration value; `field` names the offending key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

struct ExperimentConfig {
  std::vector<double> H{0.9};
  std::vector<double> delta{0.001};
  std::size_t M = 1000;
  std::size_t N = 9;
  std::size_t n_t = 8192;
  std::size_t n_x = 100;
  double T = 1.0;
  std::uint64_t master_seed = 1;
  std::string solver = "fd";
  unsigned workers = 1;
  std::string source = "standard";  // standard | file
  std::string source_file;       // columns x,f,g on the spatial grid
  std::string h_file;            // columns t,h on the time grid
  std::size_t kernel_paths = 10000;
  std::size_t quad_panels = 48;
  std::size_t field_stride = 1;
  std::size_t paths = 1;  // fbm subcommand

  SpaceTimeGrid grid() const { return {SpatialGrid(n_x), TimeGrid(n_t, T)}; }

  /// Sets one key from its textual value.
  void set(const std::string& key, const std::string& value) {
    auto as_real = [&](const std::string& s) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + s + "'");
      }
    };
    auto as_count = [&](const std::string& s) -> std::uint64_t {
      try {
        std::size_t pos = 0;
        if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
        const auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + s + "'");
      }
    };
    auto as_list = [&](const std::string& s) {
      std::vector<double> out;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(as_real(item));
      }
      if (out.empty()) throw ConfigError(key, "empty list");
      return out;
    };

    if (key == "H") H = as_list(value);
    else if (key == "delta") delta = as_list(value);
    else if (key == "M") M = as_count(value);
    else if (key == "N") N = as_count(value);
    else if (key == "n_t") n_t = as_count(value);
    else if (key == "n_x") n_x = as_count(value);
    else if (key == "T") T = as_real(value);
    else if (key == "seed" || key == "master_seed") master_seed = as_count(value);
    else if (key == "solver") solver = value;
    else if (key == "workers") workers = static_cast<unsigned>(as_count(value));
    else if (key == "source") source = value;
    else if (key == "source_file") source_file = value;
    else if (key == "h_file") h_file = value;
    else if (key == "kernel_paths") kernel_paths = as_count(value);
    else if (key == "quad_panels") quad_panels = as_count(value);
    else if (key == "field_stride") field_stride = as_count(value);
    else if (key == "paths") paths = as_count(value);
    else throw ConfigError(key, "unknown key");
  }

  void validate() const {
    for (double h : H)
      if (!(h > 0.0 && h < 1.0)) throw ConfigError("H", "Hurst index must lie in (0,1)");
    for (double d : delta)
      if (!(d >= 0.0)) throw ConfigError("delta", "noise level must be nonnegative");
    if (M < 2) throw ConfigError("M", "need at least 2 sample paths");
    if (n_x < 4) throw ConfigError("n_x", "need at least 4 spatial intervals");
    if (n_t < 1) throw ConfigError("n_t", "need at least 1 time step");
    if (N < 1 || N > n_x / 4) throw ConfigError("N", "must lie in [1, n_x/4] to avoid aliasing");
    if (!(T > 0.0)) throw ConfigError("T", "final time must be positive");
    if (solver != "fd" && solver != "spectral") throw ConfigError("solver", "expected fd or spectral");
    if (source != "standard" && source != "file") throw ConfigError("source", "expected standard or file");
    if (source == "file" && source_file.empty()) throw ConfigError("source_file", "required when source=file");
    if (source == "file" && h_file.empty()) throw ConfigError("h_file", "required when source=file");
    if (kernel_paths < 2) throw ConfigError("kernel_paths", "need at least 2 paths");
    if (quad_panels < 1) throw ConfigError("quad_panels", "must be >= 1");
    if (paths < 1) throw ConfigError("paths", "must be >= 1");
  }

  csv::Metadata metadata() const {
    return {{"n_t", std::to_string(n_t)}, {"n_x", std::to_string(n_x)},  {"T", csv::num(T)},
            {"N", std::to_string(N)},     {"M", std::to_string(M)},      {"solver", solver},
            {"source", source},           {"master_seed", std::to_string(master_seed)}};
  }
};

/// Flat "key = value" file; '#' starts a comment.
inline ExperimentConfig load_config(const std::filesystem::path& file, ExperimentConfig cfg = {}) {
  std::ifstream is(file);
  if (!is) throw ConfigError("config", "cannot open " + file.string());
  std::string line;
  while (std::getline(is, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw ConfigError(trim(line), "expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

/// h = 1, f = sin(3x), g = exp(-(x - pi/2)^2).
inline SourceSpec standard_source(const SpaceTimeGrid& grid) {
  SourceSpec s;
  s.f = grid.space.sample([](double x) { return std::sin(3.0 * x); });
  s.g = grid.space.sample([](double x) {
    const double d = x - 0.5 * std::numbers::pi;
    return std::exp(-d * d);
  });
  s.h = grid.time.sample([](double) { return 1.0; });
  return s;
}

inline SourceSpec load_source(const ExperimentConfig& cfg) {
  const auto grid = cfg.grid();
  if (cfg.source == "standard") return standard_source(grid);
  SourceSpec s;
  auto spatial = csv::read_columns(cfg.source_file, 3);
  if (spatial[0].size() != grid.space.nodes())
    throw ConfigError("source_file", "expected " + std::to_string(grid.space.nodes()) + " rows (n_x + 1)");
  for (std::size_t i = 0; i < spatial[0].size(); ++i)
    if (std::abs(spatial[0][i] - grid.space.x(i)) > 1e-9)
      throw ConfigError("source_file", "x column does not match the spatial grid at row " + std::to_string(i));
  s.f = std::move(spatial[1]);
  s.g = std::move(spatial[2]);
  auto temporal = csv::read_columns(cfg.h_file, 2);
  if (temporal[0].size() != grid.time.nodes())
    throw ConfigError("h_file", "expected " + std::to_string(grid.time.nodes()) + " rows (n_t + 1)");
  s.h = std::move(temporal[1]);
  return s;
}

inline KernelOptions kernel_options(const ExperimentConfig& cfg) {
  KernelOptions o;
  o.quad_panels = cfg.quad_panels;
  o.mc_paths = cfg.kernel_paths;
  o.mc_steps = cfg.n_t;
  o.seed = cfg.master_seed;
  o.workers = cfg.workers;
  return o;
}

inline std::filesystem::path hurst_dir(const std::filesystem::path& out, double H) { return out / ("H" + csv::tag(H)); }

/// One forward solve on a fresh path; writes field.csv (fd only) and coeffs.csv.
inline std::vector<std::filesystem::path> cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  if (cfg.H.size() != 1) throw ConfigError("H", "simulate takes a single Hurst index");
  const HurstIndex hurst(cfg.H.front());
  const auto grid = cfg.grid();
  const auto source = load_source(cfg);
  const auto seed = derive_seed(cfg.master_seed, Stream::single_path, 0);
  const FgnSampler sampler(grid.time.steps(), grid.time.step(), hurst);
  const auto path = sample_fbm_path(sampler, seed);

  auto meta = cfg.metadata();
  meta.emplace_back("H", csv::num(hurst.value()));
  meta.emplace_back("path_seed", std::to_string(seed));
  std::vector<std::filesystem::path> files;
  if (cfg.solver == "fd") {
    const auto field = solve_fd(source, grid, path);
    files.push_back(out / "field.csv");
    csv::write_field(files.back(), field, grid, meta, cfg.field_stride);
    files.push_back(out / "coeffs.csv");
    csv::write_coeffs(files.back(), final_time_coeffs(field, cfg.N, grid.space), meta);
  } else {
    const auto traj = solve_spectral(source, grid, path, cfg.N);
    files.push_back(out / "coeffs.csv");
    csv::write_coeffs(files.back(), traj.final_coeffs(), meta);
  }
  return files;
}

inline std::vector<std::filesystem::path> cmd_kernels(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const auto source = load_source(cfg);
  std::vector<std::filesystem::path> files;
  for (double H : cfg.H) {
    const auto table = build_kernel_table(source.h, cfg.T, HurstIndex(H), cfg.N, kernel_options(cfg));
    for (auto& f : csv::write_kernel_table(hurst_dir(out, H), table)) files.push_back(f);
  }
  return files;
}

/// Dumps `paths` sample paths of B^H, one CSV per path.
inline std::vector<std::filesystem::path> cmd_fbm(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  const auto grid = cfg.grid();
  std::vector<std::filesystem::path> files;
  for (double H : cfg.H) {
    const FgnSampler sampler(grid.time.steps(), grid.time.step(), HurstIndex(H));
    for (std::size_t i = 0; i < cfg.paths; ++i) {
      const auto path = sample_fbm_path(sampler, derive_seed(cfg.master_seed, Stream::single_path, i));
      files.push_back(hurst_dir(out, H) / ("path_" + std::to_string(i) + ".csv"));
      csv::write_path(files.back(), path);
    }
  }
  return files;
}

struct SummaryRow {
  double H;
  double delta;
  std::size_t M;
  std::string ekl_method;
  std::uint64_t pollution_seed;
  double rel_err_f;
  double rel_err_g2;
  std::size_t skipped_modes;
  std::size_t skipped_products;
  double wall_seconds;
};

inline const char* summary_header() {
  return "H,delta,M,N,n_t,n_x,T,solver,ekl_method,master_seed,pollution_seed,rel_err_f,rel_err_g2,skipped_modes,"
         "skipped_products";
}

/// Kernel table, ensemble, pollution and reconstruction for every (H, delta)
/// pair. Writes moments and reconstruction CSVs per pair, summary.csv (fully
/// determined by the config) and timing.csv (wall-clock times).
inline std::vector<SummaryRow> cmd_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                              std::ostream& log = std::clog) {
  cfg.validate();
  const auto grid = cfg.grid();
  const auto source = load_source(cfg);
  const SourceTruth truth{source.f, source.g};
  std::vector<SummaryRow> rows;

  for (double H : cfg.H) {
    const auto start = std::chrono::steady_clock::now();
    const HurstIndex hurst(H);
    log << "H=" << H << ": building kernel table\n";
    const auto table = build_kernel_table(source.h, cfg.T, hurst, cfg.N, kernel_options(cfg));

    EnsembleConfig ens;
    ens.M = cfg.M;
    ens.master_seed = cfg.master_seed;
    ens.hurst = hurst;
    ens.grid = grid;
    ens.source = source;
    ens.N = cfg.N;
    ens.solver = parse_solver(cfg.solver);
    ens.workers = cfg.workers;
    log << "H=" << H << ": running " << cfg.M << " paths\n";
    const auto moments = run_ensemble(ens);
    const double shared_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    for (std::size_t d = 0; d < cfg.delta.size(); ++d) {
      const auto t0 = std::chrono::steady_clock::now();
      const double delta = cfg.delta[d];
      const auto pseed = derive_seed(cfg.master_seed, Stream::pollution, d);
      const auto noisy = pollute(moments, delta, pseed);
      const auto result = reconstruct_fields(noisy, table, grid.space, truth);

      const std::string stem = "H" + csv::tag(H) + "_delta" + csv::tag(delta);
      csv::write_moments(out / ("moments_" + stem + ".csv"), noisy);
      auto meta = csv::moments_metadata(noisy);
      meta.emplace_back("ekl_method", to_string(table.ekl_method));
      meta.emplace_back("rel_err_f", csv::num(*result.rel_err_f));
      meta.emplace_back("rel_err_g2", csv::num(*result.rel_err_g2));
      csv::write_reconstruction(out / ("reconstruction_" + stem + ".csv"), result, grid.space, truth, meta);

      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back({H, delta, cfg.M, to_string(table.ekl_method), pseed, *result.rel_err_f, *result.rel_err_g2,
                      result.skipped_modes.size(), result.skipped_products.size(), shared_seconds + secs});
      log << "H=" << H << " delta=" << delta << ": rel_err_f=" << *result.rel_err_f
          << " rel_err_g2=" << *result.rel_err_g2 << '\n';
    }
  }

  auto summary = csv::open_out(out / "summary.csv");
  summary << summary_header() << '\n';
  for (const auto& r : rows)
    summary << csv::num(r.H) << ',' << csv::num(r.delta) << ',' << r.M << ',' << cfg.N << ',' << cfg.n_t << ','
            << cfg.n_x << ',' << csv::num(cfg.T) << ',' << cfg.solver << ',' << r.ekl_method << ','
            << cfg.master_seed << ',' << r.pollution_seed << ',' << csv::num(r.rel_err_f) << ','
            << csv::num(r.rel_err_g2) << ',' << r.skipped_modes << ',' << r.skipped_products << '\n';
  auto timing = csv::open_out(out / "timing.csv");
  timing << "H,delta,wall_seconds\n";
  for (const auto& r : rows) timing << csv::num(r.H) << ',' << csv::num(r.delta) << ',' << r.wall_seconds << '\n';
  return rows;
}

}  // namespace fbmwave
