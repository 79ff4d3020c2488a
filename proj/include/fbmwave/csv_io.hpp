#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbmwave/estimator.hpp"
#include "fbmwave/fbm.hpp"
#include "fbmwave/forward.hpp"
#include "fbmwave/inverse.hpp"
#include "fbmwave/kernels.hpp"

// CSV files start with one "# key=value,key=value" metadata line followed by
// a column header. Reals are written with 17 significant digits so that a
// read-back reproduces every double exactly.

namespace fbmwave::csv {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Short form for file names and metadata of configuration values.
inline std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string metadata_line(const Metadata& meta) {
  std::string line = "#";
  for (std::size_t i = 0; i < meta.size(); ++i) {
    line += (i == 0 ? " " : ",");
    line += meta[i].first + "=" + meta[i].second;
  }
  return line;
}

inline std::map<std::string, std::string> parse_metadata(const std::string& line) {
  if (line.empty() || line[0] != '#') throw std::runtime_error("csv: missing metadata line");
  std::map<std::string, std::string> out;
  std::stringstream ss(line.substr(1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    auto key = item.substr(0, eq);
    key.erase(0, key.find_first_not_of(' '));
    out[key] = item.substr(eq + 1);
  }
  return out;
}

inline std::vector<double> parse_row(const std::string& line) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return is;
}

inline void write_path(const std::filesystem::path& file, const FbmPath& path) {
  auto os = open_out(file);
  os << metadata_line({{"H", num(path.hurst.value())}, {"seed", std::to_string(path.seed)}}) << '\n';
  os << "t,B_H\n";
  for (std::size_t j = 0; j < path.values.size(); ++j) os << num(path.times[j]) << ',' << num(path.values[j]) << '\n';
}

inline void write_field(const std::filesystem::path& file, const WaveField& field, const SpaceTimeGrid& grid,
                        const Metadata& meta, std::size_t stride = 1) {
  auto os = open_out(file);
  os << metadata_line(meta) << '\n';
  os << 't';
  for (std::size_t i = 0; i < field.space_nodes(); ++i) os << ",u" << i;
  os << '\n';
  if (stride < 1) stride = 1;
  for (std::size_t n = 0; n < field.time_nodes(); ++n) {
    if (n % stride != 0 && n + 1 != field.time_nodes()) continue;
    os << num(grid.time.t(n));
    for (double v : field.row(n)) os << ',' << num(v);
    os << '\n';
  }
}

inline void write_coeffs(const std::filesystem::path& file, std::span<const double> coeffs, const Metadata& meta) {
  auto os = open_out(file);
  os << metadata_line(meta) << '\n';
  os << "k,u_k_T\n";
  for (std::size_t k = 0; k < coeffs.size(); ++k) os << (k + 1) << ',' << num(coeffs[k]) << '\n';
}

inline void write_matrix_rows(std::ostream& os, const SquareMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) os << (j ? "," : "") << num(m(i, j));
    os << '\n';
  }
}

inline void write_matrix_header(std::ostream& os, std::size_t n, const char* prefix) {
  for (std::size_t j = 1; j <= n; ++j) os << (j > 1 ? "," : "") << prefix << j;
  os << '\n';
}

inline Metadata kernel_metadata(const KernelTable& t) {
  return {{"T", num(t.T)},
          {"H", num(t.hurst.value())},
          {"N", std::to_string(t.N)},
          {"method", to_string(t.ekl_method)},
          {"seed", std::to_string(t.seed)}};
}

/// Writes hk.csv and ekl.csv, plus ekl_std_err.csv (monte-carlo) or
/// ekl_quad_error.csv (singular-quadrature). Returns the files written.
inline std::vector<std::filesystem::path> write_kernel_table(const std::filesystem::path& dir, const KernelTable& t) {
  const auto meta = metadata_line(kernel_metadata(t));
  std::vector<std::filesystem::path> files{dir / "hk.csv", dir / "ekl.csv"};
  {
    auto os = open_out(files[0]);
    os << meta << "\nk,h_k\n";
    for (std::size_t k = 0; k < t.N; ++k) os << (k + 1) << ',' << num(t.hk[k]) << '\n';
  }
  auto write_block = [&](const std::filesystem::path& p, const SquareMatrix& m) {
    auto os = open_out(p);
    os << meta << '\n';
    write_matrix_header(os, t.N, "l");
    write_matrix_rows(os, m);
  };
  write_block(files[1], t.ekl);
  if (t.mc_std_err) {
    files.push_back(dir / "ekl_std_err.csv");
    write_block(files.back(), *t.mc_std_err);
  }
  if (t.quad_error) {
    files.push_back(dir / "ekl_quad_error.csv");
    write_block(files.back(), *t.quad_error);
  }
  return files;
}

inline Metadata moments_metadata(const EnsembleMoments& m) {
  return {{"M", std::to_string(m.M)},
          {"N", std::to_string(m.mean.size())},
          {"H", num(m.hurst)},
          {"delta", num(m.delta)},
          {"master_seed", std::to_string(m.master_seed)},
          {"pollution_seed", m.pollution_seed ? std::to_string(*m.pollution_seed) : "none"},
          {"solver", to_string(m.solver)}};
}

/// Mean and standard error as columns, then a "covariance" marker line and
/// the N x N covariance block.
inline void write_moments(const std::filesystem::path& file, const EnsembleMoments& m) {
  auto os = open_out(file);
  os << metadata_line(moments_metadata(m)) << '\n';
  os << "k,mean,std_err_mean\n";
  for (std::size_t k = 0; k < m.mean.size(); ++k)
    os << (k + 1) << ',' << num(m.mean[k]) << ',' << num(m.std_err_mean[k]) << '\n';
  os << "covariance\n";
  write_matrix_header(os, m.mean.size(), "l");
  write_matrix_rows(os, m.cov);
}

inline EnsembleMoments read_moments(const std::filesystem::path& file) {
  auto is = open_in(file);
  std::string line;
  std::getline(is, line);
  const auto meta = parse_metadata(line);
  EnsembleMoments m;
  m.M = std::stoull(meta.at("M"));
  const std::size_t N = std::stoull(meta.at("N"));
  m.hurst = std::stod(meta.at("H"));
  m.delta = std::stod(meta.at("delta"));
  m.master_seed = std::stoull(meta.at("master_seed"));
  if (meta.at("pollution_seed") != "none") m.pollution_seed = std::stoull(meta.at("pollution_seed"));
  m.solver = parse_solver(meta.at("solver"));
  std::getline(is, line);  // column header
  for (std::size_t k = 0; k < N; ++k) {
    std::getline(is, line);
    const auto row = parse_row(line);
    if (row.size() != 3) throw std::runtime_error("moments csv: malformed mean row");
    m.mean.push_back(row[1]);
    m.std_err_mean.push_back(row[2]);
  }
  std::getline(is, line);
  if (line != "covariance") throw std::runtime_error("moments csv: missing covariance block");
  std::getline(is, line);
  m.cov = SquareMatrix(N);
  for (std::size_t k = 0; k < N; ++k) {
    std::getline(is, line);
    const auto row = parse_row(line);
    if (row.size() != N) throw std::runtime_error("moments csv: malformed covariance row");
    for (std::size_t l = 0; l < N; ++l) m.cov(k, l) = row[l];
  }
  return m;
}

inline void write_reconstruction(const std::filesystem::path& file, const ReconstructionResult& r,
                                 const SpatialGrid& grid, const SourceTruth& truth, const Metadata& meta) {
  auto os = open_out(file);
  os << metadata_line(meta) << '\n';
  os << "x,f_true,f_hat,g2_true,g2_hat\n";
  for (std::size_t i = 0; i < grid.nodes(); ++i)
    os << num(grid.x(i)) << ',' << num(truth.f[i]) << ',' << num(r.f_field[i]) << ','
       << num(truth.g[i] * truth.g[i]) << ',' << num(r.g2_field[i]) << '\n';
}

/// Reads a two- or three-column sampled function file (after the optional
/// metadata line and the header). Returns one vector per column.
inline std::vector<std::vector<double>> read_columns(const std::filesystem::path& file, std::size_t columns) {
  auto is = open_in(file);
  std::string line;
  std::vector<std::vector<double>> cols(columns);
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto row = parse_row(line);
    if (row.size() != columns)
      throw std::runtime_error(file.string() + ": expected " + std::to_string(columns) + " columns");
    for (std::size_t c = 0; c < columns; ++c) cols[c].push_back(row[c]);
  }
  return cols;
}

}  // namespace fbmwave::csv
