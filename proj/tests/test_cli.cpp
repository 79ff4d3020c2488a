#include <catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fbmwave/experiment.hpp"

using namespace fbmwave;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fbmwave_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const char* exe = std::getenv("FBMWAVE_CLI");
  REQUIRE(exe != nullptr);
  const int status = std::system((std::string(exe) + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.n_t = 512;
  cfg.n_x = 40;
  cfg.N = 5;
  cfg.M = 20;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing", "[cli]") {
  const auto dir = scratch("config");
  {
    std::ofstream os(dir / "run.cfg");
    os << "# sweep\nH = 0.3, 0.9\ndelta=0.01\nM = 50   # paths\n\nseed = 42\nsolver = spectral\n";
  }
  const auto cfg = load_config(dir / "run.cfg");
  CHECK(cfg.H == std::vector<double>{0.3, 0.9});
  CHECK(cfg.delta == std::vector<double>{0.01});
  CHECK(cfg.M == 50);
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.solver == "spectral");
  CHECK(cfg.N == 9);
  CHECK(cfg.n_t == 8192);

  auto field_of = [](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  ExperimentConfig c;
  CHECK(field_of([&] { c.set("M", "ten"); }) == "M");
  CHECK(field_of([&] { c.set("N", "-3"); }) == "N");
  CHECK(field_of([&] { c.set("colour", "red"); }) == "colour");
  CHECK(field_of([&] { c.set("T", "1.0x"); }) == "T");
  CHECK(field_of([] {
          ExperimentConfig x;
          x.H = {1.2};
          x.validate();
        }) == "H");
  CHECK(field_of([] {
          ExperimentConfig x;
          x.N = 30;
          x.validate();
        }) == "N");
  CHECK(field_of([] {
          ExperimentConfig x;
          x.solver = "euler";
          x.validate();
        }) == "solver");
  CHECK(field_of([] {
          ExperimentConfig x;
          x.source = "file";
          x.validate();
        }) == "source_file");
  CHECK(field_of([&] { load_config(dir / "missing.cfg"); }) == "config");
}

TEST_CASE("simulate writes field and coefficients", "[cli]") {
  const auto out = scratch("simulate");
  auto cfg = quick_config();
  const auto files = cmd_simulate(cfg, out);
  REQUIRE(files.size() == 2);
  CHECK(fs::exists(out / "field.csv"));
  CHECK(fs::exists(out / "coeffs.csv"));
  const auto coeffs = csv::read_columns(out / "coeffs.csv", 2);
  CHECK(coeffs[0].size() == cfg.N);
  const auto header = csv::parse_metadata(slurp(out / "coeffs.csv").substr(0, slurp(out / "coeffs.csv").find('\n')));
  CHECK(header.at("master_seed") == "1");
  CHECK(header.count("path_seed") == 1);

  const auto spec_out = scratch("simulate_spectral");
  cfg.solver = "spectral";
  const auto spec_files = cmd_simulate(cfg, spec_out);
  REQUIRE(spec_files.size() == 1);
  CHECK(spec_files[0].filename() == "coeffs.csv");
  CHECK_FALSE(fs::exists(spec_out / "field.csv"));

  cfg.H = {0.3, 0.9};
  CHECK_THROWS_AS(cmd_simulate(cfg, spec_out), ConfigError);
}

TEST_CASE("kernels subcommand tags the method", "[cli]") {
  const auto out = scratch("kernels");
  auto cfg = quick_config();
  cfg.H = {0.5, 0.9, 0.3};
  cfg.kernel_paths = 200;
  cmd_kernels(cfg, out);
  auto method = [&](const char* dir) {
    const auto text = slurp(out / dir / "ekl.csv");
    return csv::parse_metadata(text.substr(0, text.find('\n'))).at("method");
  };
  CHECK(method("H0.5") == "closed-form");
  CHECK(method("H0.9") == "singular-quadrature");
  CHECK(method("H0.3") == "monte-carlo");
  CHECK(fs::exists(out / "H0.3" / "ekl_std_err.csv"));
  CHECK(fs::exists(out / "H0.9" / "ekl_quad_error.csv"));
  CHECK_FALSE(fs::exists(out / "H0.5" / "ekl_std_err.csv"));
  const auto hk = csv::read_columns(out / "H0.5" / "hk.csv", 2);
  CHECK(hk[1].size() == cfg.N);
}

TEST_CASE("fbm subcommand dumps paths", "[cli]") {
  const auto out = scratch("fbm");
  auto cfg = quick_config();
  cfg.paths = 3;
  const auto files = cmd_fbm(cfg, out);
  REQUIRE(files.size() == 3);
  const auto cols = csv::read_columns(files[0], 2);
  CHECK(cols[0].size() == cfg.n_t + 1);
  CHECK(cols[1][0] == 0.0);
  CHECK(slurp(files[0]) != slurp(files[1]));
}

TEST_CASE("experiment smoke run and delta sweep", "[cli]") {
  const auto out = scratch("experiment");
  ExperimentConfig cfg;
  cfg.M = 2;
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = cmd_experiment(cfg, out, log);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 1.0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ekl_method == "singular-quadrature");
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(fs::exists(out / "timing.csv"));
  CHECK(fs::exists(out / "moments_H0.9_delta0.001.csv"));
  CHECK(fs::exists(out / "reconstruction_H0.9_delta0.001.csv"));
  const auto recon = slurp(out / "reconstruction_H0.9_delta0.001.csv");
  CHECK(recon.find("x,f_true,f_hat,g2_true,g2_hat") != std::string::npos);

  const auto sweep_out = scratch("sweep");
  auto sweep = quick_config();
  sweep.H = {0.9};
  sweep.delta = {0.001, 0.005, 0.01, 0.05, 0.1};
  const auto sweep_rows = cmd_experiment(sweep, sweep_out, log);
  CHECK(sweep_rows.size() == 5);
  std::ifstream is(sweep_out / "summary.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == summary_header());
  std::size_t n = 0;
  while (std::getline(is, line)) ++n;
  CHECK(n == 5);
}

TEST_CASE("summary header does not depend on the config", "[cli]") {
  auto a = quick_config();
  auto b = quick_config();
  b.H = {0.3};
  b.kernel_paths = 50;
  b.solver = "spectral";
  std::ostringstream log;
  const auto da = scratch("header_a"), db = scratch("header_b");
  cmd_experiment(a, da, log);
  cmd_experiment(b, db, log);
  auto first_line = [](const fs::path& p) {
    std::ifstream is(p);
    std::string l;
    std::getline(is, l);
    return l;
  };
  CHECK(first_line(da / "summary.csv") == first_line(db / "summary.csv"));
}

TEST_CASE("moments round trip through CSV", "[cli]") {
  const auto dir = scratch("moments");
  EnsembleMoments m;
  m.M = 17;
  m.mean = {0.1, -2.5e-7, 1.0 / 3.0};
  m.std_err_mean = {1e-3, 2e-3, 3e-3};
  m.cov = SquareMatrix(3);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t l = 0; l < 3; ++l) m.cov(k, l) = 1.0 / (1.0 + k + l) + 1e-17 * k;
  m.hurst = 0.7;
  m.master_seed = 99;
  m.delta = 0.01;
  m.pollution_seed = 123456789012345ULL;
  m.solver = SolverKind::spectral;
  csv::write_moments(dir / "m.csv", m);
  const auto r = csv::read_moments(dir / "m.csv");
  CHECK(r.M == m.M);
  CHECK(r.mean == m.mean);
  CHECK(r.std_err_mean == m.std_err_mean);
  CHECK(r.cov == m.cov);
  CHECK(r.hurst == m.hurst);
  CHECK(r.master_seed == m.master_seed);
  CHECK(r.delta == m.delta);
  CHECK(r.pollution_seed == m.pollution_seed);
  CHECK(r.solver == m.solver);
}

TEST_CASE("command-line front end", "[cli]") {
  const auto out = scratch("binary");
  const std::string quick = " --n-t 512 --n-x 40 --N 5 --out " + out.string();
  CHECK(run_cli("simulate" + quick) == 0);
  CHECK(fs::exists(out / "field.csv"));
  CHECK(fs::exists(out / "coeffs.csv"));
  // h_t = 0.1 > h_x = pi/40 violates the Courant condition.
  CHECK(run_cli("simulate --n-t 10 --n-x 40 --N 5 --out " + out.string()) != 0);
  CHECK(run_cli("simulate --M 1" + quick) == 2);
  CHECK(run_cli("simulate --bogus 1" + quick) != 0);
  CHECK(run_cli("") != 0);

  {
    std::ofstream os(out / "run.cfg");
    os << "M = 4\nH = 0.7\nseed = 5\n";
  }
  const auto exp_dir = out / "exp";
  CHECK(run_cli("experiment --config " + (out / "run.cfg").string() + " --seed 6 --n-t 512 --n-x 40 --N 5 --out " +
                exp_dir.string()) == 0);
  const auto text = slurp(exp_dir / "summary.csv");
  CHECK(text.find("0.69999999999999996,0.001,4,5,512,40,1,fd,singular-quadrature,6,") != std::string::npos);
  CHECK(run_cli("kernels --H 0.5 --N 3" + quick.substr(quick.find(" --out"))) == 0);
  CHECK(fs::exists(out / "H0.5" / "ekl.csv"));
  CHECK(run_cli("fbm --paths 2 --n-t 64" + quick.substr(quick.find(" --out"))) == 0);
  CHECK(fs::exists(out / "H0.9" / "path_1.csv"));
}
