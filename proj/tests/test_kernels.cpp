#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fbmwave/kernels.hpp"
#include "fbmwave/time_grid.hpp"
#include "test_support.hpp"

using namespace fbmwave;
using Catch::Approx;

namespace {

std::vector<double> constant_h(std::size_t n_t, double T, double c = 1.0) {
  return TimeGrid(n_t, T).sample([c](double) { return c; });
}

double ekl_oracle(std::size_t k, std::size_t l, double T) {
  return testing::quad([&](double tau) { return wave_kernel(k, T - tau) * wave_kernel(l, T - tau); }, 0.0, T);
}

}  // namespace

TEST_CASE("wave kernel bound", "[kernels][property]") {
  for (std::size_t k = 1; k <= 30; ++k)
    for (double t = 0.0; t <= 3.0; t += 0.01) CHECK(std::abs(wave_kernel(k, t)) <= std::min(t, 1.0 / k) + 1e-15);
}

TEST_CASE("compute_hk", "[kernels]") {
  const auto h = constant_h(8192, 1.0);
  CHECK(compute_hk(h, 1, 1.0) == Approx(1.0 - std::cos(1.0)).margin(1e-8));
  CHECK(compute_hk(h, 1, 1.0) == Approx(0.459698).margin(1e-6));
  CHECK(compute_hk(h, 2, 1.0) == Approx(0.708073).margin(1e-6));
  CHECK(compute_hk(h, 3, 1.0) == Approx(0.663331).margin(1e-6));
  const double q = testing::quad([](double tau) { return std::sin(2.0 * (1.0 - tau)); }, 0.0, 1.0);
  CHECK(compute_hk(h, 2, 1.0) == Approx(q).margin(1e-8));

  CHECK(compute_hk(constant_h(100, 1.0, 0.0), 4, 1.0) == 0.0);

  auto bad = constant_h(100, 1.0);
  bad[10] = -1.0;
  std::vector<std::string> warnings;
  const double v = compute_hk(bad, 1, 1.0, &warnings);
  CHECK(std::isfinite(v));
  CHECK(warnings.size() == 1);
}

TEST_CASE("ekl_white matches direct quadrature", "[kernels]") {
  CHECK(ekl_white(1, 1, 1.0) == Approx(0.5 * (1.0 - std::sin(2.0) / 2.0)));
  CHECK(ekl_white(1, 1, 1.0) == Approx(0.272676).margin(1e-6));
  CHECK(ekl_white(2, 1, 1.0) == Approx(0.198609).margin(1e-6));
  for (std::size_t k = 1; k <= 6; ++k)
    for (std::size_t l = 1; l <= 6; ++l)
      for (double T : {0.7, 1.0, 2.3}) CHECK(ekl_white(k, l, T) == Approx(ekl_oracle(k, l, T)).margin(1e-12));
  for (std::size_t k = 1; k <= 40; ++k)
    for (double T : {0.01, 0.5, 1.0, std::numbers::pi, 10.0}) CHECK(ekl_white(k, k, T) > 0.0);
}

TEST_CASE("ekl_white is nonzero off the diagonal at T = 1", "[kernels]") {
  for (std::size_t k = 1; k <= 20; ++k)
    for (std::size_t l = 1; l <= 20; ++l) CHECK(std::abs(ekl_white(k, l, 1.0)) > 1e-6);
}

TEST_CASE("singular covariance against exact fBm moments", "[kernels]") {
  const auto one = [](double) { return 1.0; };
  const auto ramp = [](double r) { return r; };
  for (double H : {0.55, 0.75, 0.9}) {
    const HurstIndex h(H);
    for (double T : {0.5, 1.0, 2.0}) {
      // E[B(T)^2] and E[(int r dB) B(T)] = T^{2H+1}/2.
      CHECK(singular_covariance(one, one, T, h, 32) == Approx(std::pow(T, 2 * H)).epsilon(1e-8));
      CHECK(singular_covariance(ramp, one, T, h, 32) == Approx(0.5 * std::pow(T, 2 * H + 1)).epsilon(1e-8));
    }
  }
  const auto zero = [](double) { return 0.0; };
  CHECK(singular_covariance([](double r) { return std::sin(r); }, zero, 1.0, HurstIndex(0.75), 16) == 0.0);
  CHECK_THROWS_AS(ekl_quadrature_highH(1, 1, 1.0, HurstIndex(0.5)), std::domain_error);
  CHECK_THROWS_AS(ekl_quadrature_highH(1, 1, 1.0, HurstIndex(0.3)), std::domain_error);
}

TEST_CASE("ekl_quadrature_highH", "[kernels]") {
  SECTION("continuity at H = 1/2") {
    CHECK(ekl_quadrature_highH(1, 1, 1.0, HurstIndex(0.501)) == Approx(ekl_white(1, 1, 1.0)).margin(1e-2));
  }
  SECTION("symmetric and convergent") {
    const HurstIndex h(0.9);
    for (std::size_t k = 1; k <= 9; k += 2)
      for (std::size_t l = k + 1; l <= 9; l += 3) {
        const double kl = ekl_quadrature_highH(k, l, 1.0, h);
        CHECK(kl == Approx(ekl_quadrature_highH(l, k, 1.0, h)).margin(1e-12));
        CHECK(kl == Approx(ekl_quadrature_highH(k, l, 1.0, h, 96)).margin(1e-9));
      }
  }
  SECTION("closed-form correlation matches the generic path") {
    for (double H : {0.6, 0.9})
      for (std::size_t k : {1, 4})
        for (std::size_t l : {1, 3, 7}) {
          const auto generic = singular_covariance([&](double r) { return wave_kernel(k, 1.3 - r); },
                                                   [&](double u) { return wave_kernel(l, 1.3 - u); }, 1.3,
                                                   HurstIndex(H), 48);
          CHECK(ekl_quadrature_highH(k, l, 1.3, HurstIndex(H)) == Approx(generic).margin(1e-10));
        }
  }
  SECTION("agrees with Monte Carlo at H = 0.75") {
    const HurstIndex h(0.75);
    const auto mc = ekl_monte_carlo(1, 1, 1.0, h, 4096, 10000, 99);
    CHECK(testing::within_sigmas(ekl_quadrature_highH(1, 1, 1.0, h), mc.estimate, mc.std_err));
  }
}

TEST_CASE("ekl_monte_carlo", "[kernels][statistics]") {
  SECTION("white noise against the closed form") {
    const auto table = ekl_monte_carlo_table(2, 1.0, HurstIndex(0.5), 8192, 10000, 4);
    CHECK(testing::within_sigmas(table.estimate(0, 0), 0.272676, table.std_err(0, 0)));
    CHECK(testing::within_sigmas(table.estimate(1, 0), 0.198609, table.std_err(1, 0)));
    CHECK(table.estimate(0, 1) == table.estimate(1, 0));
  }
  SECTION("one-step window") {
    const HurstIndex h(0.3);
    const auto est = ekl_monte_carlo(2, 2, 1.0, h, 1, 20000, 8);
    const double g = wave_kernel(2, 1.0);
    CHECK(testing::within_sigmas(est.estimate, g * g, est.std_err));
  }
  SECTION("unbiased at H = 1/2 across master seeds") {
    int covered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto est = ekl_monte_carlo(1, 1, 1.0, HurstIndex(0.5), 1024, 2000, 1000 + seed);
      if (std::abs(est.estimate - ekl_white(1, 1, 1.0)) <= 2.576 * est.std_err) ++covered;
    }
    CHECK(covered >= 18);
  }
  SECTION("worker count does not change the estimate") {
    const auto a = ekl_monte_carlo_table(3, 1.0, HurstIndex(0.3), 256, 200, 5, 1);
    const auto b = ekl_monte_carlo_table(3, 1.0, HurstIndex(0.3), 256, 200, 5, 3);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_err == b.std_err);
  }
  CHECK_THROWS_AS(ekl_monte_carlo(1, 1, 1.0, HurstIndex(0.5), 16, 1, 0), std::domain_error);
}

TEST_CASE("build_kernel_table", "[kernels]") {
  const auto h = constant_h(8192, 1.0);
  SECTION("Brownian case uses the closed form") {
    const auto t = build_kernel_table(h, 1.0, HurstIndex(0.5), 3);
    CHECK(t.ekl_method == EklMethod::closed_form);
    CHECK(t.hk[0] == Approx(0.459698).margin(1e-6));
    CHECK(t.hk[1] == Approx(0.708073).margin(1e-6));
    CHECK(t.hk[2] == Approx(0.663331).margin(1e-6));
    for (std::size_t k = 0; k < 3; ++k) CHECK(t.ekl(k, k) > 0.0);
    CHECK(t.ekl.is_symmetric(0.0));
    CHECK(t.small_ekl.empty());
    CHECK_FALSE(t.mc_std_err);
  }
  SECTION("N = 1") {
    const auto t = build_kernel_table(h, 1.0, HurstIndex(0.5), 1);
    CHECK(t.ekl.size() == 1);
    CHECK(t.hk.size() == 1);
  }
  SECTION("H > 1/2 uses singular quadrature") {
    const auto t = build_kernel_table(h, 1.0, HurstIndex(0.9), 9);
    CHECK(t.ekl_method == EklMethod::singular_quadrature);
    CHECK(t.ekl.is_symmetric(1e-9));
    REQUIRE(t.quad_error);
    CHECK(t.quad_error->max_abs() < 1e-8);
    for (std::size_t k = 0; k < 9; ++k) CHECK(t.ekl(k, k) > 0.0);
  }
  SECTION("H < 1/2 uses Monte Carlo with standard errors") {
    KernelOptions o;
    o.mc_paths = 500;
    o.mc_steps = 512;
    const auto t = build_kernel_table(constant_h(512, 1.0), 1.0, HurstIndex(0.3), 4, o);
    CHECK(t.ekl_method == EklMethod::monte_carlo);
    REQUIRE(t.mc_std_err);
    CHECK(t.mc_std_err->size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(t.ekl(k, k) > 0.0);
  }
  SECTION("small divisors are flagged") {
    const auto t = build_kernel_table(constant_h(100, 1.0, 0.0), 1.0, HurstIndex(0.5), 4);
    CHECK(t.small_hk == std::vector<std::size_t>{1, 2, 3, 4});
    // sin(m pi) = 0 for integer m, so every off-diagonal E_kl vanishes at T = pi.
    const auto u = build_kernel_table(constant_h(100, std::numbers::pi), std::numbers::pi, HurstIndex(0.5), 3);
    CHECK_FALSE(u.small_ekl.empty());
  }
  CHECK_THROWS_AS(build_kernel_table(h, 1.0, HurstIndex(0.5), 0), std::domain_error);
}

TEST_CASE("E_kk decays like lambda_k^-gamma for white noise", "[kernels]") {
  std::vector<double> x, y;
  for (std::size_t k = 1; k <= 30; ++k) {
    x.push_back(std::log(static_cast<double>(k * k)));
    y.push_back(std::log(ekl_white(k, k, 1.0)));
  }
  CHECK(testing::slope(x, y) <= -HurstIndex(0.5).gamma() + 0.15);
}
