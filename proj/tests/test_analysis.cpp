#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "quintnet/analysis.hpp"
#include "quintnet/atoms.hpp"

#include <cmath>
#include <random>

using namespace quintnet;

namespace {

Dyadic dy(long long m, unsigned e) { return Dyadic::from_parts(m, e); }

}  // namespace

TEST_CASE("thm1 bound hand values") {
  // beta=1, d=1, m=1: ceil(log2(1 v 1)) = 0, so L = 8 + 6 = 14.
  const BoundReport r = thm1_bounds(1.0, 1, 1.0, 6, 1);
  CHECK(r.L == 14);
  // width 6(1+1)6 = 72.
  CHECK(r.width_bound == 72);
  // First error term halves when m -> m+1.
  const BoundReport r2 = thm1_bounds(1.0, 1, 1.0, 6, 2);
  const double term1_m1 = r.err_bound - 1.0 * 3.0 * std::pow(6.0, -1.0);
  const double term1_m2 = r2.err_bound - 1.0 * 3.0 * std::pow(6.0, -1.0);
  CHECK(term1_m2 == doctest::Approx(term1_m1 / 2).epsilon(1e-12));
  CHECK_THROWS_AS(thm1_bounds(1.0, 1, 1.0, 3, 1), std::invalid_argument);
}

TEST_CASE("thm2 bounds relate to thm1") {
  for (std::size_t N : {6, 16, 64}) {
    for (unsigned m : {1u, 4u, 9u}) {
      const BoundReport r = thm2_bounds(1.0, 1, 1.0, N, m);
      CHECK(r.L_tilde_bound >= 2.0 * r.L);  // 4 Delta >= 0
      // First-term constant ratio between the displays is 2^d.
      const double t1_thm1 = 3.0 * 3.0 * 6.0 * N * std::ldexp(1.0, -static_cast<int>(m));
      const double t2_thm2 = 3.0 * 3.0 * 12.0 * N * std::ldexp(1.0, -static_cast<int>(m));
      CHECK(t2_thm2 / t1_thm1 == doctest::Approx(2.0));
      CHECK(r.R_bound == doctest::Approx(2.0 * N));
    }
  }
}

TEST_CASE("count_networks against an independent recomputation") {
  using boost::multiprecision::cpp_int;
  // s = 0: the bound is the base itself.
  CHECK(count_networks(3, 4, 0).bound == cpp_int(5) * 4 * 16);
  // Hand value: L=1, p=2, s=1 -> (5*2*4)^2 = 1600.
  const CountResult hand = count_networks(1, 2, 1);
  CHECK(hand.bound == 1600);
  CHECK(hand.partial_sum == 41);  // 1 + 40

  std::mt19937_64 gen(61);
  std::uniform_int_distribution<std::size_t> dL(1, 40), dp(1, 50), ds(0, 60);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = dL(gen), p = dp(gen), s = ds(gen);
    const CountResult r = count_networks(L, p, s);
    // Independent oracle: naive repeated multiplication.
    const cpp_int base = cpp_int(5) * (L + 1) * p * p;
    cpp_int power = 1, sum = 0;
    for (std::size_t i = 0; i <= s; ++i) {
      sum += power;
      power *= base;
    }
    CHECK(r.bound == power);
    CHECK(r.partial_sum == sum);
    CHECK(r.partial_sum <= r.bound);
  }
}

TEST_CASE("oracle inequality hand values") {
  // 4 * (0.5 + 4*(18*10+72)/64 + 32*0.25*2 + 0.125) = 129.5
  CHECK(oracle_inequality(0.5, 10.0, 64, 2.0, 0.25, 0.125) == 129.5);
  // Degenerate inputs leave only the 72 term: 4*72 F^2/n.
  CHECK(oracle_inequality(0.0, 0.0, 100, 1.0, 0.0, 0.0) == 4.0 * 72.0 / 100.0);
  CHECK(oracle_inequality(0.0, 0.0, 10, 3.0, 0.0, 0.0) == 4.0 * 9.0 * 72.0 / 10.0);
  // Doubling n halves the entropy term exactly.
  const double a = oracle_inequality(0.0, 7.0, 50, 2.0, 0.0, 0.0);
  const double b = oracle_inequality(0.0, 7.0, 100, 2.0, 0.0, 0.0);
  CHECK(a == 2.0 * b);
  // 4 * (1 + 1*(18*4+72)/16 + 32*0.5*1 + 2) = 4 * (1 + 9 + 16 + 2) = 112
  CHECK(oracle_inequality(1.0, 4.0, 16, 1.0, 0.5, 2.0) == 112.0);
  // 4 * (0.25 + 0.25*(18*8+72)/8 + 32*1*0.5 + 0) = 4 * (0.25 + 6.75 + 16) = 92
  CHECK(oracle_inequality(0.25, 8.0, 8, 0.5, 1.0, 0.0) == 92.0);
  CHECK_THROWS_AS(oracle_inequality(-1.0, 0.0, 1, 1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(oracle_inequality(0.0, 0.0, 1, 1.0, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("sup_error basics") {
  // Identity against itself: zero error, deterministic argmax at the origin.
  const QuintNet pass = build_mult_r(1, 1);  // (1,x) -> x
  const auto zero = sup_error_exact(
      pass, [](std::span<const Dyadic> x) { return x[0]; }, 33, 1, true);
  CHECK(zero.exact_err == Dyadic(0));
  CHECK(zero.argmax == std::vector<double>{0.0});

  // Mult_8 against xy over the 129x129 grid.
  const QuintNet mult = build_mult(8);
  const auto res = sup_error_exact(
      mult, [](std::span<const Dyadic> x) { return x[0] * x[1]; }, 129, 2, true);
  CHECK(res.exact_err <= dy(1, 8));
  CHECK(res.exact_mode);

  // Run-to-run reproducibility of the argmax.
  const auto res2 = sup_error_exact(
      mult, [](std::span<const Dyadic> x) { return x[0] * x[1]; }, 129, 2, true);
  CHECK(res.argmax == res2.argmax);
  CHECK(res.float_err == res2.float_err);

  // Float mode agrees with the exact mode within float tolerance.
  const auto fres = sup_error_float(
      mult, [](std::span<const double> x) { return x[0] * x[1]; }, 129, 2, true);
  CHECK(std::abs(fres.float_err - res.float_err) <= 1e-12);

  CHECK_THROWS_AS(sup_error_float(
                      mult, [](std::span<const double>) { return 0.0; }, 100, 2, true),
                  std::invalid_argument);  // 99 is not a power of two
  CHECK_THROWS_AS(sup_error_float(
                      mult, [](std::span<const double>) { return 0.0; }, 33, 3, true),
                  std::invalid_argument);  // dimension mismatch
}

TEST_CASE("regression smoke run is deterministic and sane") {
  SmoothTarget target = catalog_target("linear", 1);
  target.beta = 1.0;
  target.K = 1.0;
  const std::vector<std::size_t> ns = {256, 512};
  const auto a = regression_simulate(target, 1.0, ns, 77, true, 2000);
  const auto b = regression_simulate(target, 1.0, ns, 77, true, 2000);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK_FALSE(a[i].skipped);
    CHECK(a[i].heldout_mse == b[i].heldout_mse);
    CHECK(a[i].N == static_cast<std::size_t>(std::ceil(std::pow(double(a[i].n), 1.0 / 3.0))));
    CHECK(a[i].m == static_cast<unsigned>(std::ceil(std::log2(double(a[i].n)))));
    CHECK(a[i].heldout_mse >= 0.0);
    CHECK(a[i].heldout_mse < 1.0);
  }
  // Noise-free variant: same plug-in estimator, same held-out stream.
  const auto nf = regression_simulate(target, 1.0, ns, 77, false, 2000);
  CHECK(nf[0].heldout_mse == a[0].heldout_mse);

  CHECK_THROWS_AS(regression_simulate(target, 0.5, ns, 1, true, 10), std::invalid_argument);
}

TEST_CASE("assembled net counting is finite and consistent") {
  const SmoothTarget t = catalog_target("sumsq", 1);
  const ApproxConfig cfg = make_config(t, 9, 2);
  const QuintNet net = assemble(t, cfg);
  const NetStats s = stats(net);
  const CountResult r = count_networks(s.depth, s.max_width, s.l0);
  CHECK(r.bound > 0);
  const double expected_log2 =
      (static_cast<double>(s.l0) + 1) *
      std::log2(5.0 * (s.depth + 1) * s.max_width * s.max_width);
  CHECK(r.log2_bound == doctest::Approx(expected_log2).epsilon(1e-9));
  CHECK(boost::multiprecision::msb(r.bound) <= expected_log2 + 1);
}
