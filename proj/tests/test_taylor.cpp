#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "quintnet/analysis.hpp"
#include "quintnet/atoms.hpp"
#include "quintnet/taylor.hpp"

#include <cmath>
#include <random>

using namespace quintnet;

namespace {

Dyadic dy(long long m, unsigned e) { return Dyadic::from_parts(m, e); }

Dyadic random_unit_dyadic(std::mt19937_64& gen, unsigned e = 10) {
  std::uniform_int_distribution<long long> mant(0, 1ll << e);
  return dy(mant(gen), e);
}

}  // namespace

TEST_CASE("catalog targets match finite differences") {
  std::mt19937_64 gen(51);
  std::uniform_real_distribution<double> unif(0.1, 0.9);
  const double h = 1e-5;
  for (const std::string& name : {"product", "sumsq", "bump"}) {
    for (std::size_t d : {std::size_t{1}, std::size_t{2}}) {
      const SmoothTarget t = catalog_target(name == "product" && d == 1 ? "linear" : name, d);
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(d);
        for (auto& v : x) v = unif(gen);
        for (std::size_t j = 0; j < d; ++j) {
          std::vector<unsigned> alpha(d, 0);
          alpha[j] = 1;
          std::vector<double> hi = x, lo = x;
          hi[j] += h;
          lo[j] -= h;
          const double fd = (t.value(hi) - t.value(lo)) / (2 * h);
          const double an = t.partial(alpha, x);
          CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(an)));
        }
      }
    }
  }
}

TEST_CASE("derive_config reproduces the hand-derived constants") {
  // d=1, K=1: smallest 2^nu+1 >= 3 is 3, so M = 2; B = floor(2e) = 5;
  // beta=1: 2^b >= 5*2*2 = 20 gives b=5; Delta = max(1*1+1, 5) = 5.
  const ApproxConfig cfg = derive_config(1, 1.0, 1.0, 3, 4);
  CHECK(cfg.N_tilde == 3);
  CHECK(cfg.nu == 1);
  CHECK(cfg.M == 2);
  CHECK(cfg.B == 5);
  CHECK(cfg.b == 5);
  CHECK(cfg.delta == 5);
  CHECK_FALSE(cfg.precondition_ok);  // N = 3 < (K+1)e

  SmoothTarget t = catalog_target("linear", 1);
  t.K = 4.0;
  CHECK_THROWS_AS(make_config(t, 3, 4), std::invalid_argument);
  const ApproxConfig ok = make_config(t, 16, 6);
  CHECK(ok.precondition_ok);
  CHECK(ok.N_tilde == 17);
  CHECK(ok.M == 16);
}

TEST_CASE("grid points") {
  const ApproxConfig cfg = derive_config(1, 1.0, 1.0, 3, 4);
  const auto pts = grid_points(cfg);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0][0] == Dyadic(0));
  CHECK(pts[1][0] == dy(1, 1));
  CHECK(pts[2][0] == Dyadic(1));

  const ApproxConfig cfg2 = derive_config(2, 1.0, 1.0, 9, 4);
  CHECK(cfg2.M == 2);
  CHECK(grid_points(cfg2).size() == 9);
  for (const auto& p : grid_points(cfg2))
    for (const auto& c : p) CHECK(c.exponent() <= cfg2.nu);
}

TEST_CASE("quantization floor example") {
  // c = 0.3, B = 5, b = 5: k = floor(0.3 * 32 / 5) = 1, c~ = 5/32.
  SmoothTarget t;
  t.name = "const03";
  t.d = 1;
  t.beta = 1.0;
  t.K = 1.0;
  t.value = [](std::span<const double>) { return 0.3; };
  t.partial = [](std::span<const unsigned> a, std::span<const double>) {
    return (a[0] == 0) ? 0.3 : 0.0;
  };
  ApproxConfig cfg = derive_config(1, 1.0, 1.0, 3, 4);
  REQUIRE(cfg.B == 5);
  REQUIRE(cfg.b == 5);
  const std::vector<std::size_t> ell = {0};
  const QuantizedPolynomial poly = quantize_taylor(t, cfg, ell);
  REQUIRE(poly.coeffs.size() == 1);
  CHECK(poly.coeffs[0].k == 1);
  CHECK(poly.coeffs[0].c_tilde == dy(5, 5));
}

TEST_CASE("quantization errors are within B/2^b per coefficient and M^-beta in total") {
  for (const std::string& name : {std::string("linear"), std::string("sumsq"), std::string("bump")}) {
    const SmoothTarget t = catalog_target(name, 1);
    const ApproxConfig cfg = make_config(t, 17, 4);
    const Dyadic per_coeff = dy(cfg.B, cfg.b);
    // M^-beta with integer beta: exact dyadic.
    REQUIRE(t.beta == 2.0);
    const Dyadic aggregate = dy(1, 2 * cfg.nu);
    for (const auto& ell : grid_indices(cfg)) {
      const QuantizedPolynomial poly = quantize_taylor(t, cfg, ell);
      Dyadic total;
      for (const auto& qc : poly.coeffs) {
        const Dyadic gap = Dyadic::from_double(qc.c) - qc.c_tilde;
        CHECK(!gap.is_negative());  // floor quantization
        CHECK(gap < per_coeff);
        total += gap;
      }
      CHECK(total <= aggregate);
      // Zero coefficients stay exactly on the grid point 0.
      for (const auto& qc : poly.coeffs)
        if (qc.c == 0.0) CHECK(qc.c_tilde == Dyadic(0));
    }
  }
}

TEST_CASE("hat oracle values") {
  const ApproxConfig cfg = derive_config(1, 1.0, 1.0, 3, 4);  // M = 2
  const std::vector<std::size_t> mid = {1};                   // anchor 1/2
  // x = 0.3 (the binary64 value): hat = 1 - 2|0.3 - 0.5|, converts to 0.6.
  const Dyadic x = Dyadic::from_double(0.3);
  CHECK(to_double(hat_value(cfg, mid, std::vector<Dyadic>{x})) == 0.6);
  // Peak at the anchor.
  CHECK(hat_value(cfg, mid, std::vector<Dyadic>{dy(1, 1)}) == Dyadic(1));
  // Partition of unity at x = 0.3 across the three anchors.
  Dyadic sum;
  for (const auto& ell : grid_indices(cfg)) sum += hat_value(cfg, ell, std::vector<Dyadic>{x});
  CHECK(sum == Dyadic(1));
}

TEST_CASE("partition of unity at random dyadic points") {
  std::mt19937_64 gen(52);
  for (std::size_t d : {std::size_t{1}, std::size_t{2}}) {
    const ApproxConfig cfg = derive_config(d, 1.0, 1.0, d == 1 ? 5 : 25, 4);
    REQUIRE(cfg.M == 4);
    const auto ells = grid_indices(cfg);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<Dyadic> x;
      for (std::size_t j = 0; j < d; ++j) x.push_back(random_unit_dyadic(gen));
      Dyadic sum;
      for (const auto& ell : ells) sum += hat_value(cfg, ell, x);
      CHECK(sum == Dyadic(1));
    }
  }
}

TEST_CASE("hat net is exact for d = 1") {
  const ApproxConfig cfg = derive_config(1, 1.0, 1.0, 5, 6);  // M = 4
  for (const auto& ell : grid_indices(cfg)) {
    const QuintNet net = build_hat_net(cfg, ell);
    CHECK(validate(net).ok);
    const Evaluator ev(net);
    for (int i = 0; i <= 64; ++i) {
      const Dyadic x = dy(i, 6);
      CHECK(ev.exact(std::vector<Dyadic>{Dyadic(1), x})[0] ==
            hat_value(cfg, ell, std::vector<Dyadic>{x}));
    }
  }
}

TEST_CASE("hat net error for d = 2 stays within the product bound") {
  ApproxConfig cfg = derive_config(2, 1.0, 1.0, 25, 8);  // M = 4, m = 8
  const std::vector<std::size_t> ell = {1, 3};
  const QuintNet net = build_hat_net(cfg, ell);
  CHECK(validate(net).ok);
  const Evaluator ev(net);
  const Dyadic bound = dy(4, 8);  // d^2 2^-m = 4 * 2^-8
  for (int ix = 0; ix <= 32; ++ix)
    for (int iy = 0; iy <= 32; ++iy) {
      const std::vector<Dyadic> x = {dy(ix, 5), dy(iy, 5)};
      const auto out = ev.exact(std::vector<Dyadic>{Dyadic(1), x[0], x[1]});
      CHECK(abs(out[0] - hat_value(cfg, ell, x)) <= bound);
    }
}

TEST_CASE("surrogate properties") {
  // Zero target: the surrogate vanishes identically.
  const SmoothTarget zero = catalog_target("zero", 1);
  const ApproxConfig zcfg = make_config(zero, 6, 4);
  const QuantizedSurrogate zs(zero, zcfg);
  std::mt19937_64 gen(53);
  for (int i = 0; i < 50; ++i)
    CHECK(zs.eval(std::vector<Dyadic>{random_unit_dyadic(gen)}).is_zero());

  // sup |P~ f - f| <= (K+1) M^-beta over a dyadic grid, for catalog targets.
  for (const std::string& name : {std::string("linear"), std::string("sumsq")}) {
    const SmoothTarget t = catalog_target(name, 1);
    const ApproxConfig cfg = make_config(t, 17, 6);
    const QuantizedSurrogate s(t, cfg);
    const double bound = (t.K + 1.0) * std::pow(static_cast<double>(cfg.M), -t.beta);
    for (int i = 0; i <= 256; ++i) {
      const Dyadic x = dy(i, 8);
      const double fx = t.value(std::vector<double>{to_double(x)});
      CHECK(std::abs(to_double(s.eval(std::vector<Dyadic>{x})) - fx) <= bound);
    }
  }

  // At a grid anchor only the local polynomial contributes.
  const SmoothTarget t = catalog_target("sumsq", 1);
  const ApproxConfig cfg = make_config(t, 17, 6);
  const QuantizedSurrogate s(t, cfg);
  const auto ells = grid_indices(cfg);
  const QuantizedPolynomial poly = quantize_taylor(t, cfg, ells[3]);
  const Dyadic a = poly.anchor[0];
  Dyadic local;
  for (const auto& qc : poly.coeffs) {
    Dyadic mono(1);
    for (unsigned rep = 0; rep < qc.gamma[0]; ++rep) mono = mono * a;
    local += qc.c_tilde * mono;
  }
  CHECK(s.eval(std::vector<Dyadic>{a}) == local);
}

TEST_CASE("assemble: zero target gives the zero function") {
  const SmoothTarget zero = catalog_target("zero", 1);
  const ApproxConfig cfg = make_config(zero, 6, 4);
  const QuintNet net = assemble(zero, cfg);
  CHECK(validate(net).ok);
  std::mt19937_64 gen(54);
  for (int i = 0; i < 50; ++i) {
    const auto out = eval_exact(net, std::vector<Dyadic>{Dyadic(1), random_unit_dyadic(gen)});
    CHECK(out[0].is_zero());
  }
}

TEST_CASE("assemble: linear target meets the bound and stays within 0.1") {
  SmoothTarget t = catalog_target("linear", 1);
  t.K = 4.0;
  const ApproxConfig cfg = make_config(t, 16, 10);
  const QuintNet net = assemble(t, cfg);
  CHECK(validate(net).ok);

  const auto res = sup_error_float(
      net, [&](std::span<const double> x) { return t.value(x); }, 1025, 1, true);
  const BoundReport bounds = thm2_bounds(t.beta, t.d, t.K, cfg.N, cfg.m);
  CHECK(res.float_err <= bounds.err_tilde_bound);
  CHECK(res.float_err <= 0.1);

  const StructureCheck sc = check_structure(net, cfg);
  CHECK(sc.depth_ok);
  CHECK(sc.width_ok);
  CHECK(sc.sparsity_ok);
}

TEST_CASE("assemble: network against the exact surrogate") {
  const SmoothTarget t = catalog_target("sumsq", 1);
  const ApproxConfig cfg = make_config(t, 9, 6);
  const QuintNet net = assemble(t, cfg);
  const QuantizedSurrogate s(t, cfg);
  const Evaluator ev(net);
  const BoundReport bounds = thm2_bounds(t.beta, t.d, t.K, cfg.N, cfg.m);
  const double net_half = (2 * t.K + 1) * (1 + 1 + t.beta * t.beta) * 12.0 * cfg.N *
                          std::ldexp(1.0, -static_cast<int>(cfg.m));
  Dyadic worst;
  for (int i = 0; i <= 128; ++i) {
    const Dyadic x = dy(i, 7);
    const Dyadic gap = abs(ev.exact(std::vector<Dyadic>{Dyadic(1), x})[0] -
                           s.eval(std::vector<Dyadic>{x}));
    if (worst < gap) worst = gap;
  }
  CHECK(to_double(worst) <= net_half);
  CHECK(to_double(worst) <= bounds.err_tilde_bound);
}
