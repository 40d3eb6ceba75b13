#include "quintnet/taylor.hpp"

#include "quintnet/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace quintnet {

namespace {

double factorial(unsigned n) {
  double f = 1.0;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return std::round(r);
}

// One-dimensional factor of the bump target and its derivatives.
double bump_factor(unsigned order, double x) {
  switch (order) {
    case 0: return 16.0 * x * x * (1.0 - x) * (1.0 - x);
    case 1: return 16.0 * (2.0 * x - 6.0 * x * x + 4.0 * x * x * x);
    case 2: return 16.0 * (2.0 - 12.0 * x + 12.0 * x * x);
    case 3: return 16.0 * (-12.0 + 24.0 * x);
    case 4: return 16.0 * 24.0;
    default: return 0.0;
  }
}

}  // namespace

SmoothTarget catalog_target(const std::string& name, std::size_t d) {
  if (d < 1) throw std::invalid_argument("catalog_target: d must be >= 1");
  SmoothTarget t;
  t.name = name;
  t.d = d;
  if (name == "zero") {
    t.beta = 2.0;
    t.K = 1.0;
    t.value = [](std::span<const double>) { return 0.0; };
    t.partial = [](std::span<const unsigned>, std::span<const double>) { return 0.0; };
    return t;
  }
  if (name == "product" || name == "linear") {
    if (name == "linear" && d != 1)
      throw std::invalid_argument("catalog_target: 'linear' is the d=1 product");
    t.beta = 2.0;
    t.K = (d == 1) ? 2.0 : 3.0;
    t.value = [](std::span<const double> x) {
      double p = 1.0;
      for (double v : x) p *= v;
      return p;
    };
    t.partial = [](std::span<const unsigned> alpha, std::span<const double> x) {
      double p = 1.0;
      for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (alpha[j] >= 2) return 0.0;
        if (alpha[j] == 0) p *= x[j];
      }
      return p;
    };
    return t;
  }
  if (name == "sumsq") {
    t.beta = 2.0;
    t.K = 2.0;
    t.value = [d](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s / (2.0 * d);
    };
    t.partial = [d](std::span<const unsigned> alpha, std::span<const double> x) {
      unsigned total = 0;
      int axis = -1;
      for (std::size_t j = 0; j < alpha.size(); ++j) {
        total += alpha[j];
        if (alpha[j] > 0) axis = static_cast<int>(j);
      }
      if (total == 0) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s / (2.0 * d);
      }
      if (total == 1) return x[axis] / d;
      if (total == 2 && alpha[axis] == 2) return 1.0 / d;
      return 0.0;
    };
    return t;
  }
  if (name == "bump") {
    t.beta = 2.0;
    t.K = 5.0;
    t.value = [](std::span<const double> x) {
      double p = 1.0;
      for (double v : x) p *= bump_factor(0, v);
      return p;
    };
    t.partial = [](std::span<const unsigned> alpha, std::span<const double> x) {
      double p = 1.0;
      for (std::size_t j = 0; j < alpha.size(); ++j) p *= bump_factor(alpha[j], x[j]);
      return p;
    };
    return t;
  }
  throw std::invalid_argument("catalog_target: unknown target '" + name + "'");
}

std::vector<std::string> catalog_names() { return {"zero", "linear", "product", "sumsq", "bump"}; }

ApproxConfig derive_config(std::size_t d, double beta, double K, std::size_t N, unsigned m) {
  if (d < 1) throw std::invalid_argument("derive_config: d must be >= 1");
  if (!(beta > 0)) throw std::invalid_argument("derive_config: beta must be positive");
  if (!(K > 0)) throw std::invalid_argument("derive_config: K must be positive");
  if (N < 1) throw std::invalid_argument("derive_config: N must be >= 1");
  if (m < 1) throw std::invalid_argument("derive_config: m must be >= 1");

  ApproxConfig cfg;
  cfg.d = d;
  cfg.beta = beta;
  cfg.K = K;
  cfg.N = N;
  cfg.m = m;

  unsigned nu = 1;
  for (;; ++nu) {
    if (nu > 40) throw std::invalid_argument("derive_config: N too large");
    long double cand = std::pow(static_cast<long double>((1ull << nu) + 1), static_cast<long double>(d));
    if (cand >= static_cast<long double>(N)) break;
  }
  cfg.nu = nu;
  cfg.M = std::size_t{1} << nu;
  std::size_t ntilde = 1;
  for (std::size_t j = 0; j < d; ++j) ntilde *= cfg.M + 1;
  cfg.N_tilde = ntilde;

  const double e_d = std::exp(static_cast<double>(d));
  cfg.B = static_cast<long long>(std::floor(2.0 * K * e_d));
  if (cfg.B < 1) throw std::invalid_argument("derive_config: floor(2 K e^d) must be >= 1");

  const double quant_scale =
      static_cast<double>(cfg.B) * std::pow(2.0, beta * nu) * std::pow(beta + 1.0, static_cast<double>(d));
  unsigned b = 0;
  while (std::ldexp(1.0, static_cast<int>(b)) < quant_scale) {
    ++b;
    if (b > 62) throw std::invalid_argument("derive_config: quantization exponent b out of range");
  }
  cfg.b = b;
  cfg.delta = std::max<unsigned>(static_cast<unsigned>(nu * d + 1), b);
  if (cfg.delta > 62) throw std::invalid_argument("derive_config: delta out of range");
  cfg.D = static_cast<double>(cfg.M) + std::pow(beta * (cfg.M + 1), static_cast<double>(d));

  const double thr_beta = std::pow(beta + 1.0, static_cast<double>(d));
  const double thr_ball = (K + 1.0) * e_d;
  if (static_cast<double>(N) < thr_beta) {
    cfg.precondition_ok = false;
    cfg.precondition_error = "N >= (beta+1)^d fails: N = " + std::to_string(N) +
                             " < " + std::to_string(thr_beta);
  } else if (static_cast<double>(N) < thr_ball) {
    cfg.precondition_ok = false;
    cfg.precondition_error = "N >= (K+1)e^d fails: N = " + std::to_string(N) +
                             " < " + std::to_string(thr_ball);
  } else {
    cfg.precondition_ok = true;
  }
  return cfg;
}

ApproxConfig make_config(const SmoothTarget& target, std::size_t N, unsigned m) {
  ApproxConfig cfg = derive_config(target.d, target.beta, target.K, N, m);
  if (!cfg.precondition_ok) throw std::invalid_argument("make_config: " + cfg.precondition_error);
  return cfg;
}

std::vector<std::vector<std::size_t>> grid_indices(const ApproxConfig& cfg) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> ell(cfg.d, 0);
  for (;;) {
    out.push_back(ell);
    std::size_t axis = cfg.d;
    while (axis > 0) {
      --axis;
      if (ell[axis] < cfg.M) {
        ++ell[axis];
        std::fill(ell.begin() + static_cast<std::ptrdiff_t>(axis) + 1, ell.end(), 0);
        break;
      }
      if (axis == 0) return out;
    }
  }
}

std::vector<Dyadic> grid_anchor(const ApproxConfig& cfg, std::span<const std::size_t> ell) {
  if (ell.size() != cfg.d) throw std::invalid_argument("grid_anchor: index has wrong dimension");
  std::vector<Dyadic> a;
  a.reserve(cfg.d);
  for (std::size_t v : ell) {
    if (v > cfg.M) throw std::invalid_argument("grid_anchor: index exceeds M");
    a.push_back(Dyadic::from_parts(static_cast<long long>(v), cfg.nu));
  }
  return a;
}

std::vector<std::vector<Dyadic>> grid_points(const ApproxConfig& cfg) {
  std::vector<std::vector<Dyadic>> pts;
  for (const auto& ell : grid_indices(cfg)) pts.push_back(grid_anchor(cfg, ell));
  return pts;
}

namespace {

// floor(value / divisor) over exact dyadic value and positive integer divisor.
long long floor_div_dyadic(const Dyadic& value, long long divisor) {
  using Mantissa = Dyadic::Mantissa;
  Mantissa num = value.mantissa();
  Mantissa den = Mantissa(divisor) << value.exponent();
  Mantissa q = num / den;
  if (num.sign() < 0 && q * den != num) --q;
  return q.convert_to<long long>();
}

}  // namespace

QuantizedPolynomial quantize_taylor(const SmoothTarget& target, const ApproxConfig& cfg,
                                    std::span<const std::size_t> ell) {
  QuantizedPolynomial poly;
  poly.anchor = grid_anchor(cfg, ell);
  std::vector<double> a(cfg.d);
  for (std::size_t j = 0; j < cfg.d; ++j) a[j] = to_double(poly.anchor[j]);  // exact

  const auto gammas = multi_indices(cfg.d, cfg.beta);
  poly.coeffs.reserve(gammas.size());
  for (const auto& gamma : gammas) {
    // c_{a,gamma} = sum over alpha >= gamma of
    //   (d^alpha f)(a) / alpha! * prod_j binom(alpha_j, gamma_j) (-a_j)^(alpha_j - gamma_j)
    double c = 0.0;
    for (const auto& alpha : gammas) {
      bool dominates = true;
      for (std::size_t j = 0; j < cfg.d; ++j)
        if (alpha[j] < gamma[j]) { dominates = false; break; }
      if (!dominates) continue;
      double alpha_fact = 1.0;
      double basis = 1.0;
      for (std::size_t j = 0; j < cfg.d; ++j) {
        alpha_fact *= factorial(alpha[j]);
        basis *= binomial(alpha[j], gamma[j]) * std::pow(-a[j], static_cast<double>(alpha[j] - gamma[j]));
      }
      c += target.partial(alpha, a) / alpha_fact * basis;
    }

    if (!(std::abs(c) < static_cast<double>(cfg.B)))
      throw std::invalid_argument("quantize_taylor: coefficient " + std::to_string(c) +
                                  " outside (-B, B); target is not in the declared ball");

    QuantizedCoefficient qc;
    qc.gamma = gamma;
    qc.c = c;
    qc.k = floor_div_dyadic(scale_pow2(Dyadic::from_double(c), static_cast<int>(cfg.b)), cfg.B);
    qc.c_tilde = Dyadic::from_parts(Dyadic::Mantissa(qc.k) * cfg.B, cfg.b);
    poly.coeffs.push_back(std::move(qc));
  }
  return poly;
}

Dyadic hat_value(const ApproxConfig& cfg, std::span<const std::size_t> ell,
                 std::span<const Dyadic> x) {
  if (x.size() != cfg.d) throw std::invalid_argument("hat_value: point has wrong dimension");
  const auto anchor = grid_anchor(cfg, ell);
  Dyadic prod(1);
  for (std::size_t j = 0; j < cfg.d; ++j) {
    Dyadic tent = relu(Dyadic(1) - scale_pow2(abs(x[j] - anchor[j]), static_cast<int>(cfg.nu)));
    if (tent.is_zero()) return Dyadic();
    prod = prod * tent;
  }
  return prod;
}

namespace {

// Tent block: input (1, x, a) -> (1 - 2^nu |x - a|)_+ , exact.  The anchor
// column can be remapped to the 1-channel (a = 1) or dropped (a = 0).
QuintNet make_tent_block(unsigned nu) {
  std::vector<QuintMatrix> mats;
  QuintMatrix m0(3, 3);
  m0.set(0, 0, QuintWeight::PlusOne);
  m0.set(1, 1, QuintWeight::PlusOne);
  m0.set(1, 2, QuintWeight::MinusOne);
  m0.set(2, 1, QuintWeight::MinusOne);
  m0.set(2, 2, QuintWeight::PlusOne);
  mats.push_back(std::move(m0));
  QuintMatrix m1(2, 3);
  m1.set(0, 0, QuintWeight::PlusOne);
  m1.set(1, 1, QuintWeight::Two);
  m1.set(1, 2, QuintWeight::Two);
  mats.push_back(std::move(m1));
  for (unsigned j = 1; j < nu; ++j) {
    QuintMatrix m(2, 2);
    m.set(0, 0, QuintWeight::PlusOne);
    m.set(1, 1, QuintWeight::Two);
    mats.push_back(std::move(m));
  }
  QuintMatrix clip(1, 2);
  clip.set(0, 0, QuintWeight::PlusOne);
  clip.set(0, 1, QuintWeight::MinusOne);
  mats.push_back(std::move(clip));
  QuintMatrix sel(1, 1);
  sel.set(0, 0, QuintWeight::PlusOne);
  mats.push_back(std::move(sel));
  return QuintNet(std::move(mats), "tent");
}

int tent_anchor_source(const ApproxConfig& cfg, std::size_t ellv,
                       const std::map<std::uint64_t, std::size_t>& zindex) {
  if (ellv == 0) return -1;
  if (ellv == cfg.M) return 0;
  const std::uint64_t y = static_cast<std::uint64_t>(ellv) << (cfg.delta - cfg.nu);
  return static_cast<int>(zindex.at(y));
}

}  // namespace

QuintNet build_hat_net(const ApproxConfig& cfg, std::span<const std::size_t> ell) {
  if (ell.size() != cfg.d) throw std::invalid_argument("build_hat_net: index has wrong dimension");
  const std::size_t d = cfg.d;

  std::set<std::uint64_t> zset;
  for (std::size_t v : ell)
    if (v != 0 && v != cfg.M) zset.insert(static_cast<std::uint64_t>(v));
  std::vector<std::uint64_t> zlist(zset.begin(), zset.end());
  std::map<std::uint64_t, std::size_t> zindex;
  for (std::size_t i = 0; i < zlist.size(); ++i) zindex[zlist[i]] = 1 + d + i;

  const QuintNet tent = make_tent_block(cfg.nu);
  const QuintNet one = identity_net(1);
  std::vector<BlockSpec> blocks;
  if (d >= 2) blocks.push_back({&one, {0}});
  for (std::size_t j = 0; j < d; ++j) {
    int asrc;
    if (ell[j] == 0) asrc = -1;
    else if (ell[j] == cfg.M) asrc = 0;
    else asrc = static_cast<int>(zindex.at(static_cast<std::uint64_t>(ell[j])));
    blocks.push_back({&tent, {0, static_cast<int>(1 + j), asrc}});
  }
  QuintNet tents = concat_blocks(1 + d + zlist.size(), blocks, "hat_tents");

  QuintNet net = tents;
  if (!zlist.empty()) {
    ConstantPlan plan;
    plan.delta = cfg.nu;
    plan.targets = zlist;
    net = compose(build_const_net(plan, 1 + d), tents);
  }
  if (d >= 2) net = compose(net, build_mult_r(static_cast<unsigned>(d), cfg.m));

  std::string label = "hat";
  for (std::size_t v : ell) label += "_" + std::to_string(v);
  return QuintNet(net.matrices(), std::move(label));
}

QuantizedSurrogate::QuantizedSurrogate(const SmoothTarget& target, const ApproxConfig& cfg)
    : cfg_(cfg), ells_(grid_indices(cfg)) {
  polys_.reserve(ells_.size());
  for (const auto& ell : ells_) polys_.push_back(quantize_taylor(target, cfg, ell));
}

Dyadic QuantizedSurrogate::eval(std::span<const Dyadic> x) const {
  if (x.size() != cfg_.d) throw std::invalid_argument("QuantizedSurrogate::eval: wrong dimension");
  Dyadic total;
  for (std::size_t i = 0; i < ells_.size(); ++i) {
    Dyadic hat = hat_value(cfg_, ells_[i], x);
    if (hat.is_zero()) continue;
    Dyadic poly;
    for (const auto& qc : polys_[i].coeffs) {
      if (qc.k == 0) continue;
      Dyadic mono(1);
      for (std::size_t j = 0; j < cfg_.d; ++j)
        for (unsigned rep = 0; rep < qc.gamma[j]; ++rep) mono = mono * x[j];
      poly += qc.c_tilde * mono;
    }
    total += poly * hat;
  }
  return total;
}

Dyadic p_tilde_eval(const SmoothTarget& target, const ApproxConfig& cfg,
                    std::span<const Dyadic> x) {
  return QuantizedSurrogate(target, cfg).eval(x);
}

QuintNet assemble(const SmoothTarget& target, const ApproxConfig& cfg) {
  if (!cfg.precondition_ok) throw std::invalid_argument("assemble: " + cfg.precondition_error);
  const std::size_t d = cfg.d;
  const std::size_t M = cfg.M;
  const unsigned m = cfg.m;
  const auto gammas = multi_indices(d, cfg.beta);
  const std::size_t C = gammas.size();
  const auto ells = grid_indices(cfg);

  const std::string label =
      "ftilde_" + target.name + "_N" + std::to_string(cfg.N) + "_m" + std::to_string(m);

  std::vector<QuantizedPolynomial> polys;
  polys.reserve(ells.size());
  for (const auto& ell : ells) polys.push_back(quantize_taylor(target, cfg, ell));

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < polys.size(); ++i)
    for (const auto& qc : polys[i].coeffs)
      if (qc.k != 0) { active.push_back(i); break; }

  if (active.empty()) {
    // Every quantized coefficient vanished; the approximant is identically 0.
    std::vector<QuintMatrix> mats;
    mats.emplace_back(1, 1 + d);
    return QuintNet(std::move(mats), label);
  }
  const std::size_t A = active.size();

  // ---- constant channels ----------------------------------------------
  std::set<std::uint64_t> zset;
  for (std::size_t v = 1; v < M; ++v)
    zset.insert(static_cast<std::uint64_t>(v) << (cfg.delta - cfg.nu));
  std::set<std::uint64_t> czset;
  for (std::size_t i : active)
    for (const auto& qc : polys[i].coeffs)
      if (qc.k != 0)
        czset.insert(static_cast<std::uint64_t>(std::llabs(qc.k)) << (cfg.delta - cfg.b));
  zset.insert(czset.begin(), czset.end());
  std::vector<std::uint64_t> zlist(zset.begin(), zset.end());
  std::map<std::uint64_t, std::size_t> zindex;  // y -> channel in S0 output
  for (std::size_t i = 0; i < zlist.size(); ++i) zindex[zlist[i]] = 1 + d + i;

  ConstantPlan plan;
  plan.delta = cfg.delta;
  plan.targets = zlist;
  const QuintNet s0 = build_const_net(plan, 1 + d);

  // ---- S1: tents, monomial bank, coefficient-constant carries ----------
  const QuintNet one = identity_net(1);
  const QuintNet tent = make_tent_block(cfg.nu);
  const QuintNet mon = build_mon(d, cfg.beta, m);
  std::vector<std::uint64_t> czlist(czset.begin(), czset.end());
  std::map<std::uint64_t, std::size_t> zcch;  // y -> channel in S1 output
  {
    std::vector<BlockSpec> blocks;
    blocks.push_back({&one, {0}});
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t v = 0; v <= M; ++v)
        blocks.push_back({&tent, {0, static_cast<int>(1 + j), tent_anchor_source(cfg, v, zindex)}});
    std::vector<int> mon_map(1 + d);
    for (std::size_t j = 0; j <= d; ++j) mon_map[j] = static_cast<int>(j);
    blocks.push_back({&mon, mon_map});
    for (std::size_t i = 0; i < czlist.size(); ++i) {
      blocks.push_back({&one, {static_cast<int>(zindex.at(czlist[i]))}});
      zcch[czlist[i]] = 1 + d * (M + 1) + C + i;
    }
    const QuintNet s1 = concat_blocks(s0.output_width(), blocks, "stage_features");

    // ---- S2: coefficient-times-monomial products ----------------------
    const auto tent_channel = [&](std::size_t j, std::size_t v) {
      return 1 + j * (M + 1) + v;
    };
    const std::size_t head = 1 + d * (M + 1);  // one + tents, carried onward

    std::map<std::pair<std::uint64_t, std::size_t>, std::size_t> prodch;
    std::vector<std::pair<std::uint64_t, std::size_t>> prodkeys;
    for (std::size_t i : active)
      for (std::size_t g = 0; g < C; ++g) {
        const auto& qc = polys[i].coeffs[g];
        if (qc.k == 0) continue;
        const std::uint64_t y = static_cast<std::uint64_t>(std::llabs(qc.k)) << (cfg.delta - cfg.b);
        prodch.emplace(std::make_pair(y, g), 0);
      }
    for (auto& [key, ch] : prodch) {
      ch = head + prodkeys.size();
      prodkeys.push_back(key);
    }

    const QuintNet mult = build_mult(m);
    const QuintNet carry_head = identity_net(head);
    QuintNet s2 = [&] {
      std::vector<BlockSpec> blocks2;
      std::vector<int> head_map(head);
      for (std::size_t i = 0; i < head; ++i) head_map[i] = static_cast<int>(i);
      blocks2.push_back({&carry_head, std::move(head_map)});
      for (const auto& [y, g] : prodkeys) {
        if (g == 0) {
          blocks2.push_back({&one, {static_cast<int>(zcch.at(y))}});
        } else {
          blocks2.push_back({&mult,
                             {0, static_cast<int>(zcch.at(y)),
                              static_cast<int>(1 + d * (M + 1) + g)}});
        }
      }
      return concat_blocks(s1.output_width(), blocks2, "stage_products");
    }();

    // ---- S3: signed sums into Q^+/Q^- per active anchor ----------------
    QuintNet s3 = [&] {
      QuintMatrix q(head + 2 * A, s2.output_width());
      for (std::size_t i = 0; i < head; ++i) q.set(i, i, QuintWeight::PlusOne);
      for (std::size_t ai = 0; ai < A; ++ai) {
        const auto& poly = polys[active[ai]];
        for (std::size_t g = 0; g < C; ++g) {
          const auto& qc = poly.coeffs[g];
          if (qc.k == 0) continue;
          const std::uint64_t y = static_cast<std::uint64_t>(std::llabs(qc.k)) << (cfg.delta - cfg.b);
          const std::size_t col = prodch.at({y, g});
          q.set(head + 2 * ai + (qc.k > 0 ? 0 : 1), col, QuintWeight::PlusOne);
        }
      }
      std::vector<QuintMatrix> mats;
      mats.push_back(std::move(q));
      return QuintNet(std::move(mats), "stage_qsums");
    }();

    // ---- S4: hat products and the per-anchor multiplications -----------
    // Layouts: after s3, one at 0, tents unchanged, Q^+- at head + 2*ai.
    QuintNet chain = compose(compose(compose(s0, s1), s2), s3);

    std::size_t q_channel_base = 1;  // after the hat stage below (d >= 2)
    std::size_t hat_base = 0;
    if (d >= 2) {
      const QuintNet multd = build_mult_r(static_cast<unsigned>(d), m);
      std::vector<BlockSpec> blocks4;
      blocks4.push_back({&one, {0}});
      const QuintNet carry_q = identity_net(2 * A);
      std::vector<int> qmap(2 * A);
      for (std::size_t i = 0; i < 2 * A; ++i) qmap[i] = static_cast<int>(head + i);
      blocks4.push_back({&carry_q, std::move(qmap)});
      for (std::size_t ai = 0; ai < A; ++ai) {
        std::vector<int> hmap(1 + d);
        hmap[0] = 0;
        for (std::size_t j = 0; j < d; ++j)
          hmap[1 + j] = static_cast<int>(tent_channel(j, ells[active[ai]][j]));
        blocks4.push_back({&multd, std::move(hmap)});
      }
      chain = compose(chain, concat_blocks(chain.output_width(), blocks4, "stage_hats"));
      hat_base = 1 + 2 * A;
    }

    QuintNet s4b = [&] {
      const QuintNet mult_pair = build_mult(m);
      std::vector<BlockSpec> blocks5;
      for (std::size_t ai = 0; ai < A; ++ai) {
        int hat_ch;
        int qp_ch, qm_ch;
        if (d == 1) {
          hat_ch = static_cast<int>(tent_channel(0, ells[active[ai]][0]));
          qp_ch = static_cast<int>(head + 2 * ai);
          qm_ch = static_cast<int>(head + 2 * ai + 1);
        } else {
          hat_ch = static_cast<int>(hat_base + ai);
          qp_ch = static_cast<int>(q_channel_base + 2 * ai);
          qm_ch = static_cast<int>(q_channel_base + 2 * ai + 1);
        }
        blocks5.push_back({&mult_pair, {0, hat_ch, qp_ch}});
        blocks5.push_back({&mult_pair, {0, hat_ch, qm_ch}});
      }
      return concat_blocks(chain.output_width(), blocks5, "stage_scaled");
    }();
    chain = compose(chain, s4b);

    // ---- S5: multiply by B (Horner over its bits) and apply the signs --
    QuintNet s5 = [&] {
      const std::uint64_t B = static_cast<std::uint64_t>(cfg.B);
      unsigned tau = 0;
      while ((std::uint64_t{1} << tau) <= B) ++tau;  // bit count
      std::vector<QuintMatrix> mats;
      if (tau == 1) {
        QuintMatrix out(1, 2 * A);
        for (std::size_t ai = 0; ai < A; ++ai) {
          out.set(0, 2 * ai, QuintWeight::PlusOne);
          out.set(0, 2 * ai + 1, QuintWeight::MinusOne);
        }
        mats.push_back(std::move(out));
      } else {
        QuintMatrix m0(4, 2 * A);
        for (std::size_t ai = 0; ai < A; ++ai) {
          m0.set(0, 2 * ai, QuintWeight::PlusOne);
          m0.set(1, 2 * ai, QuintWeight::PlusOne);
          m0.set(2, 2 * ai + 1, QuintWeight::PlusOne);
          m0.set(3, 2 * ai + 1, QuintWeight::PlusOne);
        }
        mats.push_back(std::move(m0));
        // State (acc+, v+, acc-, v-); fold in bits tau-2 .. 0.
        for (unsigned bit = tau - 1; bit-- > 0;) {
          const bool set = (B >> bit) & 1;
          const bool last = (bit == 0);
          QuintMatrix h(last ? 2 : 4, 4);
          h.set(0, 0, QuintWeight::Two);
          if (set) h.set(0, 1, QuintWeight::PlusOne);
          if (!last) {
            h.set(1, 1, QuintWeight::PlusOne);
            h.set(2, 2, QuintWeight::Two);
            if (set) h.set(2, 3, QuintWeight::PlusOne);
            h.set(3, 3, QuintWeight::PlusOne);
          } else {
            h.set(1, 2, QuintWeight::Two);
            if (set) h.set(1, 3, QuintWeight::PlusOne);
          }
          mats.push_back(std::move(h));
        }
        QuintMatrix out(1, 2);
        out.set(0, 0, QuintWeight::PlusOne);
        out.set(0, 1, QuintWeight::MinusOne);
        mats.push_back(std::move(out));
      }
      return QuintNet(std::move(mats), "stage_rescale");
    }();
    chain = compose(chain, s5);
    return QuintNet(chain.matrices(), label);
  }
}

}  // namespace quintnet
