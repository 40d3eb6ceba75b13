#include "quintnet/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <thread>

namespace quintnet {

namespace mp = boost::multiprecision;

namespace {

unsigned ceil_log2(double x) {
  unsigned c = 0;
  while (std::ldexp(1.0, static_cast<int>(c)) < x) ++c;
  return c;
}

}  // namespace

BoundReport thm1_bounds(double beta, std::size_t d, double K, std::size_t N, unsigned m) {
  if (!(beta > 0) || !(K > 0) || d < 1 || m < 1)
    throw std::invalid_argument("thm1_bounds: parameters out of range");
  const double thr = std::max(std::pow(beta + 1.0, static_cast<double>(d)),
                              (K + 1.0) * std::exp(static_cast<double>(d)));
  if (static_cast<double>(N) < thr)
    throw std::invalid_argument("thm1_bounds: N < (beta+1)^d v (K+1)e^d");

  BoundReport r;
  const unsigned log_term = ceil_log2(std::max<double>(static_cast<double>(d), beta));
  r.L = 8 + static_cast<long long>(m + 5) * (1 + log_term);
  r.width_bound = 6 * static_cast<long long>(d + static_cast<std::size_t>(std::ceil(beta))) *
                  static_cast<long long>(N);
  r.s_bound = 141.0 * std::pow(d + beta + 1.0, static_cast<double>(3 + d)) * N * (m + 6.0);
  r.err_bound = (2.0 * K + 1.0) * (1.0 + d * d + beta * beta) *
                    std::pow(6.0, static_cast<double>(d)) * N * std::ldexp(1.0, -static_cast<int>(m)) +
                K * std::pow(3.0, beta) * std::pow(static_cast<double>(N), -beta / d);
  return r;
}

BoundReport thm2_bounds(double beta, std::size_t d, double K, std::size_t N, unsigned m) {
  BoundReport r = thm1_bounds(beta, d, K, N, m);
  r.delta_bound = 2.0 * std::log2(std::pow(static_cast<double>(N), beta + d) * K *
                                  std::exp(static_cast<double>(d)));
  r.R_bound = std::pow(2.0 * beta, static_cast<double>(d)) * N;
  r.L_tilde_bound = 4.0 * r.delta_bound + 2.0 * r.L;
  const double pow2d = std::ldexp(1.0, static_cast<int>(d));
  r.width_tilde_bound =
      std::max(2.0 * (1 + d + r.R_bound + r.delta_bound), pow2d * r.width_bound);
  r.s_tilde_bound = (1 + d + r.R_bound + r.delta_bound) * r.L_tilde_bound + pow2d * r.s_bound;
  r.err_tilde_bound = (2.0 * K + 1.0) * (1.0 + d * d + beta * beta) *
                          std::pow(12.0, static_cast<double>(d)) * N *
                          std::ldexp(1.0, -static_cast<int>(m)) +
                      (K + 1.0) * std::pow(3.0, beta) * std::pow(static_cast<double>(N), -beta / d);
  return r;
}

StructureCheck check_structure(const QuintNet& net, const ApproxConfig& cfg) {
  StructureCheck c;
  c.actual = stats(net);
  c.bounds = thm2_bounds(cfg.beta, cfg.d, cfg.K, cfg.N, cfg.m);
  c.depth_ok = static_cast<double>(c.actual.depth) <= c.bounds.L_tilde_bound;
  c.width_ok = static_cast<double>(c.actual.max_width) <= c.bounds.width_tilde_bound;
  // The sparsity display is evaluated at the emitted net's own depth.
  const double s_budget =
      (1 + cfg.d + c.bounds.R_bound + c.bounds.delta_bound) * static_cast<double>(c.actual.depth) +
      std::ldexp(1.0, static_cast<int>(cfg.d)) * c.bounds.s_bound;
  c.sparsity_ok = static_cast<double>(c.actual.l0) <= s_budget;
  return c;
}

CountResult count_networks(std::size_t L, std::size_t p_max, std::size_t s) {
  if (p_max < 1) throw std::invalid_argument("count_networks: p_max must be >= 1");
  CountResult r;
  const mp::cpp_int base = mp::cpp_int(5) * (L + 1) * p_max * p_max;
  r.bound = mp::pow(base, static_cast<unsigned>(s + 1));
  r.partial_sum = (r.bound - 1) / (base - 1);
  r.log2_bound = static_cast<double>(s + 1) * std::log2(base.convert_to<double>());
  return r;
}

double oracle_inequality(double approx_err_sq, double cover_log2, std::size_t n, double F,
                         double delta, double Delta_n) {
  if (approx_err_sq < 0 || cover_log2 < 0 || F < 0 || Delta_n < 0)
    throw std::invalid_argument("oracle_inequality: negative input");
  if (delta < 0 || delta > 1) throw std::invalid_argument("oracle_inequality: delta outside [0,1]");
  if (n < 1) throw std::invalid_argument("oracle_inequality: n must be >= 1");
  return 4.0 * (approx_err_sq + F * F * (18.0 * cover_log2 + 72.0) / static_cast<double>(n) +
                32.0 * delta * F + Delta_n);
}

unsigned worker_threads() {
  if (const char* env = std::getenv("QUINTNET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 64));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return std::max(1u, std::min(hw, 8u));
}

namespace {

struct GridScan {
  std::size_t resolution;
  std::size_t dims;
  std::size_t denom_log2;
  std::size_t total;
};

GridScan make_scan(std::size_t resolution, std::size_t dims) {
  if (resolution < 2) throw std::invalid_argument("sup_error: resolution must be >= 2");
  const std::size_t steps = resolution - 1;
  if ((steps & (steps - 1)) != 0)
    throw std::invalid_argument("sup_error: resolution-1 must be a power of two (dyadic grid)");
  GridScan scan;
  scan.resolution = resolution;
  scan.dims = dims;
  scan.denom_log2 = static_cast<std::size_t>(std::countr_zero(steps));
  scan.total = 1;
  for (std::size_t j = 0; j < dims; ++j) scan.total *= resolution;
  return scan;
}

void decode(const GridScan& scan, std::size_t flat, std::vector<std::size_t>& out) {
  for (std::size_t j = scan.dims; j-- > 0;) {
    out[j] = flat % scan.resolution;
    flat /= scan.resolution;
  }
}

template <typename Body>
void run_chunks(std::size_t total, const Body& body) {
  const unsigned workers = std::min<std::size_t>(worker_threads(), total);
  if (workers <= 1) {
    body(0, total);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (total + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(total, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

SupErrorResult sup_error_exact(const QuintNet& net,
                               const std::function<Dyadic(std::span<const Dyadic>)>& oracle,
                               std::size_t resolution, std::size_t dims, bool prepend_one) {
  const GridScan scan = make_scan(resolution, dims);
  const std::size_t expect = dims + (prepend_one ? 1 : 0);
  if (net.input_width() != expect)
    throw std::invalid_argument("sup_error_exact: net expects " + std::to_string(net.input_width()) +
                                " inputs, grid provides " + std::to_string(expect));
  const Evaluator ev(net);

  const unsigned workers = std::min<std::size_t>(worker_threads(), scan.total);
  std::vector<Dyadic> best(workers);
  std::vector<std::size_t> best_at(workers, 0);
  const std::size_t chunk = (scan.total + workers - 1) / workers;
  run_chunks(scan.total, [&](std::size_t lo, std::size_t hi) {
    const std::size_t slot = lo / chunk;
    std::vector<std::size_t> idx(dims);
    std::vector<Dyadic> point(dims);
    std::vector<Dyadic> input(expect);
    if (prepend_one) input[0] = Dyadic(1);
    Dyadic local_best;
    std::size_t local_at = lo;
    for (std::size_t flat = lo; flat < hi; ++flat) {
      decode(scan, flat, idx);
      for (std::size_t j = 0; j < dims; ++j) {
        point[j] = Dyadic::from_parts(static_cast<long long>(idx[j]),
                                      static_cast<unsigned>(scan.denom_log2));
        input[j + (prepend_one ? 1 : 0)] = point[j];
      }
      const auto out = ev.exact(input);
      const Dyadic err = abs(out[0] - oracle(point));
      if (local_best < err) {
        local_best = err;
        local_at = flat;
      }
    }
    best[slot] = local_best;
    best_at[slot] = local_at;
  });

  SupErrorResult r;
  r.exact_mode = true;
  std::size_t at = 0;
  for (unsigned w = 0; w < workers; ++w) {
    if (r.exact_err < best[w]) {
      r.exact_err = best[w];
      at = best_at[w];
    }
  }
  r.float_err = to_double(r.exact_err);
  std::vector<std::size_t> idx(dims);
  decode(scan, at, idx);
  for (std::size_t j = 0; j < dims; ++j)
    r.argmax.push_back(std::ldexp(static_cast<double>(idx[j]), -static_cast<int>(scan.denom_log2)));
  return r;
}

SupErrorResult sup_error_float(const QuintNet& net,
                               const std::function<double(std::span<const double>)>& oracle,
                               std::size_t resolution, std::size_t dims, bool prepend_one) {
  const GridScan scan = make_scan(resolution, dims);
  const std::size_t expect = dims + (prepend_one ? 1 : 0);
  if (net.input_width() != expect)
    throw std::invalid_argument("sup_error_float: net expects " + std::to_string(net.input_width()) +
                                " inputs, grid provides " + std::to_string(expect));
  const Evaluator ev(net);

  const unsigned workers = std::min<std::size_t>(worker_threads(), scan.total);
  std::vector<double> best(workers, -1.0);
  std::vector<std::size_t> best_at(workers, 0);
  const std::size_t chunk = (scan.total + workers - 1) / workers;
  run_chunks(scan.total, [&](std::size_t lo, std::size_t hi) {
    const std::size_t slot = lo / chunk;
    std::vector<std::size_t> idx(dims);
    std::vector<double> point(dims);
    std::vector<double> input(expect);
    if (prepend_one) input[0] = 1.0;
    double local_best = -1.0;
    std::size_t local_at = lo;
    for (std::size_t flat = lo; flat < hi; ++flat) {
      decode(scan, flat, idx);
      for (std::size_t j = 0; j < dims; ++j) {
        point[j] = std::ldexp(static_cast<double>(idx[j]), -static_cast<int>(scan.denom_log2));
        input[j + (prepend_one ? 1 : 0)] = point[j];
      }
      const auto out = ev.floating(input);
      const double err = std::abs(out[0] - oracle(point));
      if (err > local_best) {
        local_best = err;
        local_at = flat;
      }
    }
    best[slot] = local_best;
    best_at[slot] = local_at;
  });

  SupErrorResult r;
  std::size_t at = 0;
  for (unsigned w = 0; w < workers; ++w) {
    if (best[w] > r.float_err) {
      r.float_err = best[w];
      at = best_at[w];
    }
  }
  std::vector<std::size_t> idx(dims);
  decode(scan, at, idx);
  for (std::size_t j = 0; j < dims; ++j)
    r.argmax.push_back(std::ldexp(static_cast<double>(idx[j]), -static_cast<int>(scan.denom_log2)));
  return r;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

// Counter-mode substream: mixes (seed, tag, counter) into an independent
// generator seed.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t counter) {
  std::uint64_t s = seed;
  (void)splitmix64(s);
  s ^= 0x632be59bd9b4e019ull * (tag + 1);
  (void)splitmix64(s);
  s ^= 0x9e3779b97f4a7c15ull * (counter + 1);
  return std::mt19937_64(splitmix64(s));
}

constexpr std::uint64_t kTagSample = 1;
constexpr std::uint64_t kTagNoise = 2;
constexpr std::uint64_t kTagHeldout = 3;

}  // namespace

std::vector<SweepRecord> regression_simulate(const SmoothTarget& target, double F,
                                             std::span<const std::size_t> n_values,
                                             std::uint64_t seed, bool with_noise,
                                             std::size_t heldout_points) {
  if (F < std::max(target.K, 1.0))
    throw std::invalid_argument("regression_simulate: F must be >= max(K, 1)");

  // One shared held-out set per seed so the error comparison across n uses
  // common random numbers.
  std::vector<std::vector<double>> heldout(heldout_points, std::vector<double>(target.d));
  {
    auto gen = substream(seed, kTagHeldout, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& x : heldout)
      for (auto& v : x) v = unif(gen);
  }

  std::vector<SweepRecord> records;
  for (std::size_t n : n_values) {
    SweepRecord rec;
    rec.n = n;
    rec.seed = seed;
    const double expo = static_cast<double>(target.d) / (2.0 * target.beta + target.d);
    rec.N = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), expo)));
    rec.m = static_cast<unsigned>(std::ceil(std::log2(static_cast<double>(n))));
    rec.rate_bound = std::pow(static_cast<double>(n), -2.0 * target.beta / (2.0 * target.beta + target.d)) *
                     std::log2(static_cast<double>(n)) * std::log2(static_cast<double>(n));

    ApproxConfig cfg = derive_config(target.d, target.beta, target.K, rec.N, rec.m);
    if (!cfg.precondition_ok) {
      rec.skipped = true;
      rec.skip_reason = cfg.precondition_error;
      records.push_back(std::move(rec));
      continue;
    }

    // Draw the training sample for the record; the estimator is plug-in, so
    // the sample determines nothing downstream.
    {
      auto xs = substream(seed, kTagSample, n);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::vector<double> x(target.d);
      for (std::size_t i = 0; i < n; ++i)
        for (auto& v : x) v = unif(xs);
      if (with_noise) {
        auto es = substream(seed, kTagNoise, n);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) (void)normal(es);
      }
    }

    const QuintNet net = assemble(target, cfg);
    const NetStats st = stats(net);
    rec.depth = st.depth;
    rec.max_width = st.max_width;
    rec.l0 = st.l0;
    rec.l1 = to_double(st.l1);

    const Evaluator ev(net);
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> input(1 + target.d);
    input[0] = 1.0;
    for (const auto& x : heldout) {
      std::copy(x.begin(), x.end(), input.begin() + 1);
      const double fhat = ev.floating(input)[0];
      const double diff = fhat - target.value(x);
      const double sq = diff * diff;
      sum += sq;
      sumsq += sq * sq;
    }
    const double mean = sum / static_cast<double>(heldout_points);
    rec.heldout_mse = mean;
    const double var = std::max(0.0, sumsq / static_cast<double>(heldout_points) - mean * mean);
    rec.heldout_se = std::sqrt(var / static_cast<double>(heldout_points));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace quintnet
