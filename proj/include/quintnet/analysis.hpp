#ifndef QUINTNET_ANALYSIS_HPP
#define QUINTNET_ANALYSIS_HPP

#include "quintnet/dyadic.hpp"
#include "quintnet/net.hpp"
#include "quintnet/taylor.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quintnet {

/// Depth / width / sparsity / error bounds of the two approximation theorems.
struct BoundReport {
  // Float-parameter reference construction.
  long long L = 0;
  long long width_bound = 0;
  double s_bound = 0.0;
  double err_bound = 0.0;
  // Quintuple-parameter construction (filled by thm2_bounds).
  double L_tilde_bound = 0.0;
  double width_tilde_bound = 0.0;
  double s_tilde_bound = 0.0;
  double err_tilde_bound = 0.0;
  double delta_bound = 0.0;  // 2 log2(N^{beta+d} K e^d)
  double R_bound = 0.0;      // (2 beta)^d N
};

/// L = 8+(m+5)(1+ceil(log2(d v beta))), |p|_inf = 6(d+ceil(beta))N,
/// s <= 141(d+beta+1)^{3+d} N(m+6),
/// err <= (2K+1)(1+d^2+beta^2) 6^d N 2^-m + K 3^beta N^{-beta/d}.
BoundReport thm1_bounds(double beta, std::size_t d, double K, std::size_t N, unsigned m);

/// Adds L~ <= 4 Delta + 2L, |p~|_inf <= 2(1+d+R+Delta) v 2^d |p|_inf,
/// s~ <= (1+d+R+Delta) L~ + 2^d s and the 12^d error display, with Delta and R
/// at their stated upper bounds.
BoundReport thm2_bounds(double beta, std::size_t d, double K, std::size_t N, unsigned m);

/// Pass/fail of the three Theorem-2 structural inequalities for an emitted
/// net, with Delta and R at their stated bounds and (L, p, s) from thm1.
struct StructureCheck {
  NetStats actual;
  BoundReport bounds;
  bool depth_ok = false;
  bool width_ok = false;
  bool sparsity_ok = false;
  bool ok() const { return depth_ok && width_ok && sparsity_ok; }
};
StructureCheck check_structure(const QuintNet& net, const ApproxConfig& cfg);

/// Exact count bound on the discrete network class: (5(L+1)p_max^2)^{s+1},
/// together with the dominated partial sum sum_{s' <= s} (5(L+1)p_max^2)^{s'}.
struct CountResult {
  boost::multiprecision::cpp_int bound;
  boost::multiprecision::cpp_int partial_sum;
  double log2_bound = 0.0;
};
CountResult count_networks(std::size_t L, std::size_t p_max, std::size_t s);

/// Right-hand side of the oracle inequality:
/// 4 [ approx_err_sq + F^2 (18 cover_log2 + 72)/n + 32 delta F + Delta_n ].
double oracle_inequality(double approx_err_sq, double cover_log2, std::size_t n, double F,
                         double delta, double Delta_n);

/// Measured sup error of a net against a scalar oracle over the dyadic grid
/// {i/(resolution-1)}^dims (resolution-1 must be a power of two).  When
/// prepend_one is set the net is fed (1, x).  Scan order is deterministic;
/// ties keep the first grid point.
struct SupErrorResult {
  Dyadic exact_err;
  double float_err = 0.0;
  std::vector<double> argmax;
  bool exact_mode = false;
};

SupErrorResult sup_error_exact(const QuintNet& net,
                               const std::function<Dyadic(std::span<const Dyadic>)>& oracle,
                               std::size_t resolution, std::size_t dims, bool prepend_one = true);

SupErrorResult sup_error_float(const QuintNet& net,
                               const std::function<double(std::span<const double>)>& oracle,
                               std::size_t resolution, std::size_t dims, bool prepend_one = true);

/// One row of the regression sweep.
struct SweepRecord {
  std::size_t n = 0;
  std::size_t N = 0;
  unsigned m = 0;
  std::size_t depth = 0;
  std::size_t max_width = 0;
  std::size_t l0 = 0;
  double l1 = 0.0;
  double heldout_mse = 0.0;
  double heldout_se = 0.0;  // Monte Carlo standard error of the MSE estimate
  double rate_bound = 0.0;  // n^{-2 beta/(2 beta+d)} log2^2 n
  std::uint64_t seed = 0;
  bool skipped = false;
  std::string skip_reason;
};

/// Plug-in regression simulation: for each n the estimator is the constructed
/// network at N = ceil(n^{d/(2 beta+d)}), m = ceil(log2 n) (no training; ERM
/// over the discrete class is intractable).  Draws the n-sample (X_i, eps_i)
/// for the record, then reports held-out prediction error on 10^4 fresh
/// points.  Substreams are derived from the seed by counter mode, so adding an
/// n value never perturbs the others; the held-out set is shared across n.
std::vector<SweepRecord> regression_simulate(const SmoothTarget& target, double F,
                                             std::span<const std::size_t> n_values,
                                             std::uint64_t seed, bool with_noise = true,
                                             std::size_t heldout_points = 10000);

/// splitmix64 step; the basis of the counter-mode substream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Worker count honoring the QUINTNET_THREADS environment variable.
unsigned worker_threads();

}  // namespace quintnet

#endif  // QUINTNET_ANALYSIS_HPP
