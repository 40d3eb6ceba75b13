#ifndef QUINTNET_TAYLOR_HPP
#define QUINTNET_TAYLOR_HPP

#include "quintnet/constants.hpp"
#include "quintnet/dyadic.hpp"
#include "quintnet/net.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace quintnet {

/// A smoothness-ball target: point values plus analytic partial derivatives of
/// every order |alpha| <= floor(beta), with declared membership in the Hoelder
/// ball C^beta_d(K).  Membership is caller-asserted and spot-checked by finite
/// differences in tests.
struct SmoothTarget {
  std::string name;
  std::size_t d = 1;
  double beta = 1.0;
  double K = 1.0;
  std::function<double(std::span<const double>)> value;
  // partial(alpha, point) = (d^alpha f)(point)
  std::function<double(std::span<const unsigned>, std::span<const double>)> partial;
};

/// Named targets: "zero", "linear" (d=1), "product", "sumsq", "bump", each
/// with hand-declared default (beta, K) generous enough for ball membership.
SmoothTarget catalog_target(const std::string& name, std::size_t d);
std::vector<std::string> catalog_names();

/// Derived constants for the construction at (target, N, m).
struct ApproxConfig {
  std::size_t d = 1;
  double beta = 1.0;
  double K = 1.0;
  std::size_t N = 1;
  unsigned m = 1;

  std::size_t N_tilde = 0;  // smallest (2^nu + 1)^d >= N
  unsigned nu = 1;
  std::size_t M = 2;        // 2^nu, grid resolution
  long long B = 1;          // floor(2 K e^d), Taylor coefficient cap
  unsigned b = 1;           // smallest with 2^b >= B M^beta (beta+1)^d
  unsigned delta = 1;       // max(nu d + 1, b)
  double D = 0.0;           // parameter-count budget M + (beta (M+1))^d

  bool precondition_ok = false;
  std::string precondition_error;
};

/// Computes every derived constant without enforcing the Theorem-2 lower bound
/// on N (real-valued thresholds are rounded conservatively upward).
ApproxConfig derive_config(std::size_t d, double beta, double K, std::size_t N, unsigned m);

/// derive_config plus the precondition N >= (beta+1)^d v (K+1)e^d; throws
/// std::invalid_argument naming the failing inequality.
ApproxConfig make_config(const SmoothTarget& target, std::size_t N, unsigned m);

/// All (M+1)^d grid multi-indices in lexicographic order (first axis slowest).
std::vector<std::vector<std::size_t>> grid_indices(const ApproxConfig& cfg);
/// The grid point x_ell = (ell_j / M)_j as exact dyadics.
std::vector<Dyadic> grid_anchor(const ApproxConfig& cfg, std::span<const std::size_t> ell);
/// All grid points, same order as grid_indices.
std::vector<std::vector<Dyadic>> grid_points(const ApproxConfig& cfg);

struct QuantizedCoefficient {
  std::vector<unsigned> gamma;
  double c = 0.0;       // exact Taylor coefficient of x^gamma
  long long k = 0;      // c in [kB/2^b, (k+1)B/2^b)
  Dyadic c_tilde;       // k B / 2^b
};

struct QuantizedPolynomial {
  std::vector<Dyadic> anchor;
  std::vector<QuantizedCoefficient> coeffs;  // multi_indices(d, beta) order
};

/// Taylor coefficients of the local expansion around the anchor, rewritten in
/// the monomial basis x^gamma and floor-quantized onto the grid {kB/2^b}.
/// Throws when some |c| >= B (ball-membership violation).
QuantizedPolynomial quantize_taylor(const SmoothTarget& target, const ApproxConfig& cfg,
                                    std::span<const std::size_t> ell);

/// Exact hat value prod_j (1 - M |x_j - ell_j/M|)_+ .
Dyadic hat_value(const ApproxConfig& cfg, std::span<const std::size_t> ell,
                 std::span<const Dyadic> x);

/// Network computing the hat at a grid point from input (1, x_1..x_d): tent
/// channels are exact (anchor shifts from a constants block, the M factor from
/// nu doublings, the clip against the 1-channel); for d >= 2 the tents are
/// multiplied by a Mult^d_m block, so the output is within d^2 2^-m of the
/// hat.  For d = 1 the network value is exact.
QuintNet build_hat_net(const ApproxConfig& cfg, std::span<const std::size_t> ell);

/// The quantized-coefficient surrogate P~^beta f evaluated exactly,
/// independent of any network.
class QuantizedSurrogate {
 public:
  QuantizedSurrogate(const SmoothTarget& target, const ApproxConfig& cfg);

  Dyadic eval(std::span<const Dyadic> x) const;
  const std::vector<QuantizedPolynomial>& polynomials() const { return polys_; }

 private:
  ApproxConfig cfg_;
  std::vector<std::vector<std::size_t>> ells_;
  std::vector<QuantizedPolynomial> polys_;
};

/// Convenience wrapper: builds the surrogate and evaluates it at x.
Dyadic p_tilde_eval(const SmoothTarget& target, const ApproxConfig& cfg,
                    std::span<const Dyadic> x);

/// The full Theorem-2 approximant f~ as a single quintuple-parameter network
/// with input (1, x_1..x_d) and scalar output.
QuintNet assemble(const SmoothTarget& target, const ApproxConfig& cfg);

}  // namespace quintnet

#endif  // QUINTNET_TAYLOR_HPP
