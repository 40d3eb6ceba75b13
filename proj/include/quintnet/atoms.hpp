#ifndef QUINTNET_ATOMS_HPP
#define QUINTNET_ATOMS_HPP

#include "quintnet/dyadic.hpp"
#include "quintnet/net.hpp"

#include <vector>

namespace quintnet {

/// Triangle wave T^k(x) = (x/2)_+ - (x - 2^{1-2k})_+ on [0, 2^{2-2k}],
/// evaluated exactly.  Throws std::domain_error outside the domain.
Dyadic tee(unsigned k, const Dyadic& x);

/// Partial sum sum_{k=1..m} R^k(x) of the composed waves R^k = T^k o ... o T^1
/// on [0,1]; approximates x(1-x) within 2^-m.  Exact scalar oracle.
Dyadic r_sum(unsigned m, const Dyadic& x);

/// x(1-x), exact.
Dyadic parabola(const Dyadic& x);

/// The depth-2m width-4 block mapping
///   (1/4, T_+(u), h(u), T_-^1(u)) -> sum_{k=1..m+1} R^k(u) + h(u)
/// for u in [0,1] and h(u) >= 0, with weights in {0, +-1/2, +-1}.
QuintNet build_nm(unsigned m);

/// Mult_m: input (1, x, y) with x, y in [0,1], output within 2^-m of xy and
/// clipped to [0,1].  Depth exactly 2m+4, max width exactly 9, weights in
/// {0, +-1/2, +-1}.
QuintNet build_mult(unsigned m);

/// Mult^r_m: input (1, x_1..x_r), output within r^2 2^-m of the product.
/// Binary-tree pairing; an unpaired entry is carried through the round by an
/// identity channel.  Depth <= (2m+5)ceil(log2 r), width <= 9r.
QuintNet build_mult_r(unsigned r, unsigned m);

/// All multi-indices alpha in N^d with |alpha| < gamma, graded-lexicographic
/// (grade ascending, lexicographically descending within a grade, so x1 comes
/// before x2).
std::vector<std::vector<unsigned>> multi_indices(std::size_t d, double gamma);

/// C_{d,gamma}: the number of monomials of degree < gamma.
std::size_t count_monomials(std::size_t d, double gamma);

/// Mon^d_{m,gamma}: input (1, x_1..x_d), one output channel per multi-index
/// |alpha| < gamma in multi_indices order, each within gamma^2 2^-m of
/// x^alpha.  Every monomial runs through a Mult bank of common arity (inputs
/// repeated per the multi-index, padded with the constant-1 channel) so the
/// bank has a single depth.
QuintNet build_mon(std::size_t d, double gamma, unsigned m);

/// Blocks placed side by side, each reading the channels named by its input
/// map (an entry of -1 drops that column; its source must be semantically
/// zero).  Blocks of unequal depth are padded with identity layers, so every
/// carried channel must be nonnegative.  Output channels follow block order.
struct BlockSpec {
  const QuintNet* net;
  std::vector<int> input_map;
};
QuintNet concat_blocks(std::size_t input_width, const std::vector<BlockSpec>& blocks,
                       std::string label = {});

}  // namespace quintnet

#endif  // QUINTNET_ATOMS_HPP
