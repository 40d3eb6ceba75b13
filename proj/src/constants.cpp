#include "quintnet/constants.hpp"

#include <stdexcept>
#include <string>

namespace quintnet {

QuintNet build_const_net(const ConstantPlan& plan, std::size_t passthrough_width) {
  const unsigned delta = plan.delta;
  const std::size_t W = passthrough_width;
  const std::size_t D = plan.targets.size();
  if (delta < 1 || delta > 62) throw std::invalid_argument("build_const_net: delta must be in [1, 62]");
  if (W < 1) throw std::invalid_argument("build_const_net: passthrough must include the 1-channel");
  if (!plan.signs.empty() && plan.signs.size() != D)
    throw std::invalid_argument("build_const_net: signs length differs from targets");
  const std::uint64_t cap = std::uint64_t{1} << delta;
  for (std::uint64_t y : plan.targets)
    if (y == 0 || y > cap)
      throw std::invalid_argument("build_const_net: target " + std::to_string(y) +
                                  " outside (0, 2^" + std::to_string(delta) + "]");

  std::vector<QuintMatrix> mats;
  mats.reserve(2 * delta + 1);

  // Doubling ladder: after layer j (1-based) the channels are
  // (passthrough, 2^1, ..., 2^j); delta-1 layers in total.
  for (unsigned j = 0; j + 1 < delta; ++j) {
    QuintMatrix m(W + j + 1, W + j);
    for (std::size_t i = 0; i < W + j; ++i) m.set(i, i, QuintWeight::PlusOne);
    m.set(W + j, j == 0 ? 0 : W + j - 1, QuintWeight::Two);
    mats.push_back(std::move(m));
  }

  // Assembly layer: each accumulator sums the powers named by the bits of its
  // target.  Bit 0 reads the 1-channel; bit l reads the ladder channel 2^l;
  // the single value 2^delta doubles the top ladder channel.
  {
    const std::size_t ladder = delta - 1;
    QuintMatrix m(W + D, W + ladder);
    for (std::size_t i = 0; i < W; ++i) m.set(i, i, QuintWeight::PlusOne);
    for (std::size_t i = 0; i < D; ++i) {
      const std::uint64_t y = plan.targets[i];
      if (y == cap) {
        m.set(W + i, delta == 1 ? 0 : W + ladder - 1, QuintWeight::Two);
        continue;
      }
      if (y & 1) m.set(W + i, 0, QuintWeight::PlusOne);
      for (unsigned l = 1; l < delta; ++l)
        if (y & (std::uint64_t{1} << l)) m.set(W + i, W + l - 1, QuintWeight::PlusOne);
    }
    mats.push_back(std::move(m));
  }

  // Halving phase: delta layers bring each accumulator to y / 2^delta.
  for (unsigned j = 0; j < delta; ++j) {
    QuintMatrix m(W + D, W + D);
    for (std::size_t i = 0; i < W; ++i) m.set(i, i, QuintWeight::PlusOne);
    for (std::size_t i = 0; i < D; ++i) m.set(W + i, W + i, QuintWeight::PlusHalf);
    mats.push_back(std::move(m));
  }

  mats.push_back(QuintMatrix::identity(W + D));

  return QuintNet(std::move(mats), "Const_" + std::to_string(delta));
}

}  // namespace quintnet
