#ifndef QUINTNET_CONSTANTS_HPP
#define QUINTNET_CONSTANTS_HPP

#include "quintnet/net.hpp"

#include <cstdint>
#include <vector>

namespace quintnet {

/// Request for appended constant channels z_i = y_i / 2^delta with
/// y_i integers in (0, 2^delta].  Signs are never applied here; negative
/// constants are realized by -1 weights at the consuming layer, and the signs
/// recorded in the plan are informational for those consumers.
struct ConstantPlan {
  unsigned delta = 1;
  std::vector<std::uint64_t> targets;
  std::vector<int> signs;  // optional, same length as targets when present
};

/// Appends channels carrying the planned constants to a passthrough input:
///   (v_1, ..., v_W)  ->  (v_1, ..., v_W, z_1, ..., z_D)
/// with exactly 2*delta hidden layers and parameters in {0, 1, 2, 1/2}.
/// Channel 0 of the passthrough must carry the constant 1 and every
/// passthrough channel must be nonnegative (identities go through ReLU).
/// The first delta layers build the integers y_i from a shared doubling
/// ladder of powers of two; the last delta layers halve the accumulators.
QuintNet build_const_net(const ConstantPlan& plan, std::size_t passthrough_width);

}  // namespace quintnet

#endif  // QUINTNET_CONSTANTS_HPP
