#include "quintnet/atoms.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace quintnet {

namespace {

const auto W0 = QuintWeight::Zero;
const auto WH = QuintWeight::PlusHalf;
const auto WMH = QuintWeight::MinusHalf;
const auto W1 = QuintWeight::PlusOne;
const auto WM1 = QuintWeight::MinusOne;

// The two alternating 4x4 stages of the N_m block, acting on the state
// (c, T_+(w), h, T_-^k(w)).  A advances the wave one level and accumulates
// R^k into h; B halves the shift channel a second time so c stays at 2^{-2k}.
QuintMatrix nm_stage_a() {
  QuintMatrix a(4, 4);
  a.set(0, 0, WH);
  a.set(1, 1, WH);
  a.set(1, 3, WMH);
  a.set(2, 1, W1);
  a.set(2, 2, W1);
  a.set(2, 3, WM1);
  a.set(3, 0, WMH);
  a.set(3, 1, W1);
  a.set(3, 3, WM1);
  return a;
}

QuintMatrix nm_stage_b() {
  QuintMatrix b(4, 4);
  b.set(0, 0, WH);
  b.set(1, 1, W1);
  b.set(2, 2, W1);
  b.set(3, 3, W1);
  return b;
}

// Places `block` on the diagonal of `m` at (row0, col0).
void emplace_block(QuintMatrix& m, const QuintMatrix& block, std::size_t row0, std::size_t col0) {
  for (std::size_t r = 0; r < block.rows(); ++r)
    for (std::size_t c = 0; c < block.cols(); ++c)
      if (block.at(r, c) != W0) m.set(row0 + r, col0 + c, block.at(r, c));
}

}  // namespace

Dyadic tee(unsigned k, const Dyadic& x) {
  if (k < 1) throw std::domain_error("tee: k must be >= 1");
  const Dyadic upper = Dyadic::from_parts(1, 2 * k - 2);  // 2^{2-2k}
  if (x.is_negative() || upper < x)
    throw std::domain_error("tee: x outside [0, 2^(2-2k)] for k=" + std::to_string(k));
  const Dyadic shift = Dyadic::from_parts(1, 2 * k - 1);  // 2^{1-2k}
  return half(x) - relu(x - shift);
}

Dyadic r_sum(unsigned m, const Dyadic& x) {
  if (x.is_negative() || Dyadic(1) < x) throw std::domain_error("r_sum: x outside [0,1]");
  Dyadic wave = x;
  Dyadic sum;
  for (unsigned k = 1; k <= m; ++k) {
    wave = tee(k, wave);
    sum += wave;
  }
  return sum;
}

Dyadic parabola(const Dyadic& x) { return x * (Dyadic(1) - x); }

QuintNet build_nm(unsigned m) {
  if (m < 1) throw std::invalid_argument("build_nm: m must be >= 1");
  std::vector<QuintMatrix> mats;
  mats.reserve(2 * m + 1);
  for (unsigned i = 0; i < m; ++i) {
    mats.push_back(nm_stage_a());
    mats.push_back(nm_stage_b());
  }
  QuintMatrix out(1, 4);
  out.set(0, 1, W1);
  out.set(0, 2, W1);
  out.set(0, 3, WM1);
  mats.push_back(out);
  return QuintNet(std::move(mats), "N_" + std::to_string(m));
}

QuintNet build_mult(unsigned m) {
  if (m < 1) throw std::invalid_argument("build_mult: m must be >= 1");
  std::vector<QuintMatrix> mats;
  mats.reserve(2 * m + 5);

  // Layer 1: from (1, x, y) emit scaled sums whose halvings and clippings
  // below form the 9-vector; the 1/4 entries need two 1/2 factors, hence the
  // two-layer split.
  QuintMatrix w0(6, 3);
  w0.set(0, 0, W1);                                      // 1
  w0.set(1, 0, WH);                                      // 1/2
  w0.set(2, 0, WH); w0.set(2, 1, WH); w0.set(2, 2, WMH); // u1 = (x-y+1)/2
  w0.set(3, 1, WH); w0.set(3, 2, WH);                    // u2 = (x+y)/2
  w0.set(4, 1, WH); w0.set(4, 2, WMH);                   // (x-y)/2 -> T_-^1(u1)
  w0.set(5, 0, WMH); w0.set(5, 1, WH); w0.set(5, 2, WH); // (x+y-1)/2 -> T_-^1(u2)
  mats.push_back(std::move(w0));

  // Layer 2: assemble (1, 1/4, T_+(u1), u2, T_-^1(u1), 1/4, T_+(u2), 1/4, T_-^1(u2)).
  QuintMatrix w1(9, 6);
  w1.set(0, 0, W1);
  w1.set(1, 1, WH);
  w1.set(2, 2, WH);
  w1.set(3, 3, W1);
  w1.set(4, 4, W1);
  w1.set(5, 1, WH);
  w1.set(6, 3, WH);
  w1.set(7, 1, WH);
  w1.set(8, 5, W1);
  mats.push_back(std::move(w1));

  // Two N_m blocks side by side, the constant-1 channel carried along.
  const QuintMatrix a = nm_stage_a();
  const QuintMatrix b = nm_stage_b();
  for (unsigned i = 0; i < m; ++i) {
    for (const QuintMatrix* stage : {&a, &b}) {
      QuintMatrix w(9, 9);
      w.set(0, 0, W1);
      emplace_block(w, *stage, 1, 1);
      emplace_block(w, *stage, 5, 5);
      mats.push_back(std::move(w));
    }
  }

  // Clipping head: with u, v the two block outputs, compute
  // ((1 - (1 - (u - v))_+)_+, i.e. u - v clamped to [0,1].
  QuintMatrix wm(2, 9);
  wm.set(0, 0, W1);
  wm.set(1, 0, W1);
  wm.set(1, 2, WM1); wm.set(1, 3, WM1); wm.set(1, 4, W1);  // -u
  wm.set(1, 6, W1); wm.set(1, 7, W1); wm.set(1, 8, WM1);   // +v
  mats.push_back(std::move(wm));

  QuintMatrix wc(2, 2);
  wc.set(0, 0, W1);
  wc.set(1, 0, W1);
  wc.set(1, 1, WM1);
  mats.push_back(std::move(wc));

  QuintMatrix sel(1, 2);
  sel.set(0, 1, W1);
  mats.push_back(std::move(sel));

  return QuintNet(std::move(mats), "Mult_" + std::to_string(m));
}

QuintNet concat_blocks(std::size_t input_width, const std::vector<BlockSpec>& blocks,
                       std::string label) {
  if (blocks.empty()) throw std::invalid_argument("concat_blocks: no blocks");
  std::size_t depth = 0;
  for (const auto& b : blocks) depth = std::max(depth, b.net->depth());

  std::vector<QuintNet> padded;
  padded.reserve(blocks.size());
  std::vector<const QuintNet*> nets;
  for (const auto& b : blocks) {
    if (b.input_map.size() != b.net->input_width())
      throw std::invalid_argument("concat_blocks: input map size differs from block input width");
    if (b.net->depth() < depth) {
      padded.push_back(extend_depth(*b.net, depth - b.net->depth()));
      nets.push_back(&padded.back());
    } else {
      nets.push_back(b.net);
    }
  }

  std::vector<QuintMatrix> mats;
  mats.reserve(depth + 1);
  for (std::size_t i = 0; i <= depth; ++i) {
    std::size_t rows = 0, cols = 0;
    for (const QuintNet* n : nets) {
      rows += n->matrices()[i].rows();
      cols += n->matrices()[i].cols();
    }
    QuintMatrix m(rows, i == 0 ? input_width : cols);
    std::size_t row0 = 0, col0 = 0;
    for (std::size_t k = 0; k < nets.size(); ++k) {
      const QuintMatrix& block = nets[k]->matrices()[i];
      if (i == 0) {
        const auto& map = blocks[k].input_map;
        for (std::size_t c = 0; c < block.cols(); ++c) {
          if (map[c] < 0) continue;
          auto target = static_cast<std::size_t>(map[c]);
          if (target >= input_width)
            throw std::invalid_argument("concat_blocks: input map target out of range");
          for (std::size_t r = 0; r < block.rows(); ++r) {
            QuintWeight w = block.at(r, c);
            if (w == W0) continue;
            QuintWeight merged = w;
            if (m.at(row0 + r, target) != W0) {
              Dyadic sum = weight_dyadic(m.at(row0 + r, target)) + weight_dyadic(w);
              merged = W0;
              bool found = sum.is_zero();
              for (QuintWeight cand : {WH, WMH, W1, WM1, QuintWeight::Two})
                if (!found && weight_dyadic(cand) == sum) { merged = cand; found = true; }
              if (!found)
                throw std::invalid_argument("concat_blocks: merged input columns leave the alphabet");
            }
            m.set(row0 + r, target, merged);
          }
        }
      } else {
        emplace_block(m, block, row0, col0);
      }
      row0 += block.rows();
      col0 += block.cols();
    }
    mats.push_back(std::move(m));
  }
  return QuintNet(std::move(mats), std::move(label));
}

QuintNet build_mult_r(unsigned r, unsigned m) {
  if (r < 1) throw std::invalid_argument("build_mult_r: r must be >= 1");
  if (m < 1) throw std::invalid_argument("build_mult_r: m must be >= 1");
  const std::string label = "Mult^" + std::to_string(r) + "_" + std::to_string(m);
  if (r == 1) {
    QuintMatrix sel(1, 2);
    sel.set(0, 1, W1);
    std::vector<QuintMatrix> mats;
    mats.push_back(std::move(sel));
    return QuintNet(std::move(mats), label);
  }

  const QuintNet mult = build_mult(m);
  const QuintNet carry = identity_net(1);

  std::optional<QuintNet> result;
  std::size_t t = r;
  while (t > 1) {
    const std::size_t pairs = t / 2;
    const bool leftover = (t % 2) != 0;
    const bool final_round = (pairs + (leftover ? 1 : 0)) == 1;
    std::vector<BlockSpec> blocks;
    if (!final_round) blocks.push_back({&carry, {0}});
    for (std::size_t i = 0; i < pairs; ++i)
      blocks.push_back({&mult, {0, static_cast<int>(2 * i + 1), static_cast<int>(2 * i + 2)}});
    if (leftover) blocks.push_back({&carry, {static_cast<int>(t)}});
    QuintNet round = concat_blocks(1 + t, blocks);
    result = result ? compose(*result, round) : std::move(round);
    t = pairs + (leftover ? 1 : 0);
  }
  return QuintNet(result->matrices(), label);
}

std::vector<std::vector<unsigned>> multi_indices(std::size_t d, double gamma) {
  if (d < 1) throw std::invalid_argument("multi_indices: d must be >= 1");
  if (!(gamma > 0)) throw std::invalid_argument("multi_indices: gamma must be positive");
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> current(d, 0);
  // Grades below gamma; within a grade the first axes carry the higher powers
  // first (lexicographically descending).
  const auto emit = [&](auto&& self, std::size_t pos, unsigned remaining) -> void {
    if (pos + 1 == d) {
      current[pos] = remaining;
      out.push_back(current);
      return;
    }
    for (unsigned take = remaining + 1; take-- > 0;) {
      current[pos] = take;
      self(self, pos + 1, remaining - take);
    }
  };
  for (unsigned grade = 0; static_cast<double>(grade) < gamma; ++grade) emit(emit, 0, grade);
  return out;
}

std::size_t count_monomials(std::size_t d, double gamma) { return multi_indices(d, gamma).size(); }

QuintNet build_mon(std::size_t d, double gamma, unsigned m) {
  if (m < 1) throw std::invalid_argument("build_mon: m must be >= 1");
  const auto indices = multi_indices(d, gamma);
  unsigned max_degree = 0;
  for (const auto& alpha : indices) {
    unsigned g = 0;
    for (unsigned a : alpha) g += a;
    max_degree = std::max(max_degree, g);
  }
  const unsigned arity = std::max(max_degree, 1u);
  const QuintNet product = build_mult_r(arity, m);
  const QuintNet one = identity_net(1);

  std::vector<BlockSpec> blocks;
  blocks.reserve(indices.size());
  for (const auto& alpha : indices) {
    unsigned g = 0;
    for (unsigned a : alpha) g += a;
    if (g == 0) {
      blocks.push_back({&one, {0}});
      continue;
    }
    std::vector<int> map(arity + 1, 0);  // unused factor slots read the 1-channel
    std::size_t slot = 1;
    for (std::size_t j = 0; j < d; ++j)
      for (unsigned rep = 0; rep < alpha[j]; ++rep) map[slot++] = static_cast<int>(1 + j);
    blocks.push_back({&product, std::move(map)});
  }
  std::string label = "Mon^" + std::to_string(d) + "_" + std::to_string(m);
  return concat_blocks(1 + d, blocks, std::move(label));
}

}  // namespace quintnet
