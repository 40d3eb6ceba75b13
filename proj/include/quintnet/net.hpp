#ifndef QUINTNET_NET_HPP
#define QUINTNET_NET_HPP

#include "quintnet/dyadic.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quintnet {

/// The six-symbol parameter alphabet {0, 1/2, -1/2, 1, -1, 2}.
enum class QuintWeight : std::uint8_t {
  Zero = 0,
  PlusHalf = 1,
  MinusHalf = 2,
  PlusOne = 3,
  MinusOne = 4,
  Two = 5,
};

double weight_value(QuintWeight w);
Dyadic weight_dyadic(QuintWeight w);
/// JSON symbol: one of "0", "h", "-h", "1", "-1", "2".
const char* weight_symbol(QuintWeight w);
std::optional<QuintWeight> weight_from_symbol(std::string_view symbol);

/// Dense rows x cols weight matrix over the quintuple alphabet, one byte per
/// entry, row-major.  Sparsity is a statistic, not a storage format.
class QuintMatrix {
 public:
  QuintMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, QuintWeight::Zero) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  QuintWeight at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, QuintWeight w) { data_[r * cols_ + c] = w; }
  std::span<const QuintWeight> data() const { return data_; }

  static QuintMatrix identity(std::size_t n);

  friend bool operator==(const QuintMatrix& a, const QuintMatrix& b) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<QuintWeight> data_;
};

/// Shift-free ReLU network f(x) = W_L o sigma o W_{L-1} o ... o sigma o W_0(x)
/// with every entry in the quintuple alphabet.  The leading constant-1 input
/// channel is a builder convention, not an evaluator feature.  Immutable after
/// construction; matrix i maps width[i] channels to width[i+1] channels and the
/// depth (number of hidden layers) is matrix count - 1.
class QuintNet {
 public:
  QuintNet(std::vector<QuintMatrix> matrices, std::string label = {});

  const std::vector<QuintMatrix>& matrices() const { return matrices_; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::string& label() const { return label_; }

  std::size_t depth() const { return matrices_.size() - 1; }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t output_width() const { return widths_.back(); }

 private:
  std::vector<QuintMatrix> matrices_;
  std::vector<std::size_t> widths_;
  std::string label_;
};

struct NetStats {
  std::size_t depth = 0;
  std::size_t max_width = 0;
  std::size_t l0 = 0;  // nonzero parameter count (the paper's s)
  Dyadic l1;           // exact sum of absolute weight values
};

NetStats stats(const QuintNet& net);

struct ValidationReport {
  bool ok = true;
  // First offending coordinate when !ok.
  std::size_t layer = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  std::string message;
};

/// Shape-chain and alphabet check on raw matrices (usable before a QuintNet
/// exists; the QuintNet constructor enforces the same rules).
ValidationReport validate_matrices(std::span<const QuintMatrix> matrices);
ValidationReport validate(const QuintNet& net);

std::vector<Dyadic> eval_exact(const QuintNet& net, std::span<const Dyadic> input);
std::vector<double> eval_float(const QuintNet& net, std::span<const double> input);

/// Precomputed sparse view of a net for repeated evaluation (grid sweeps).
/// Evaluation cost is proportional to the number of nonzero weights.
class Evaluator {
 public:
  explicit Evaluator(const QuintNet& net);

  std::vector<Dyadic> exact(std::span<const Dyadic> input) const;
  std::vector<double> floating(std::span<const double> input) const;

 private:
  struct Entry {
    std::uint32_t col;
    QuintWeight weight;
  };
  struct Layer {
    std::vector<std::uint32_t> row_start;  // rows+1 offsets into entries
    std::vector<Entry> entries;
    std::size_t rows;
  };
  std::vector<Layer> layers_;
  std::size_t input_width_;
};

/// second(sigma(first(x))): a ReLU is inserted at the junction, so this is
/// semantics-preserving when the junction values are nonnegative.  Depth adds
/// plus one.
QuintNet compose(const QuintNet& first, const QuintNet& second);

/// Stacks equal-depth nets side by side.  With shared_input the nets read one
/// common input vector (equal input widths required); otherwise inputs are
/// concatenated and the layout is block-diagonal throughout.
QuintNet parallel(std::span<const QuintNet> nets, bool shared_input);

/// Appends `extra` hidden identity layers (parameter 1 on the diagonal).
/// Output is unchanged on nonnegative-valued channels.
QuintNet extend_depth(const QuintNet& net, std::size_t extra);

/// Reindexes the input channels of `net`: column j of the first matrix is
/// moved to column mapping[j] of a fresh input of width new_input_width.
/// Entries mapping to the same column are summed (caller keeps the sums in the
/// alphabet; validated).  mapping[j] = -1 drops the column (weights must then
/// carry no meaning, e.g. a channel known to be zero).
QuintNet remap_inputs(const QuintNet& net, std::span<const int> mapping,
                      std::size_t new_input_width);

/// Depth-0 passthrough (a single identity matrix).
QuintNet identity_net(std::size_t width);

nlohmann::ordered_json serialize(const QuintNet& net);
QuintNet deserialize(const nlohmann::json& doc);

void save_net(const QuintNet& net, const std::string& path);
QuintNet load_net(const std::string& path);

}  // namespace quintnet

#endif  // QUINTNET_NET_HPP
