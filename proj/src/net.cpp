#include "quintnet/net.hpp"

#include <fstream>
#include <stdexcept>

namespace quintnet {

double weight_value(QuintWeight w) {
  switch (w) {
    case QuintWeight::Zero: return 0.0;
    case QuintWeight::PlusHalf: return 0.5;
    case QuintWeight::MinusHalf: return -0.5;
    case QuintWeight::PlusOne: return 1.0;
    case QuintWeight::MinusOne: return -1.0;
    case QuintWeight::Two: return 2.0;
  }
  throw std::invalid_argument("weight_value: byte outside the alphabet");
}

Dyadic weight_dyadic(QuintWeight w) {
  switch (w) {
    case QuintWeight::Zero: return Dyadic(0);
    case QuintWeight::PlusHalf: return Dyadic::from_parts(1, 1);
    case QuintWeight::MinusHalf: return Dyadic::from_parts(-1, 1);
    case QuintWeight::PlusOne: return Dyadic(1);
    case QuintWeight::MinusOne: return Dyadic(-1);
    case QuintWeight::Two: return Dyadic(2);
  }
  throw std::invalid_argument("weight_dyadic: byte outside the alphabet");
}

const char* weight_symbol(QuintWeight w) {
  switch (w) {
    case QuintWeight::Zero: return "0";
    case QuintWeight::PlusHalf: return "h";
    case QuintWeight::MinusHalf: return "-h";
    case QuintWeight::PlusOne: return "1";
    case QuintWeight::MinusOne: return "-1";
    case QuintWeight::Two: return "2";
  }
  throw std::invalid_argument("weight_symbol: byte outside the alphabet");
}

std::optional<QuintWeight> weight_from_symbol(std::string_view symbol) {
  if (symbol == "0") return QuintWeight::Zero;
  if (symbol == "h") return QuintWeight::PlusHalf;
  if (symbol == "-h") return QuintWeight::MinusHalf;
  if (symbol == "1") return QuintWeight::PlusOne;
  if (symbol == "-1") return QuintWeight::MinusOne;
  if (symbol == "2") return QuintWeight::Two;
  return std::nullopt;
}

QuintMatrix QuintMatrix::identity(std::size_t n) {
  QuintMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, QuintWeight::PlusOne);
  return m;
}

QuintNet::QuintNet(std::vector<QuintMatrix> matrices, std::string label)
    : matrices_(std::move(matrices)), label_(std::move(label)) {
  auto report = validate_matrices(matrices_);
  if (!report.ok) throw std::invalid_argument("QuintNet: " + report.message);
  widths_.reserve(matrices_.size() + 1);
  widths_.push_back(matrices_.front().cols());
  for (const auto& m : matrices_) widths_.push_back(m.rows());
}

ValidationReport validate_matrices(std::span<const QuintMatrix> matrices) {
  ValidationReport r;
  if (matrices.empty()) {
    r.ok = false;
    r.message = "matrix list is empty";
    return r;
  }
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const auto& m = matrices[i];
    if (m.rows() == 0 || m.cols() == 0) {
      r.ok = false;
      r.layer = i;
      r.message = "matrix " + std::to_string(i) + " has a zero dimension";
      return r;
    }
    if (i + 1 < matrices.size() && m.rows() != matrices[i + 1].cols()) {
      r.ok = false;
      r.layer = i;
      r.message = "matrix " + std::to_string(i) + " has " + std::to_string(m.rows()) +
                  " rows but matrix " + std::to_string(i + 1) + " expects " +
                  std::to_string(matrices[i + 1].cols()) + " columns";
      return r;
    }
    for (std::size_t row = 0; row < m.rows(); ++row) {
      for (std::size_t col = 0; col < m.cols(); ++col) {
        auto byte = static_cast<std::uint8_t>(m.at(row, col));
        if (byte > static_cast<std::uint8_t>(QuintWeight::Two)) {
          r.ok = false;
          r.layer = i;
          r.row = row;
          r.col = col;
          r.message = "entry (" + std::to_string(i) + "," + std::to_string(row) + "," +
                      std::to_string(col) + ") is outside the alphabet";
          return r;
        }
      }
    }
  }
  return r;
}

ValidationReport validate(const QuintNet& net) { return validate_matrices(net.matrices()); }

NetStats stats(const QuintNet& net) {
  NetStats s;
  s.depth = net.depth();
  for (std::size_t w : net.widths()) s.max_width = std::max(s.max_width, w);
  long long halves = 0, ones = 0, twos = 0;
  for (const auto& m : net.matrices()) {
    for (QuintWeight w : m.data()) {
      switch (w) {
        case QuintWeight::Zero: break;
        case QuintWeight::PlusHalf:
        case QuintWeight::MinusHalf: ++halves; ++s.l0; break;
        case QuintWeight::PlusOne:
        case QuintWeight::MinusOne: ++ones; ++s.l0; break;
        case QuintWeight::Two: ++twos; ++s.l0; break;
      }
    }
  }
  s.l1 = Dyadic::from_parts(halves, 1) + Dyadic(ones) + Dyadic(2 * twos);
  return s;
}

namespace {

void check_input_width(std::size_t expected, std::size_t got, const char* who) {
  if (expected != got)
    throw std::invalid_argument(std::string(who) + ": input has " + std::to_string(got) +
                                " coordinates, net expects " + std::to_string(expected));
}

}  // namespace

std::vector<Dyadic> eval_exact(const QuintNet& net, std::span<const Dyadic> input) {
  check_input_width(net.input_width(), input.size(), "eval_exact");
  std::vector<Dyadic> cur(input.begin(), input.end());
  const auto& mats = net.matrices();
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const auto& m = mats[i];
    std::vector<Dyadic> next(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      Dyadic acc;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        switch (m.at(r, c)) {
          case QuintWeight::Zero: break;
          case QuintWeight::PlusHalf: acc += half(cur[c]); break;
          case QuintWeight::MinusHalf: acc += -half(cur[c]); break;
          case QuintWeight::PlusOne: acc += cur[c]; break;
          case QuintWeight::MinusOne: acc += -cur[c]; break;
          case QuintWeight::Two: acc += twice(cur[c]); break;
        }
      }
      next[r] = (i + 1 < mats.size()) ? relu(acc) : acc;
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> eval_float(const QuintNet& net, std::span<const double> input) {
  check_input_width(net.input_width(), input.size(), "eval_float");
  std::vector<double> cur(input.begin(), input.end());
  const auto& mats = net.matrices();
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const auto& m = mats[i];
    std::vector<double> next(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        QuintWeight w = m.at(r, c);
        if (w != QuintWeight::Zero) acc += weight_value(w) * cur[c];
      }
      next[r] = (i + 1 < mats.size()) ? std::max(acc, 0.0) : acc;
    }
    cur = std::move(next);
  }
  return cur;
}

Evaluator::Evaluator(const QuintNet& net) : input_width_(net.input_width()) {
  layers_.reserve(net.matrices().size());
  for (const auto& m : net.matrices()) {
    Layer layer;
    layer.rows = m.rows();
    layer.row_start.reserve(m.rows() + 1);
    layer.row_start.push_back(0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        QuintWeight w = m.at(r, c);
        if (w != QuintWeight::Zero)
          layer.entries.push_back({static_cast<std::uint32_t>(c), w});
      }
      layer.row_start.push_back(static_cast<std::uint32_t>(layer.entries.size()));
    }
    layers_.push_back(std::move(layer));
  }
}

std::vector<Dyadic> Evaluator::exact(std::span<const Dyadic> input) const {
  check_input_width(input_width_, input.size(), "Evaluator::exact");
  std::vector<Dyadic> cur(input.begin(), input.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    std::vector<Dyadic> next(layer.rows);
    const bool last = i + 1 == layers_.size();
    for (std::size_t r = 0; r < layer.rows; ++r) {
      Dyadic acc;
      for (std::uint32_t k = layer.row_start[r]; k < layer.row_start[r + 1]; ++k) {
        const Entry& e = layer.entries[k];
        switch (e.weight) {
          case QuintWeight::Zero: break;
          case QuintWeight::PlusHalf: acc += half(cur[e.col]); break;
          case QuintWeight::MinusHalf: acc += -half(cur[e.col]); break;
          case QuintWeight::PlusOne: acc += cur[e.col]; break;
          case QuintWeight::MinusOne: acc += -cur[e.col]; break;
          case QuintWeight::Two: acc += twice(cur[e.col]); break;
        }
      }
      next[r] = last ? acc : relu(acc);
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> Evaluator::floating(std::span<const double> input) const {
  check_input_width(input_width_, input.size(), "Evaluator::floating");
  std::vector<double> cur(input.begin(), input.end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    std::vector<double> next(layer.rows, 0.0);
    const bool last = i + 1 == layers_.size();
    for (std::size_t r = 0; r < layer.rows; ++r) {
      double acc = 0.0;
      for (std::uint32_t k = layer.row_start[r]; k < layer.row_start[r + 1]; ++k) {
        const Entry& e = layer.entries[k];
        acc += weight_value(e.weight) * cur[e.col];
      }
      next[r] = last ? acc : std::max(acc, 0.0);
    }
    cur = std::move(next);
  }
  return cur;
}

QuintNet compose(const QuintNet& first, const QuintNet& second) {
  if (first.output_width() != second.input_width())
    throw std::invalid_argument("compose: first outputs " + std::to_string(first.output_width()) +
                                " channels, second expects " + std::to_string(second.input_width()));
  std::vector<QuintMatrix> mats = first.matrices();
  mats.insert(mats.end(), second.matrices().begin(), second.matrices().end());
  return QuintNet(std::move(mats));
}

QuintNet parallel(std::span<const QuintNet> nets, bool shared_input) {
  if (nets.empty()) throw std::invalid_argument("parallel: no nets");
  const std::size_t depth = nets.front().depth();
  for (const auto& n : nets) {
    if (n.depth() != depth)
      throw std::invalid_argument("parallel: depth mismatch (extend_depth the shallow nets first)");
    if (shared_input && n.input_width() != nets.front().input_width())
      throw std::invalid_argument("parallel: shared input requires equal input widths");
  }
  std::vector<QuintMatrix> mats;
  for (std::size_t i = 0; i <= depth; ++i) {
    std::size_t rows = 0, cols = 0;
    for (const auto& n : nets) {
      rows += n.matrices()[i].rows();
      cols += n.matrices()[i].cols();
    }
    const bool stack_cols = (i == 0 && shared_input);
    QuintMatrix m(rows, stack_cols ? nets.front().input_width() : cols);
    std::size_t row0 = 0, col0 = 0;
    for (const auto& n : nets) {
      const auto& block = n.matrices()[i];
      for (std::size_t r = 0; r < block.rows(); ++r)
        for (std::size_t c = 0; c < block.cols(); ++c)
          if (block.at(r, c) != QuintWeight::Zero)
            m.set(row0 + r, (stack_cols ? 0 : col0) + c, block.at(r, c));
      row0 += block.rows();
      col0 += block.cols();
    }
    mats.push_back(std::move(m));
  }
  return QuintNet(std::move(mats));
}

QuintNet extend_depth(const QuintNet& net, std::size_t extra) {
  if (extra == 0) return net;
  std::vector<QuintMatrix> mats = net.matrices();
  for (std::size_t i = 0; i < extra; ++i) mats.push_back(QuintMatrix::identity(net.output_width()));
  return QuintNet(std::move(mats), net.label());
}

namespace {

QuintWeight add_weights(QuintWeight a, QuintWeight b) {
  if (a == QuintWeight::Zero) return b;
  if (b == QuintWeight::Zero) return a;
  Dyadic sum = weight_dyadic(a) + weight_dyadic(b);
  for (QuintWeight w : {QuintWeight::PlusHalf, QuintWeight::MinusHalf, QuintWeight::PlusOne,
                        QuintWeight::MinusOne, QuintWeight::Two, QuintWeight::Zero})
    if (weight_dyadic(w) == sum) return w;
  throw std::invalid_argument("remap_inputs: merged columns leave the alphabet");
}

}  // namespace

QuintNet remap_inputs(const QuintNet& net, std::span<const int> mapping,
                      std::size_t new_input_width) {
  if (mapping.size() != net.input_width())
    throw std::invalid_argument("remap_inputs: mapping size differs from input width");
  const QuintMatrix& w0 = net.matrices().front();
  QuintMatrix fresh(w0.rows(), new_input_width);
  for (std::size_t c = 0; c < w0.cols(); ++c) {
    int target = mapping[c];
    if (target < 0) continue;
    if (static_cast<std::size_t>(target) >= new_input_width)
      throw std::invalid_argument("remap_inputs: mapping target out of range");
    for (std::size_t r = 0; r < w0.rows(); ++r) {
      QuintWeight w = w0.at(r, c);
      if (w != QuintWeight::Zero)
        fresh.set(r, target, add_weights(fresh.at(r, static_cast<std::size_t>(target)), w));
    }
  }
  std::vector<QuintMatrix> mats;
  mats.reserve(net.matrices().size());
  mats.push_back(std::move(fresh));
  mats.insert(mats.end(), net.matrices().begin() + 1, net.matrices().end());
  return QuintNet(std::move(mats), net.label());
}

QuintNet identity_net(std::size_t width) {
  std::vector<QuintMatrix> mats;
  mats.push_back(QuintMatrix::identity(width));
  return QuintNet(std::move(mats));
}

nlohmann::ordered_json serialize(const QuintNet& net) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["widths"] = net.widths();
  doc["label"] = net.label();
  nlohmann::ordered_json mats = nlohmann::ordered_json::array();
  for (const auto& m : net.matrices()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(weight_symbol(m.at(r, c)));
      rows.push_back(std::move(row));
    }
    mats.push_back(std::move(rows));
  }
  doc["matrices"] = std::move(mats);
  return doc;
}

QuintNet deserialize(const nlohmann::json& doc) {
  const auto fail = [](const std::string& why) {
    return std::invalid_argument("deserialize: " + why);
  };
  if (!doc.is_object()) throw fail("document is not an object");
  if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"] != 1)
    throw fail("missing or unsupported version");
  if (!doc.contains("widths") || !doc["widths"].is_array()) throw fail("missing widths");
  if (!doc.contains("matrices") || !doc["matrices"].is_array()) throw fail("missing matrices");
  std::vector<std::size_t> widths;
  for (const auto& w : doc["widths"]) {
    if (!w.is_number_integer() || w.get<long long>() <= 0) throw fail("widths must be positive integers");
    widths.push_back(w.get<std::size_t>());
  }
  const auto& jmats = doc["matrices"];
  if (jmats.empty()) throw fail("matrix list is empty");
  if (widths.size() != jmats.size() + 1) throw fail("widths length must be matrix count + 1");
  std::string label = doc.value("label", std::string{});
  std::vector<QuintMatrix> mats;
  for (std::size_t i = 0; i < jmats.size(); ++i) {
    const auto& jm = jmats[i];
    if (!jm.is_array() || jm.size() != widths[i + 1])
      throw fail("matrix " + std::to_string(i) + " must have widths[" + std::to_string(i + 1) +
                 "] rows");
    QuintMatrix m(widths[i + 1], widths[i]);
    for (std::size_t r = 0; r < jm.size(); ++r) {
      const auto& jrow = jm[r];
      if (!jrow.is_array() || jrow.size() != widths[i])
        throw fail("matrix " + std::to_string(i) + " row " + std::to_string(r) +
                   " must have widths[" + std::to_string(i) + "] entries");
      for (std::size_t c = 0; c < jrow.size(); ++c) {
        if (!jrow[c].is_string()) throw fail("weight entries must be symbol strings");
        auto w = weight_from_symbol(jrow[c].get<std::string>());
        if (!w)
          throw fail("symbol '" + jrow[c].get<std::string>() + "' at (" + std::to_string(i) + "," +
                     std::to_string(r) + "," + std::to_string(c) + ") is outside the alphabet");
        m.set(r, c, *w);
      }
    }
    mats.push_back(std::move(m));
  }
  return QuintNet(std::move(mats), std::move(label));
}

void save_net(const QuintNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_net: cannot open " + path);
  out << serialize(net).dump(1) << "\n";
}

QuintNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_net: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  return deserialize(doc);
}

}  // namespace quintnet
