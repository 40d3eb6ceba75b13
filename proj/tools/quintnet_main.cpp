#include "quintnet/analysis.hpp"
#include "quintnet/atoms.hpp"
#include "quintnet/constants.hpp"
#include "quintnet/net.hpp"
#include "quintnet/taylor.hpp"

#include "CLI11.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

namespace {

using namespace quintnet;

constexpr int kExitOk = 0;
constexpr int kExitBoundFail = 1;
constexpr int kExitUsage = 2;

void print_stats(const QuintNet& net) {
  const NetStats s = stats(net);
  std::printf("label        %s\n", net.label().c_str());
  std::printf("depth        %zu\n", s.depth);
  std::printf("max_width    %zu\n", s.max_width);
  std::printf("l0           %zu\n", s.l0);
  std::printf("l1           %s (~%.6g)\n", s.l1.to_string().c_str(), to_double(s.l1));
  std::printf("widths       ");
  for (std::size_t w : net.widths()) std::printf("%zu ", w);
  std::printf("\n");
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    out.push_back(std::stoull(csv.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::pair<unsigned, unsigned> parse_range(const std::string& text) {
  const std::size_t dots = text.find("..");
  if (dots == std::string::npos) {
    const unsigned v = static_cast<unsigned>(std::stoul(text));
    return {v, v};
  }
  return {static_cast<unsigned>(std::stoul(text.substr(0, dots))),
          static_cast<unsigned>(std::stoul(text.substr(dots + 2)))};
}

// Max over the dyadic grid of the channelwise |net(1,x) - x^alpha| for the
// monomial bank (multi-output, so not expressible through sup_error_*).
Dyadic mon_sup_error(const QuintNet& net, std::size_t d, double gamma, std::size_t resolution) {
  const auto alphas = multi_indices(d, gamma);
  const std::size_t steps = resolution - 1;
  const unsigned denom = static_cast<unsigned>(std::countr_zero(steps));
  const Evaluator ev(net);
  std::vector<std::size_t> idx(d, 0);
  std::vector<Dyadic> input(1 + d);
  input[0] = Dyadic(1);
  Dyadic worst;
  for (;;) {
    for (std::size_t j = 0; j < d; ++j)
      input[1 + j] = Dyadic::from_parts(static_cast<long long>(idx[j]), denom);
    const auto out = ev.exact(input);
    for (std::size_t c = 0; c < alphas.size(); ++c) {
      Dyadic mono(1);
      for (std::size_t j = 0; j < d; ++j)
        for (unsigned rep = 0; rep < alphas[c][j]; ++rep) mono = mono * input[1 + j];
      const Dyadic err = abs(out[c] - mono);
      if (worst < err) worst = err;
    }
    std::size_t axis = d;
    bool done = true;
    while (axis > 0) {
      --axis;
      if (idx[axis] < steps) {
        ++idx[axis];
        std::fill(idx.begin() + static_cast<std::ptrdiff_t>(axis) + 1, idx.end(), 0);
        done = false;
        break;
      }
    }
    if (done) break;
  }
  return worst;
}

// Exact deviation of the N_m block from its scalar oracle over a (u, h) grid.
Dyadic nm_sup_error(const QuintNet& net, unsigned m, std::size_t resolution) {
  const std::size_t steps = resolution - 1;
  const unsigned denom = static_cast<unsigned>(std::countr_zero(steps));
  const Evaluator ev(net);
  Dyadic worst;
  for (std::size_t iu = 0; iu < resolution; ++iu) {
    const Dyadic u = Dyadic::from_parts(static_cast<long long>(iu), denom);
    const Dyadic expected_wave = r_sum(m + 1, u);
    for (std::size_t ih = 0; ih < resolution; ++ih) {
      const Dyadic h = Dyadic::from_parts(static_cast<long long>(ih), denom);
      const std::vector<Dyadic> input = {Dyadic::from_parts(1, 2), half(u), h,
                                         relu(u - Dyadic::from_parts(1, 1))};
      const auto out = ev.exact(input);
      const Dyadic err = abs(out[0] - (expected_wave + h));
      if (worst < err) worst = err;
    }
  }
  return worst;
}

struct VerifyRow {
  std::string block;
  unsigned m = 0;
  std::size_t grid = 0;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

int run_verify_rows(const std::vector<VerifyRow>& rows, const std::string& csv_path) {
  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    csv << "block,m,grid,sup_error,bound,pass\n";
  }
  bool all = true;
  std::printf("%-10s %4s %7s %14s %14s  %s\n", "block", "m", "grid", "sup_error", "bound", "status");
  for (const auto& r : rows) {
    all = all && r.pass;
    std::printf("%-10s %4u %7zu %14.6e %14.6e  %s\n", r.block.c_str(), r.m, r.grid, r.measured,
                r.bound, r.pass ? "PASS" : "FAIL");
    if (csv.is_open())
      csv << r.block << ',' << r.m << ',' << r.grid << ',' << std::scientific << r.measured << ','
          << r.bound << ',' << (r.pass ? 1 : 0) << "\n";
  }
  return all ? kExitOk : kExitBoundFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quintnet: exact construction and verification of {0,±1/2,±1,2}-parameter ReLU networks"};
  app.require_subcommand(1);

  // ---- build -----------------------------------------------------------
  auto* build = app.add_subcommand("build", "build a block network and write it as JSON");
  std::string build_block, build_targets, build_out;
  unsigned build_m = 4, build_r = 2, build_delta = 3;
  double build_gamma = 2.0;
  std::size_t build_d = 1;
  build->add_option("--block", build_block, "mult|multr|mon|nm|const")->required();
  build->add_option("--m", build_m, "accuracy parameter m");
  build->add_option("--r", build_r, "product arity (multr)");
  build->add_option("--gamma", build_gamma, "degree bound (mon)");
  build->add_option("--d", build_d, "input dimension (mon)");
  build->add_option("--delta", build_delta, "constants exponent (const)");
  build->add_option("--targets", build_targets, "comma-separated integer targets (const)");
  build->add_option("--out", build_out, "output JSON path");

  // ---- verify ----------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "measure block errors against the lemma bounds");
  std::string verify_block, verify_mrange = "1..8", verify_net, verify_csv;
  std::size_t verify_grid = 129, verify_d = 2;
  unsigned verify_r = 2;
  double verify_gamma = 2.0;
  verify->add_option("--block", verify_block, "mult|multr|mon|nm")->required();
  verify->add_option("--m-range", verify_mrange, "m range, e.g. 1..12");
  verify->add_option("--grid", verify_grid, "grid points per axis (power of two plus one)");
  verify->add_option("--r", verify_r, "product arity (multr)");
  verify->add_option("--d", verify_d, "dimension (mon)");
  verify->add_option("--gamma", verify_gamma, "degree bound (mon)");
  verify->add_option("--net", verify_net, "verify this serialized net instead of a fresh build");
  verify->add_option("--csv", verify_csv, "also write rows to this CSV file");

  // ---- approx ----------------------------------------------------------
  auto* approx = app.add_subcommand("approx", "assemble the smooth-target approximant");
  std::string approx_target, approx_out;
  std::size_t approx_d = 1, approx_N = 16, approx_grid = 0;
  unsigned approx_m = 8;
  double approx_beta = 0.0, approx_K = 0.0;
  bool approx_exact = false;
  approx->add_option("--target", approx_target, "catalog target name")->required();
  approx->add_option("--d", approx_d, "dimension");
  approx->add_option("--beta", approx_beta, "smoothness (default: catalog value)");
  approx->add_option("--K", approx_K, "ball radius (default: catalog value)");
  approx->add_option("--N", approx_N, "grid budget N")->required();
  approx->add_option("--m", approx_m, "accuracy parameter m")->required();
  approx->add_option("--grid", approx_grid, "sup-error grid per axis (default 1025 / 65)");
  approx->add_flag("--exact", approx_exact, "measure with the exact dyadic evaluator");
  approx->add_option("--out", approx_out, "write the network JSON here");

  // ---- stats -----------------------------------------------------------
  auto* stats_cmd = app.add_subcommand("stats", "print stats of a serialized net");
  std::string stats_net;
  stats_cmd->add_option("--net", stats_net, "network JSON path")->required();

  // ---- count -----------------------------------------------------------
  auto* count = app.add_subcommand("count", "0-entropy bound of the discrete class");
  std::size_t count_L = 1, count_p = 2, count_s = 1;
  count->add_option("--L", count_L, "depth")->required();
  count->add_option("--pmax", count_p, "max width")->required();
  count->add_option("--s", count_s, "sparsity")->required();

  // ---- regress ---------------------------------------------------------
  auto* regress = app.add_subcommand("regress", "plug-in regression sweep");
  std::string regress_target = "linear", regress_nlist = "256,512,1024,2048,4096,8192", regress_csv;
  std::size_t regress_d = 1;
  double regress_beta = 0.0, regress_K = 0.0, regress_F = 0.0;
  std::uint64_t regress_seed = 1;
  bool regress_nonoise = false;
  regress->add_option("--target", regress_target, "catalog target name");
  regress->add_option("--d", regress_d, "dimension");
  regress->add_option("--beta", regress_beta, "smoothness (default: catalog value)");
  regress->add_option("--K", regress_K, "ball radius (default: catalog value)");
  regress->add_option("--F", regress_F, "range bound (default max(K,1))");
  regress->add_option("--n-list", regress_nlist, "comma-separated sample sizes");
  regress->add_option("--seed", regress_seed, "RNG seed");
  regress->add_flag("--no-noise", regress_nonoise, "skip the noise draw (eps = 0 variant)");
  regress->add_option("--csv", regress_csv, "CSV output path");

  // ---- sweep -----------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "verify over an m range, rows to CSV");
  std::string sweep_block = "mult", sweep_mrange = "1..8", sweep_csv = "sweep.csv";
  std::size_t sweep_grid = 129, sweep_d = 2;
  unsigned sweep_r = 2;
  double sweep_gamma = 2.0;
  sweep->add_option("--block", sweep_block, "mult|multr|mon|nm");
  sweep->add_option("--m-range", sweep_mrange, "m range, e.g. 1..12");
  sweep->add_option("--grid", sweep_grid, "grid per axis");
  sweep->add_option("--r", sweep_r, "product arity (multr)");
  sweep->add_option("--d", sweep_d, "dimension (mon)");
  sweep->add_option("--gamma", sweep_gamma, "degree bound (mon)");
  sweep->add_option("--csv", sweep_csv, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (build->parsed()) {
      QuintNet net = [&] {
        if (build_block == "mult") return build_mult(build_m);
        if (build_block == "multr") return build_mult_r(build_r, build_m);
        if (build_block == "mon") return build_mon(build_d, build_gamma, build_m);
        if (build_block == "nm") return build_nm(build_m);
        if (build_block == "const") {
          if (build_targets.empty())
            throw std::invalid_argument("build --block const requires --targets");
          ConstantPlan plan;
          plan.delta = build_delta;
          for (std::size_t y : parse_size_list(build_targets)) plan.targets.push_back(y);
          return build_const_net(plan, 1);
        }
        throw std::invalid_argument("unknown block '" + build_block + "'");
      }();
      print_stats(net);
      if (!build_out.empty()) {
        save_net(net, build_out);
        std::printf("wrote %s\n", build_out.c_str());
      }
      return kExitOk;
    }

    if (verify->parsed() || sweep->parsed()) {
      const bool is_sweep = sweep->parsed();
      const std::string block = is_sweep ? sweep_block : verify_block;
      const auto [m_lo, m_hi] = parse_range(is_sweep ? sweep_mrange : verify_mrange);
      const std::size_t grid = is_sweep ? sweep_grid : verify_grid;
      const unsigned r = is_sweep ? sweep_r : verify_r;
      const std::size_t d = is_sweep ? sweep_d : verify_d;
      const double gamma = is_sweep ? sweep_gamma : verify_gamma;
      const std::string csv = is_sweep ? sweep_csv : verify_csv;

      std::vector<VerifyRow> rows;
      for (unsigned m = m_lo; m <= m_hi; ++m) {
        VerifyRow row;
        row.block = block;
        row.m = m;
        row.grid = grid;
        if (block == "mult") {
          const QuintNet net = verify_net.empty() ? build_mult(m) : load_net(verify_net);
          const auto res = sup_error_exact(
              net, [](std::span<const Dyadic> x) { return x[0] * x[1]; }, grid, 2, true);
          row.measured = res.float_err;
          row.bound = std::ldexp(1.0, -static_cast<int>(m));
          row.pass = !(Dyadic::from_parts(1, m) < res.exact_err);
        } else if (block == "multr") {
          const QuintNet net = verify_net.empty() ? build_mult_r(r, m) : load_net(verify_net);
          const auto res = sup_error_exact(
              net,
              [](std::span<const Dyadic> x) {
                Dyadic p(1);
                for (const auto& v : x) p = p * v;
                return p;
              },
              grid, r, true);
          row.measured = res.float_err;
          row.bound = static_cast<double>(r) * r * std::ldexp(1.0, -static_cast<int>(m));
          row.pass = !(Dyadic::from_parts(static_cast<long long>(r) * r, m) < res.exact_err);
        } else if (block == "mon") {
          const QuintNet net = verify_net.empty() ? build_mon(d, gamma, m) : load_net(verify_net);
          const Dyadic err = mon_sup_error(net, d, gamma, grid);
          row.measured = to_double(err);
          row.bound = gamma * gamma * std::ldexp(1.0, -static_cast<int>(m));
          row.pass = to_double(err) <= row.bound;
        } else if (block == "nm") {
          const QuintNet net = verify_net.empty() ? build_nm(m) : load_net(verify_net);
          const Dyadic err = nm_sup_error(net, m, grid);
          row.measured = to_double(err);
          row.bound = 0.0;
          row.pass = err.is_zero();
        } else {
          throw std::invalid_argument("unknown block '" + block + "'");
        }
        rows.push_back(row);
      }
      return run_verify_rows(rows, csv);
    }

    if (approx->parsed()) {
      SmoothTarget target = catalog_target(approx_target, approx_d);
      if (approx_beta > 0) target.beta = approx_beta;
      if (approx_K > 0) target.K = approx_K;
      const ApproxConfig cfg = make_config(target, approx_N, approx_m);
      std::printf("config: N=%zu m=%u | Ntilde=%zu nu=%u M=%zu B=%lld b=%u Delta=%u D=%.6g\n",
                  cfg.N, cfg.m, cfg.N_tilde, cfg.nu, cfg.M, cfg.B, cfg.b, cfg.delta, cfg.D);
      const QuintNet net = assemble(target, cfg);
      print_stats(net);
      const auto vr = validate(net);
      std::printf("validate     %s\n", vr.ok ? "ok" : vr.message.c_str());

      const StructureCheck sc = check_structure(net, cfg);
      std::printf("structure    depth %zu <= %.6g : %s\n", sc.actual.depth, sc.bounds.L_tilde_bound,
                  sc.depth_ok ? "PASS" : "FAIL");
      std::printf("structure    width %zu <= %.6g : %s\n", sc.actual.max_width,
                  sc.bounds.width_tilde_bound, sc.width_ok ? "PASS" : "FAIL");
      std::printf("structure    l0 %zu within budget : %s\n", sc.actual.l0,
                  sc.sparsity_ok ? "PASS" : "FAIL");

      const std::size_t grid = approx_grid ? approx_grid : (target.d == 1 ? 1025 : 65);
      SupErrorResult res;
      if (approx_exact) {
        std::vector<double> dummy;
        res = sup_error_exact(
            net,
            [&](std::span<const Dyadic> x) {
              std::vector<double> xd(x.size());
              for (std::size_t j = 0; j < x.size(); ++j) xd[j] = to_double(x[j]);
              return Dyadic::from_double(target.value(xd));
            },
            grid, target.d, true);
      } else {
        res = sup_error_float(
            net, [&](std::span<const double> x) { return target.value(x); }, grid, target.d, true);
      }
      const BoundReport bounds = thm2_bounds(target.beta, target.d, target.K, cfg.N, cfg.m);
      const bool err_ok = res.float_err <= bounds.err_tilde_bound;
      std::printf("sup error    %.6e (grid %zu^%zu, %s evaluator) <= bound %.6e : %s\n",
                  res.float_err, grid, target.d, approx_exact ? "exact" : "binary64",
                  bounds.err_tilde_bound, err_ok ? "PASS" : "FAIL");
      if (!approx_out.empty()) {
        save_net(net, approx_out);
        std::printf("wrote %s\n", approx_out.c_str());
      }
      return (sc.ok() && vr.ok && err_ok) ? kExitOk : kExitBoundFail;
    }

    if (stats_cmd->parsed()) {
      const QuintNet net = load_net(stats_net);
      print_stats(net);
      const auto vr = validate(net);
      std::printf("validate     %s\n", vr.ok ? "ok" : vr.message.c_str());
      return vr.ok ? kExitOk : kExitBoundFail;
    }

    if (count->parsed()) {
      const CountResult res = count_networks(count_L, count_p, count_s);
      std::printf("bound        %s\n", res.bound.str().c_str());
      std::printf("partial_sum  %s\n", res.partial_sum.str().c_str());
      std::printf("log2(bound)  %.6f\n", res.log2_bound);
      return kExitOk;
    }

    if (regress->parsed()) {
      SmoothTarget target = catalog_target(regress_target, regress_d);
      if (regress_beta > 0) target.beta = regress_beta;
      if (regress_K > 0) target.K = regress_K;
      const double F = regress_F > 0 ? regress_F : std::max(target.K, 1.0);
      const auto ns = parse_size_list(regress_nlist);
      const auto records =
          regression_simulate(target, F, ns, regress_seed, !regress_nonoise);
      std::printf("%8s %5s %4s %6s %6s %8s %12s %12s %12s\n", "n", "N", "m", "depth", "width",
                  "l0", "heldout_mse", "mc_se", "rate_bound");
      std::ofstream csv;
      if (!regress_csv.empty()) {
        csv.open(regress_csv);
        csv << "n,N,m,depth,max_width,l0,l1,heldout_mse,rate_bound,seed\n";
      }
      for (const auto& rec : records) {
        if (rec.skipped) {
          std::printf("%8zu skipped: %s\n", rec.n, rec.skip_reason.c_str());
          continue;
        }
        std::printf("%8zu %5zu %4u %6zu %6zu %8zu %12.6e %12.6e %12.6e\n", rec.n, rec.N, rec.m,
                    rec.depth, rec.max_width, rec.l0, rec.heldout_mse, rec.heldout_se,
                    rec.rate_bound);
        if (csv.is_open()) {
          char line[256];
          std::snprintf(line, sizeof line, "%zu,%zu,%u,%zu,%zu,%zu,%.17g,%.17g,%.17g,%" PRIu64 "\n",
                        rec.n, rec.N, rec.m, rec.depth, rec.max_width, rec.l0, rec.l1,
                        rec.heldout_mse, rec.rate_bound, rec.seed);
          csv << line;
        }
      }
      if (!regress_csv.empty()) std::printf("wrote %s\n", regress_csv.c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
