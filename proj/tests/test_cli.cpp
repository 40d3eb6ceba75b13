#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "quintnet/net.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace quintnet;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(QUINTNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string tmp_path(const std::string& name) {
  return std::string("/tmp/quintnet_test_") + name;
}

}  // namespace

TEST_CASE("build writes a valid network file") {
  const std::string out = tmp_path("mult8.json");
  CHECK(run("build --block mult --m 8 --out " + out) == 0);
  const QuintNet net = load_net(out);
  CHECK(net.depth() == 2 * 8 + 4);
  CHECK(stats(net).max_width == 9);
  std::remove(out.c_str());
}

TEST_CASE("build const emits the planned constant") {
  const std::string out = tmp_path("const.json");
  CHECK(run("build --block const --delta 3 --targets 5 --out " + out) == 0);
  const QuintNet net = load_net(out);
  const auto v = eval_exact(net, std::vector<Dyadic>{Dyadic(1)});
  CHECK(v[1] == Dyadic::from_parts(5, 3));
  std::remove(out.c_str());
}

TEST_CASE("build multr r=1 is a passthrough") {
  const std::string out = tmp_path("pass.json");
  CHECK(run("build --block multr --r 1 --m 3 --out " + out) == 0);
  const QuintNet net = load_net(out);
  CHECK(net.depth() == 0);
  CHECK(eval_exact(net, std::vector<Dyadic>{Dyadic(1), Dyadic::from_parts(3, 2)})[0] ==
        Dyadic::from_parts(3, 2));
  std::remove(out.c_str());
}

TEST_CASE("verify passes on fresh blocks") {
  CHECK(run("verify --block mult --m-range 1..4 --grid 33") == 0);
  CHECK(run("verify --block multr --r 3 --m-range 3..4 --grid 17") == 0);
  CHECK(run("verify --block nm --m-range 1..3 --grid 17") == 0);
}

TEST_CASE("verify fails on a corrupted net") {
  // A Mult_4 with one weight flipped no longer meets the Lemma bound.
  QuintNet mult = [&] {
    const std::string out = tmp_path("mult4.json");
    REQUIRE(run("build --block mult --m 4 --out " + out) == 0);
    QuintNet net = load_net(out);
    std::remove(out.c_str());
    return net;
  }();
  auto mats = mult.matrices();
  mats.back().set(0, 1, QuintWeight::Two);  // output selector doubled
  const QuintNet corrupted(std::move(mats), "corrupted");
  const std::string path = tmp_path("corrupted.json");
  save_net(corrupted, path);
  CHECK(run("verify --block mult --m-range 4..4 --grid 33 --net " + path) == 1);
  std::remove(path.c_str());
}

TEST_CASE("usage and precondition errors exit with 2") {
  CHECK(run("build --block nosuch") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("build") == 2);                                   // missing --block
  CHECK(run("approx --target linear --N 3 --m 4") == 2);      // Theorem-2 precondition
  CHECK(run("approx --target nosuch --N 16 --m 4") == 2);
  CHECK(run("build --block const --delta 3 --targets 9") == 2);  // out of range
}

TEST_CASE("approx runs end to end") {
  const std::string out = tmp_path("approx.json");
  CHECK(run("approx --target zero --N 6 --m 4 --grid 65 --out " + out) == 0);
  const QuintNet net = load_net(out);
  CHECK(eval_exact(net, std::vector<Dyadic>{Dyadic(1), Dyadic::from_parts(1, 2)})[0] == Dyadic(0));
  std::remove(out.c_str());
  CHECK(run("approx --target linear --K 4 --N 16 --m 8 --grid 257") == 0);
}

TEST_CASE("count and stats") {
  CHECK(run("count --L 1 --pmax 2 --s 1") == 0);
  const std::string out = tmp_path("nm.json");
  CHECK(run("build --block nm --m 2 --out " + out) == 0);
  CHECK(run("stats --net " + out) == 0);
  std::remove(out.c_str());
}

TEST_CASE("regress writes a deterministic CSV") {
  const std::string csv1 = tmp_path("r1.csv"), csv2 = tmp_path("r2.csv");
  const std::string flags = "regress --target linear --beta 1 --K 1 --n-list 256,512 --seed 5 --csv ";
  CHECK(run(flags + csv1) == 0);
  CHECK(run(flags + csv2) == 0);
  std::ifstream f1(csv1), f2(csv2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().rfind("n,N,m,depth,max_width,l0,l1,heldout_mse,rate_bound,seed", 0) == 0);
  std::remove(csv1.c_str());
  std::remove(csv2.c_str());
}

TEST_CASE("sweep writes CSV rows") {
  const std::string csv = tmp_path("sweep.csv");
  CHECK(run("sweep --block mult --m-range 1..3 --grid 33 --csv " + csv) == 0);
  std::ifstream f(csv);
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == 4);  // header + 3
  std::remove(csv.c_str());
}
