#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wavelab/cli.hpp"
#include "wavelab/errors.hpp"

using namespace wavelab;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wavelab_cli_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse("# comment\nn_cells = 50\nx0 = 0.5, 0.5  # trailing\n");
  CHECK(c.integer("n_cells") == 50);
  CHECK(c.numbers("x0") == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("no equals sign\n"), InvalidArgument);
  CHECK_THROWS_AS(Config::load("/nonexistent/wavelab.cfg"), InvalidArgument);
  CHECK_THROWS_AS(c.number("missing"), InvalidArgument);
  CHECK_THROWS_AS(split_assignment("novalue"), InvalidArgument);

  Config bad;
  bad.set("mystery", "1");
  CHECK_THROWS_AS(bad.resolve(subcommand_schema("geometry")), InvalidArgument);
}

TEST_CASE("config echo round trip") {
  Config c;
  c.set("shape", "square");
  c.set("x0", "0.5,0.5");
  c.resolve(subcommand_schema("geometry"));
  const Config back = Config::parse(c.echo());
  CHECK(back.echo() == c.echo());
  CHECK(back.hash() == c.hash());
}

TEST_CASE("geometry subcommand") {
  const std::string dir = scratch("geometry");
  const Run r = cli({"geometry", "--shape", "square", "--x0", "0.5,0.5", "--out-dir", dir});
  REQUIRE(r.code == kExitOk);
  const auto line = nlohmann::json::parse(r.out);
  CHECK(line["2R"].get<double>() == doctest::Approx(1.4142135623730951).epsilon(1e-15));
  CHECK(line["T_min"].get<double>() == doctest::Approx(1.4142135623730951));
  CHECK(line["gamma_x0"].size() == 4);
  CHECK(fs::exists(dir + "/config.txt"));
  CHECK(fs::exists(dir + "/geometry.json"));

  // The echoed config reproduces the run.
  const std::string again = scratch("geometry_again");
  const Run r2 = cli({"geometry", "--config", dir + "/config.txt", "--set", "out_dir=" + again});
  REQUIRE(r2.code == kExitOk);
  CHECK(slurp(again + "/geometry.json") == slurp(dir + "/geometry.json"));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("configuration errors exit with 2") {
  const Run missing = cli({"geometry", "--config", "/nonexistent/wavelab.cfg"});
  CHECK(missing.code == kExitConfig);
  const auto rec = nlohmann::json::parse(missing.err);
  CHECK(rec["exit_code"] == kExitConfig);
  CHECK(rec["error"] == "invalid_argument");

  CHECK(cli({"geometry", "--set", "mystery=1"}).code == kExitConfig);
  CHECK(cli({"geometry", "--no-such-flag"}).code == kExitConfig);
  CHECK(cli({"frobnicate"}).code == kExitConfig);
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"geometry", "--shape", "triangle"}).code == kExitConfig);
  CHECK(cli({"simulate", "--n-cells", "2"}).code == kExitConfig);
  CHECK(cli({"reproduce", "no_such_scenario"}).code == kExitConfig);
}

TEST_CASE("precedence: defaults < config < flags < --set") {
  const std::string dir = scratch("precedence");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir + "/run.cfg");
    cfg << "shape = interval\nx_right = 3\nout_dir = " << dir << "\n";
  }
  auto radius = [&](const std::vector<std::string>& extra) {
    std::vector<std::string> args{"geometry", "--config", dir + "/run.cfg"};
    args.insert(args.end(), extra.begin(), extra.end());
    const Run r = cli(args);
    REQUIRE(r.code == kExitOk);
    return nlohmann::json::parse(r.out)["R"].get<double>();
  };
  CHECK(radius({}) == doctest::Approx(3.0));
  CHECK(radius({"--x-right", "5"}) == doctest::Approx(5.0));
  CHECK(radius({"--x-right", "5", "--set", "x_right=7"}) == doctest::Approx(7.0));
  fs::remove_all(dir);
}

TEST_CASE("simulate and stabilize write their outputs") {
  const std::string dir = scratch("simulate");
  const Run r = cli({"simulate", "--n-cells", "40", "--horizon", "1", "--out-dir", dir});
  REQUIRE(r.code == kExitOk);
  const auto line = nlohmann::json::parse(r.out);
  CHECK(line["balance_residual"].get<double>() < 1e-10);
  CHECK(fs::exists(dir + "/energy.csv"));
  CHECK(fs::exists(dir + "/final_state.csv"));

  const std::string sdir = scratch("stabilize");
  const Run s = cli({"stabilize", "--n-cells", "50", "--horizon", "10", "--out-dir", sdir});
  REQUIRE(s.code == kExitOk);
  CHECK(nlohmann::json::parse(s.out)["energy_nonincreasing"] == true);
  fs::remove_all(dir);
  fs::remove_all(sdir);
}

TEST_CASE("stabilize sweep manifest") {
  const std::string dir = scratch("sweep");
  fs::create_directories(dir);
  {
    std::ofstream m(dir + "/manifest.csv");
    m << "id,law,placement,n_cells,horizon\nlin,linear,internal,40,10\ncub,power3,internal,40,20\n";
  }
  const Run r = cli({"stabilize", "--manifest", dir + "/manifest.csv", "--out-dir", dir + "/out"});
  REQUIRE(r.code == kExitOk);
  CHECK(nlohmann::json::parse(r.out)["runs"] == 2);
  CHECK(fs::exists(dir + "/out/sweep.csv"));
  CHECK(fs::exists(dir + "/out/lin.json"));

  {
    std::ofstream m(dir + "/broken.csv");
    m << "id,law,placement,n_cells,horizon\nx,linear,internal\n";
  }
  CHECK(cli({"stabilize", "--manifest", dir + "/broken.csv", "--out-dir", dir + "/out"}).code ==
        kExitConfig);
  fs::remove_all(dir);
}

TEST_CASE("runs are deterministic for a fixed seed") {
  const std::string a = scratch("det_a"), b = scratch("det_b");
  const std::vector<std::string> base{"observe", "--n-cells", "60", "--samples", "8", "--seed", "11"};
  auto with_dir = [&](const std::string& d) {
    auto v = base;
    v.insert(v.end(), {"--out-dir", d});
    return v;
  };
  REQUIRE(cli(with_dir(a)).code == kExitOk);
  REQUIRE(cli(with_dir(b)).code == kExitOk);
  CHECK(slurp(a + "/report.json") == slurp(b + "/report.json"));
  CHECK(slurp(a + "/samples.csv") == slurp(b + "/samples.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("reproduce runs a named scenario") {
  const std::string dir = scratch("reproduce");
  const Run r = cli({"reproduce", "geometry_constants", "--out-dir", dir});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir + "/geometry_constants/report.json"));
  const Run list = cli({"reproduce", "--list"});
  CHECK(list.code == kExitOk);
  CHECK(list.out.find("determinism") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("help and version exit cleanly") {
  CHECK(cli({"--help"}).code == kExitOk);
  const Run v = cli({"--version"});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find("0.4.0") != std::string::npos);
}
