#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoctl/cli.hpp"
#include "chronoctl/config.hpp"

using namespace chronoctl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "chronoctl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) {
  return (fs::path(CHRONOCTL_SOURCE_DIR) / "fixtures" / name).string();
}

// Scratch directory for generated configs, removed at the end of each test.
struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("chronoctl_cli_" + std::to_string(std::rand()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, const json& j) const {
    const fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }
};

json integer_config(const char* direction, json A, json B, json C, int lo, int hi, int anchor) {
  return {{"timescale", {{"kind", "integers"}, {"window", {lo, hi}}}},
          {"direction", direction},
          {"A", std::move(A)},
          {"B", std::move(B)},
          {"C", std::move(C)},
          {"anchor", anchor}};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("analyze on the shipped fixtures") {
  const Run comp = run({"analyze", fixture("companion_2x2.json"), "--test", "controllability"});
  REQUIRE(comp.code == 0);
  const json c = json::parse(comp.out);
  CHECK(c["controllability"]["controllable"] == true);
  CHECK(c["controllability"]["tests"][0]["rank"] == 2);
  CHECK(c["controllability"]["tests_agree"] == true);
  CHECK_FALSE(c.contains("observability"));
  CHECK(c["version"] == kVersion);
  CHECK(c["tolerances"]["rank_relative"] == 1e-9);
  CHECK(c["grid"]["dense_step"] == 0.01);
  CHECK_FALSE(c.contains("wall_time_seconds"));

  const Run tv = run({"analyze", fixture("tv_two_input.json"), "--sc", "2", "--r", "1",
                      "--test", "controllability"});
  REQUIRE(tv.code == 0);
  const json t = json::parse(tv.out);
  CHECK(t["controllability"]["controllable"] == true);

  const Run tri = run({"analyze", fixture("triangular_minimal.json"), "--test", "both"});
  REQUIRE(tri.code == 0);
  const json b = json::parse(tri.out);
  CHECK(b["controllability"]["controllable"] == true);
  CHECK(b["observability"]["observable"] == true);

  const Run timed = run({"analyze", fixture("companion_2x2.json"), "--timing"});
  CHECK(json::parse(timed.out).contains("wall_time_seconds"));
}

TEST_CASE("reports are byte-identical across runs") {
  for (const char* name : {"companion_2x2.json", "tv_two_input.json", "triangular_minimal.json"}) {
    for (const char* cmd : {"analyze", "realize", "simulate", "dualize"}) {
      const Run a = run({cmd, fixture(name)});
      const Run b = run({cmd, fixture(name)});
      CHECK(a.code == b.code);
      CHECK(a.out == b.out);
    }
  }
}

TEST_CASE("simulate") {
  Scratch scratch;
  json cfg = integer_config("backward", {{"0"}}, {{"1"}}, {{"1"}}, -3, 0, 0);
  cfg["initial_state"] = {5};
  cfg["control"] = {"1"};
  const Run r = run({"simulate", scratch.write("stair.json", cfg)});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"s", "y_1", "gamma_1"});
  for (int k = 0; k < 4; ++k) {
    CHECK(rows[static_cast<std::size_t>(k + 1)][0] == std::to_string(-k));
    CHECK(rows[static_cast<std::size_t>(k + 1)][1] == std::to_string(5 - k));
  }

  json hom = integer_config("backward", {{"-1"}}, {{"1"}}, {{"1"}}, -3, 0, 0);
  hom["initial_state"] = {1};
  hom["control"] = {"0"};
  const auto hrows = csv_rows(run({"simulate", scratch.write("hom.json", hom)}).out);
  REQUIRE(hrows.size() == 5);
  for (int k = 0; k < 4; ++k) CHECK(hrows[static_cast<std::size_t>(k + 1)][1] == std::to_string(1 << k));

  json fwd = integer_config("forward", {{"1"}}, {{"0"}}, {{"1"}}, 0, 3, 0);
  fwd["initial_state"] = {1};
  fwd["control"] = {"0"};
  const auto frows = csv_rows(run({"simulate", scratch.write("fwd.json", fwd)}).out);
  REQUIRE(frows.size() == 5);
  CHECK(frows[0] == std::vector<std::string>{"t", "x_1", "z_1"});
  CHECK(frows[4] == std::vector<std::string>{"3", "8", "8"});

  const fs::path target = scratch.dir / "out.csv";
  CHECK(run({"simulate", scratch.write("stair2.json", cfg), "-o", target.string()}).code == 0);
  std::ifstream in(target);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == r.out);

  cfg.erase("control");
  const Run missing = run({"simulate", scratch.write("nocontrol.json", cfg)});
  CHECK(missing.code == exit_config);
  CHECK(missing.err.find("control required") != std::string::npos);
}

TEST_CASE("dualize") {
  Scratch scratch;
  json cfg = integer_config("forward", {{"1"}}, {{"s^2"}}, {{"s"}}, 0, 4, 0);
  const Run r = run({"dualize", scratch.write("fwd.json", cfg)});
  REQUIRE(r.code == 0);
  const json d = json::parse(r.out);
  CHECK(d["direction"] == "backward");
  CHECK(d["A"][0][0] == "-(1)");
  CHECK(d["B"][0][0] == "-((-s)^2)");
  CHECK(d["C"][0][0] == "-s");
  CHECK(d["timescale"]["dual"] == true);
  CHECK(d["anchor"] == 0);

  // Double dualization evaluates to the original matrices on the grid.
  const Run twice = run({"dualize", scratch.write("dual.json", d)});
  REQUIRE(twice.code == 0);
  const SystemConfig back = parse_config(json::parse(twice.out));
  const SystemConfig orig = parse_config(cfg);
  CHECK(back.direction == orig.direction);
  const LinearSystem sb = back.system(), so = orig.system();
  REQUIRE(sb.grid() == so.grid());
  for (std::size_t i = 0; i < so.grid().size(); ++i) {
    const double s = so.grid().time(i);
    CHECK(sb.A().eval(s) == so.A().eval(s));
    CHECK(sb.B().eval(s) == so.B().eval(s));
    CHECK(sb.C().eval(s) == so.C().eval(s));
  }
}

TEST_CASE("realize") {
  const Run tri = run({"realize", fixture("triangular_minimal.json")});
  REQUIRE(tri.code == 0);
  const json t = json::parse(tri.out);
  CHECK(t["minimal"] == true);
  CHECK(t["separable_rank"] == 2);
  CHECK(t["factorization"]["residual"].get<double>() <= 1e-8);
  CHECK(t["note"] == "realizable at sampled resolution");

  Scratch scratch;
  // Explicit arrays: a braced pair of strings would become a JSON object.
  const json A = json::array({json::array({"1", "0"}), json::array({"0", "2"})});
  const json C = json::array({json::array({"1", "0"}), json::array({"0", "1"})});
  const json toy = integer_config("backward", A, {{"1"}, {"0"}}, C, -8, 0, 0);
  const Run u = run({"realize", scratch.write("toy.json", toy)});
  REQUIRE(u.code == 0);
  CHECK(json::parse(u.out)["minimal"] == false);

  const Run tv = run({"realize", fixture("tv_two_input.json")});
  CHECK(tv.code == exit_hypothesis);
  CHECK(tv.err.find("progressive") != std::string::npos);

  const std::string prefix = (scratch.dir / "tri").string();
  REQUIRE(run({"realize", fixture("triangular_minimal.json"), "--factors", prefix}).code == 0);
  CHECK(fs::exists(prefix + "_H.csv"));
  CHECK(fs::exists(prefix + "_F.csv"));
}

TEST_CASE("errors and exit codes") {
  Scratch scratch;
  CHECK(run({"analyze", (scratch.dir / "missing.json").string()}).code == exit_config);
  CHECK(run({"frobnicate"}).code == exit_config);
  CHECK(run({}).code == exit_config);
  CHECK(run({"analyze", fixture("companion_2x2.json"), "--r", "7"}).code == exit_config);

  json bad = integer_config("backward", json::array({json::array({"1", "2"})}), {{"1"}}, {{"1"}},
                            -3, 0, 0);
  CHECK(run({"analyze", scratch.write("bad.json", bad)}).code == exit_config);
  bad = integer_config("backward", {{"s +"}}, {{"1"}}, {{"1"}}, -3, 0, 0);
  CHECK(run({"analyze", scratch.write("parse.json", bad)}).code == exit_config);
  std::ofstream(scratch.dir / "garbage.json") << "{ not json";
  CHECK(run({"analyze", (scratch.dir / "garbage.json").string()}).code == exit_config);

  json div = integer_config("backward", {{"1/s"}}, {{"1"}}, {{"1"}}, -3, 0, 0);
  div["initial_state"] = {1};
  div["control"] = {"1"};
  CHECK(run({"simulate", scratch.write("div.json", div)}).code == exit_numeric);

  const Run v = run({"--version"});
  CHECK(v.code == exit_ok);
  CHECK(v.out.find(kVersion) != std::string::npos);
}

TEST_CASE("dense step from the environment") {
  ::setenv("CHRONOCTL_DENSE_STEP", "0.05", 1);
  const Run r = run({"analyze", fixture("companion_2x2.json")});
  ::unsetenv("CHRONOCTL_DENSE_STEP");
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["grid"]["dense_step"] == 0.05);
  // dualize output does not depend on the environment.
  ::setenv("CHRONOCTL_DENSE_STEP", "0.05", 1);
  const Run d1 = run({"dualize", fixture("companion_2x2.json")});
  ::unsetenv("CHRONOCTL_DENSE_STEP");
  CHECK(d1.out == run({"dualize", fixture("companion_2x2.json")}).out);
}
