#include <filesystem>

#include <unistd.h>

#include "doctest.h"
#include "superheat/error.hpp"
#include "superheat/harness.hpp"
#include "superheat/io.hpp"

namespace fs = std::filesystem;
using namespace superheat;

namespace {

fs::path scratch(const char* name) {
  auto p = fs::temp_directory_path() / ("superheat_unit_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("ini round trip") {
  ExperimentConfig c;
  c.nonlinearity = "power_log:p=3,r1=1";
  c.N = 5;
  c.k = 0.25;
  c.initial = "bump:A=3";
  c.M = 128;
  c.solver.scheme = TimeScheme::implicit_trapezoid;
  c.solver.M_max = 1e9;
  c.solver.rtol = 1e-9;
  c.rescaling = true;
  c.classify_options.c_min = 0.2;
  c.output = "out/a";
  auto back = parse_config_ini(render_config_ini(c));
  CHECK(back == c);
  CHECK(parse_config(render_config_ini(c)) == c);
}

TEST_CASE("json config") {
  auto c = parse_config(R"({"problem": {"nonlinearity": "exp", "N": 4},
                            "grid": {"M": 64}, "solver": {"scheme": "implicit_trapezoid"}})");
  CHECK(c.N == 4);
  CHECK(c.M == 64);
  CHECK(c.solver.scheme == TimeScheme::implicit_trapezoid);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config_ini("[problem]\nunknown = 1\n"), Error);
  CHECK_THROWS_AS(parse_config_ini("[grid]\nM = many\n"), Error);
  ExperimentConfig c;
  set_config_value(c, "grid.M", "77");
  CHECK(c.M == 77);
  try {
    set_config_value(c, "grid", "1");
    FAIL("dotted key required");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(exit_status(e.code()) == 2);
  }
}

TEST_CASE("sweep axis") {
  auto a = parse_sweep_axis("problem.N=3|4|5");
  CHECK(a.key == "problem.N");
  CHECK(a.values == std::vector<std::string>{"3", "4", "5"});
  CHECK_THROWS_AS(parse_sweep_axis("problem.N"), Error);
}

TEST_CASE("run directory round trip") {
  ExperimentConfig c;
  c.nonlinearity = "power:p=3";
  c.N = 5;
  c.initial = "bump:A=10";
  c.M = 64;
  c.output = scratch("run").string();
  auto out = run_experiment(c);
  REQUIRE(out.report.has_value());
  CHECK_FALSE(fs::exists(out.directory / kPartialMarker));
  ExperimentConfig back;
  auto run = read_run_directory(out.directory, &back);
  CHECK(back.nonlinearity == c.nonlinearity);
  REQUIRE(run.snapshots.size() == out.run.snapshots.size());
  CHECK(run.snapshots.back().U == out.run.snapshots.back().U);
  CHECK(run.termination == out.run.termination);
  CHECK(run.settle_time == out.run.settle_time);

  io::write_atomic(out.directory / kPartialMarker, "");
  CHECK_THROWS_AS(read_run_directory(out.directory), Error);
  fs::remove_all(out.directory.parent_path());
}

TEST_CASE("small sweep") {
  ExperimentConfig c;
  c.nonlinearity = "power:p=3";
  c.N = 5;
  c.initial = "bump:A=10";
  c.M = 32;
  c.output = scratch("sweep").string();
  auto entries = run_sweep(c, {parse_sweep_axis("problem.N=3|5")}, 2);
  REQUIRE(entries.size() == 2);
  for (const auto& e : entries) CHECK(e.status == "ok");
  CHECK(fs::exists(fs::path(c.output) / "index.csv"));
  CHECK(fs::exists(fs::path(c.output) / "aggregate.csv"));
  fs::remove_all(fs::path(c.output).parent_path());
}
