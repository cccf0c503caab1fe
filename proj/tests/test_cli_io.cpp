#include "peierls/cli_io.hpp"

#include <doctest.h>

#include <algorithm>

using namespace peierls;
using namespace peierls::io;

namespace {

bool has_error(const ParseResult& r, const std::string& path) {
  return std::any_of(r.errors.begin(), r.errors.end(), [&](const std::string& e) { return e.rfind(path + ":", 0) == 0; });
}

const char* kMinimal = R"({
  "experiment": "bands",
  "potential": {"preset": "mathieu", "v": 1.0},
  "numerics": {"cutoff": 8, "kgrid": [64]}
})";

}  // namespace

TEST_CASE("minimal bands configuration") {
  const ParseResult r = parse_config(kMinimal);
  REQUIRE(r.errors.empty());
  REQUIRE(r.config.has_value());
  CHECK(r.config->experiment == Experiment::Bands);
  CHECK(r.config->numerics.cutoff == 8);
  CHECK(r.config->numerics.kgrid == std::vector<int>{64});
}

TEST_CASE("every violation is reported with its path") {
  const ParseResult r = parse_config(R"({
    "experiment": "egorov",
    "potential": {"preset": "mathieu", "vv": 1.0},
    "numerics": {"eps": [0.05, 0.1], "dt": "fast"},
    "tolerances": {"ratio_min": -3, "min_gap": 1},
    "colour": "blue"
  })");
  CHECK_FALSE(r.config.has_value());
  CHECK(has_error(r, "potential.vv"));
  CHECK(has_error(r, "numerics.dt"));
  CHECK(has_error(r, "numerics.eps"));
  CHECK(has_error(r, "tolerances.ratio_min"));
  CHECK(has_error(r, "tolerances.min_gap"));
  CHECK(has_error(r, "colour"));

  CHECK(has_error(parse_config(R"({"experiment": "flow"})"), "potential"));
  CHECK(has_error(parse_config(R"({"potential": {"preset": "mathieu"}})"), "experiment"));
  CHECK(has_error(parse_config(R"({"experiment": "bands", "potential": {"preset": "mathieu"}, "tolerances": {"min_gap": -1}})"),
                  "tolerances.min_gap"));
  CHECK(has_error(parse_config("{\"experiment\": \"bands\", }"), "<root>"));
  CHECK(has_error(parse_config(R"({"experiment": "bands", "potential": {"preset": "mathieu2d"}, "numerics": {"kgrid": [8]}})"),
                  "numerics.kgrid"));
}

TEST_CASE("configuration round trip") {
  RunConfig c;
  c.experiment = Experiment::Propagate;
  c.potential.preset = "custom";
  c.potential.basis = {{1.0, 0.0}, {0.5, 0.8}};
  c.potential.coefficients = {{{1, 0}, 0.2, 0.1}, {{-1, 0}, 0.2, -0.1}};
  c.field.b = 0.3;
  c.field.force = {0.1, -0.2};
  c.numerics.eps = {0.1, 0.05, 0.025};
  c.numerics.k0 = 0.1 + 0.2;
  c.tolerances = {{"slope_min", 1.0}};
  c.seed = 18446744073709551615ull;
  const ParseResult r = parse_config(serialize_config(c).dump());
  REQUIRE(r.errors.empty());
  CHECK(*r.config == c);
}

TEST_CASE("bands run: schema, precision and determinism") {
  RunConfig c = *parse_config(R"({
    "experiment": "bands",
    "potential": {"preset": "zero", "dim": 1},
    "numerics": {"cutoff": 2, "kgrid": [5], "bands": 2},
    "tolerances": {"min_gap": 1e-3}
  })").config;
  const RunReport a = run(c), b = run(c);
  REQUIRE(a.tables.size() == 1);
  const std::string csv = format_csv(a.tables[0]);
  CHECK(csv == format_csv(b.tables[0]));
  CHECK(a.results.dump() == b.results.dump());
  CHECK(csv.rfind("k_1 [1/a],E_0 [hbar^2/(m a^2)],E_1 [hbar^2/(m a^2)]\n", 0) == 0);
  // first shifted grid point k = -2 pi (1/2 - 1/10), E_0 = k^2 / 2 at 17 significant digits
  const Real k = -two_pi * 0.4;
  char expect[64];
  std::snprintf(expect, sizeof expect, "%.17g,%.17g,", k, 0.5 * k * k);
  CHECK(csv.find(std::string("\n") + expect) != std::string::npos);
  CHECK(a.passed());
}

TEST_CASE("butterfly run schema") {
  RunConfig c;
  c.experiment = Experiment::Butterfly;
  c.numerics.q_max = 4;
  c.numerics.theta_points = 16;
  const RunReport rep = run(c);
  REQUIRE(rep.tables.size() == 1);
  const Table& t = rep.tables[0];
  CHECK(t.header == std::vector<std::string>{"alpha", "band_index", "E_min [hbar^2/(m a^2)]", "E_max [hbar^2/(m a^2)]", "chern"});
  // 0, 1/4, 1/3, 1/2, 2/3, 3/4, 1 -> 1 + 4 + 3 + 2 + 3 + 4 + 1 rows
  CHECK(t.rows.size() == 18);
  CHECK(rep.passed());
  const std::string csv = format_csv(t);
  CHECK(csv.find(",,") == std::string::npos);
  CHECK(csv.find(",\n") != std::string::npos);  // half flux: touching bands have no Chern label
}

TEST_CASE("csv formatting") {
  const Table t{"x", {"a", "b"}, {{0.1, std::numeric_limits<Real>::quiet_NaN()}}};
  CHECK(format_csv(t) == "a,b\n0.10000000000000001,\n");
  CHECK(format_plot(t) == "# a b\n0.10000000000000001 nan\n");
}
