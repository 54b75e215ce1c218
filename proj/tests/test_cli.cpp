#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "percol/cli.hpp"
#include "percol/errors.hpp"

using namespace percol::cli;
namespace fs = std::filesystem;

namespace {

using Table = std::vector<std::vector<std::string>>;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("percol-cli-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Table read_csv(const fs::path& p) {
  Table t;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    t.push_back(row);
  }
  return t;
}

std::map<std::string, std::string> read_summary(const fs::path& dir) {
  std::map<std::string, std::string> m;
  const Table t = read_csv(dir / "summary.csv");
  for (std::size_t i = 1; i < t.size(); ++i) m[t[i][0]] = t[i].size() > 1 ? t[i][1] : "";
  return m;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.front().size(); ++i)
    if (t.front()[i] == name) return i;
  FAIL("missing column " << name);
  return 0;
}

Json quadratic_config(const fs::path& out) {
  return Json{{"model", "quadratic"},
              {"params", {{"gamma", 4.0}}},
              {"grid", {{"L", 20}, {"m", 3}, {"abscissae", "gauss-legendre"}}},
              {"secondary", {{"M", 40}}},
              {"output", {{"directory", out.string()}}}};
}

int run_quiet(Command c, const Json& config, std::string* err_out = nullptr) {
  std::ostringstream err;
  const int status = execute(c, config, err);
  if (err_out) *err_out = err.str();
  return status;
}

}  // namespace

TEST_CASE("format_double: shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(4.0) == "4");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  for (double v : {1.0 / 3.0, std::sqrt(2.0), 6.02214076e23, 4.9e-324}) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("apply_override") {
  Json c = Json::object();
  apply_override(c, "grid.L=40");
  apply_override(c, "grid.abscissae=chebyshev");
  apply_override(c, "study.Ls=[10,20,40]");
  apply_override(c, "params.gamma=4.2");
  CHECK(c["grid"]["L"] == 40);
  CHECK(c["grid"]["abscissae"] == "chebyshev");
  CHECK(c["study"]["Ls"] == Json::array({10, 20, 40}));
  CHECK(c["params"]["gamma"].get<double>() == 4.2);
  CHECK_THROWS_AS(apply_override(c, "grid.L"), percol::ConfigError);
  CHECK_THROWS_AS(apply_override(c, "=3"), percol::ConfigError);
}

TEST_CASE("effective_config fills defaults") {
  const Json e = effective_config(Command::Solve, Json{{"model", "quadratic"}});
  CHECK(e["grid"]["L"] == 20);
  CHECK(e["grid"]["m"] == 3);
  CHECK(e["grid"]["abscissae"] == "gauss-legendre");
  CHECK(e["newton"]["max_iters"] == 30);
  CHECK(e["newton"]["residual_tol"].get<double>() == 1e-10);
  CHECK(e["params"]["gamma"].get<double>() == 4.0);
  CHECK(effective_config(Command::Solve, e) == e);
}

TEST_CASE("command names") {
  CHECK(parse_command("solve") == Command::Solve);
  CHECK(parse_command("continue") == Command::Continue);
  CHECK(parse_command("converge") == Command::Converge);
  CHECK(to_string(Command::Converge) == "converge");
  CHECK_THROWS_AS(parse_command("plot"), percol::ConfigError);
}

TEST_CASE("validation errors exit with 2 and write nothing") {
  const fs::path out = scratch("invalid");
  auto expect_invalid = [&](Command cmd, Json config, const std::string& fragment) {
    config["output"]["directory"] = out.string();
    std::string err;
    CHECK(run_quiet(cmd, config, &err) == kExitValidation);
    CHECK_FALSE(fs::exists(out));
    const Json record = Json::parse(err);
    CHECK(record["status"] == "error");
    CHECK(record["kind"] == "validation");
    CHECK(record["message"].get<std::string>().find(fragment) != std::string::npos);
  };
  Json bad = quadratic_config(out);
  bad["grid"]["L"] = 0;
  expect_invalid(Command::Solve, bad, "grid.L");
  bad = quadratic_config(out);
  bad["grid"]["foo"] = 1;
  expect_invalid(Command::Solve, bad, "grid.foo");
  bad = quadratic_config(out);
  bad["grid"]["m"] = "three";
  expect_invalid(Command::Solve, bad, "grid.m");
  expect_invalid(Command::Solve, Json{{"model", "plant"}, {"params", {{"tau", 2.0}}}}, "params");
  expect_invalid(Command::Solve, Json{{"model", "custom"}}, "library");
  bad = quadratic_config(out);
  bad["study"]["Ls"] = Json::array({10, 20});
  expect_invalid(Command::Converge, bad, "Ls");
  bad = quadratic_config(out);
  expect_invalid(Command::Continue, bad, "continuation");
}

TEST_CASE("solve: quadratic example") {
  const fs::path out = scratch("solve");
  REQUIRE(run_quiet(Command::Solve, quadratic_config(out)) == kExitSuccess);
  const auto summary = read_summary(out);
  CHECK(std::abs(std::stod(summary.at("omega")) - 4.0) <= 1e-8);
  CHECK(summary.at("config.grid.L") == "20");
  const Table sol = read_csv(out / "solution.csv");
  CHECK(sol.front() == std::vector<std::string>{"t", "x_1", "y_1", "y_deriv_1"});
  CHECK(sol.size() == 1 + 16 * 20 + 1);
  CHECK(slurp(out / "solution.csv").find('\r') == std::string::npos);

  SUBCASE("rerun is byte-identical") {
    const std::string first_solution = slurp(out / "solution.csv");
    const std::string first_summary = slurp(out / "summary.csv");
    REQUIRE(run_quiet(Command::Solve, quadratic_config(out)) == kExitSuccess);
    CHECK(slurp(out / "solution.csv") == first_solution);
    CHECK(slurp(out / "summary.csv") == first_summary);
  }
  SUBCASE("the echoed effective config reproduces the run") {
    const std::string first_solution = slurp(out / "solution.csv");
    const std::string first_summary = slurp(out / "summary.csv");
    REQUIRE(run_quiet(Command::Solve, load_config((out / "effective_config.json").string())) == kExitSuccess);
    CHECK(slurp(out / "solution.csv") == first_solution);
    CHECK(slurp(out / "summary.csv") == first_summary);
  }
}

TEST_CASE("solve: numerical failure exits with 3 and leaves an error record") {
  const fs::path out = scratch("numerical");
  Json c = quadratic_config(out);
  c["params"]["gamma"] = 3.0;  // below the Hopf point: no exact orbit
  std::string err;
  CHECK(run_quiet(Command::Solve, c, &err) == kExitNumerical);
  CHECK(Json::parse(err)["kind"] == "numerical");
  REQUIRE(fs::exists(out / "error.json"));
  CHECK(Json::parse(slurp(out / "error.json"))["status"] == "error");
}

TEST_CASE("continue: single point when the range is empty") {
  const fs::path out = scratch("continue-empty");
  Json c = quadratic_config(out);
  c["continuation"] = {{"parameter", "gamma"}, {"to", 4.0}};
  REQUIRE(run_quiet(Command::Continue, c) == kExitSuccess);
  const Table b = read_csv(out / "branch.csv");
  REQUIRE(b.size() == 2);
  CHECK(std::stod(b[1][column(b, "param")]) == 4.0);
}

TEST_CASE("continue: quadratic branch up to the period doubling") {
  const fs::path out = scratch("continue-quadratic");
  Json c = quadratic_config(out);
  c["grid"] = {{"L", 40}, {"m", 4}};
  c["secondary"]["M"] = 160;
  c["continuation"] = {{"parameter", "gamma"}, {"to", 4.327}};
  REQUIRE(run_quiet(Command::Continue, c) == kExitSuccess);
  const Table b = read_csv(out / "branch.csv");
  REQUIRE(b.size() >= 3);
  const double last = std::stod(b.back()[column(b, "param")]);
  CHECK(last >= 4.30);
  CHECK(last <= 4.327);
  CHECK(b.back()[column(b, "status")] == "completed");
  for (std::size_t i = 2; i < b.size(); ++i)
    CHECK(std::stod(b[i][column(b, "param")]) > std::stod(b[i - 1][column(b, "param")]));
}

TEST_CASE("continue: Daphnia from beta = 4 to 5") {
  const fs::path out = scratch("continue-daphnia");
  const Json c{{"model", "daphnia"},
               {"params", {{"beta", 4.0}}},
               {"grid", {{"L", 20}, {"m", 3}, {"abscissae", "chebyshev"}}},
               {"continuation", {{"parameter", "beta"}, {"to", 5.0}}},
               {"output", {{"directory", out.string()}}}};
  REQUIRE(run_quiet(Command::Continue, c) == kExitSuccess);
  const Table b = read_csv(out / "branch.csv");
  REQUIRE(b.size() >= 2);
  CHECK(std::stod(b.back()[column(b, "param")]) == 5.0);
}

TEST_CASE("converge: quadratic orders") {
  struct Case {
    const char* abscissae;
    double xlo, xhi, ylo, yhi;
  };
  for (const Case& k : {Case{"gauss-legendre", 3.6, 4.6, 3.6, 4.6}, Case{"chebyshev", 3.6, 4.6, 2.6, 3.4}}) {
    const fs::path out = scratch(std::string("converge-") + k.abscissae);
    Json c{{"model", "quadratic"},
           {"params", {{"gamma", 4.327}}},
           {"grid", {{"m", 3}, {"abscissae", k.abscissae}}},
           {"study", {{"Ls", {10, 20, 40, 80}}}},
           {"output", {{"directory", out.string()}}}};
    REQUIRE(run_quiet(Command::Converge, c) == kExitSuccess);
    const Table o = read_csv(out / "orders.csv");
    REQUIRE(o.size() == 2);
    const double ox = std::stod(o[1][0]), oy = std::stod(o[1][1]);
    CAPTURE(k.abscissae);
    CHECK(ox >= k.xlo);
    CHECK(ox <= k.xhi);
    CHECK(oy >= k.ylo);
    CHECK(oy <= k.yhi);
    const Table t = read_csv(out / "convergence.csv");
    CHECK(t.size() == 5);
    CHECK(t[1][column(t, "status")] == "ok");
  }
}

TEST_CASE("converge: Daphnia with Chebyshev abscissae against a fine reference") {
  const fs::path out = scratch("converge-daphnia");
  const Json c{{"model", "daphnia"},
               {"params", {{"beta", 5.0}}},
               {"grid", {{"m", 3}, {"abscissae", "chebyshev"}}},
               {"study", {{"Ls", {10, 20, 40}}}},
               {"output", {{"directory", out.string()}}}};
  REQUIRE(run_quiet(Command::Converge, c) == kExitSuccess);
  const Table o = read_csv(out / "orders.csv");
  const double ox = std::stod(o[1][0]), oy = std::stod(o[1][1]);
  CAPTURE(ox);
  CAPTURE(oy);
  CHECK(ox >= 2.6);
  CHECK(ox <= 3.6);
  CHECK(oy >= 2.6);
  CHECK(oy <= 3.6);
  CHECK(read_summary(out).at("reference") == "fine");
}
