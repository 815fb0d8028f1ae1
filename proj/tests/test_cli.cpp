#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twistlab/cli.hpp"
#include "twistlab/scene_io.hpp"

using namespace twistlab;
using nlohmann::json;

namespace {

struct CliResult {
  int rc = -1;
  std::string out, err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int rc = run_cli(args, out, err);
  return {rc, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("twistlab_test_" + name))
      .string();
}

std::string write_temp(const std::string& name, const std::string& text) {
  std::string path = temp_path(name);
  std::ofstream f(path, std::ios::binary);
  f << text;
  return path;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("generate reproduces the bundled fixtures byte for byte") {
  const std::pair<const char*, const char*> cases[] = {
      {"example43", "scenes/example_43.json"},
      {"example44", "scenes/example_44.json"},
      {"example47", "scenes/example_47.json"},
      {"example48", "scenes/example_48.json"},
  };
  for (auto [family, fixture] : cases) {
    CliResult r = run({"generate", family});
    CHECK(r.rc == 0);
    CHECK(r.out == read_file(fixture));
  }
  // The default r42 parameters are exactly the first example.
  CliResult r42 = run({"generate", "r42"});
  CHECK(r42.rc == 0);
  CHECK(r42.out == read_file("scenes/example_43.json"));
}

TEST_CASE("bundled scenes validate and round-trip through the writer") {
  for (const char* path :
       {"scenes/example_43.json", "scenes/example_44.json",
        "scenes/example_47.json", "scenes/example_48.json",
        "scenes/discrepancy_q1.json"}) {
    CliResult r = run({"validate", path});
    CHECK(r.rc == 0);
    CHECK(r.out.empty());
    CHECK(r.err.find("scene valid") != std::string::npos);
    std::string bytes = read_file(path);
    CHECK(scene_to_json(scene_from_json(bytes)) == bytes);
  }
}

TEST_CASE("check exit codes and report fields match the contract") {
  CliResult pass = run({"check", "scenes/example_43.json", "--order", "2",
                        "--mode", "oracle"});
  CHECK(pass.rc == 0);
  json rep = json::parse(pass.out);
  CHECK(rep["modes"].size() == 1);
  CHECK(rep["modes"][0]["mode"] == "oracle");
  CHECK(rep["modes"][0]["order2"]["sup"].get<double>() < 1e-9);
  CHECK(rep["modes"][0]["order2"]["verdict"] == true);
  CHECK(!rep["modes"][0].contains("order1"));
  CHECK(rep["grid"]["size"] == 81);
  CHECK(rep["scene_sha256"] ==
        sha256_hex(read_file("scenes/example_43.json")));

  CliResult fail = run({"check", "scenes/example_43.json", "--order", "1"});
  CHECK(fail.rc == 1);
  json rep1 = json::parse(fail.out);
  double sup = rep1["modes"][0]["order1"]["sup"].get<double>();
  // tt-defect -(2/3) t^(-2/3) at t = 1.05, normalized by 1 + max|G_tt| = 2
  CHECK(sup ==
        doctest::Approx((2.0 / 3.0) * std::pow(1.05, -2.0 / 3.0) / 2.0)
            .epsilon(1e-12));
  CHECK(rep1["modes"][0]["order1"]["argmax"]["point"]["t"].get<double>() ==
        doctest::Approx(1.05).epsilon(1e-14));
  CHECK(rep1["modes"][0]["order1"]["argmax"]["component"] ==
        json::array({0, 0}));

  CHECK(run({"check", "scenes/discrepancy_q1.json", "--order", "2", "--mode",
             "paper"})
            .rc == 0);
  CHECK(run({"check", "scenes/discrepancy_q1.json", "--order", "2", "--mode",
             "oracle"})
            .rc == 1);
  CHECK(run({"check", "scenes/example_47.json", "--order", "1"}).rc == 0);
  CHECK(run({"check", "scenes/example_48.json", "--order", "1"}).rc == 1);
  CHECK(run({"check", "scenes/example_48.json", "--order", "2"}).rc == 0);
}

TEST_CASE("tolerance override changes the verdict, not the residual") {
  CliResult loose =
      run({"check", "scenes/example_43.json", "--order", "1", "--tol", "0.5"});
  CHECK(loose.rc == 0);
  json rep = json::parse(loose.out);
  CHECK(rep["tolerance"].get<double>() == 0.5);
  CHECK(rep["modes"][0]["order1"]["sup"].get<double>() ==
        doctest::Approx((2.0 / 3.0) * std::pow(1.05, -2.0 / 3.0) / 2.0)
            .epsilon(1e-12));
}

TEST_CASE("compare flags only genuine mode disagreement") {
  CliResult disc = run({"compare", "scenes/discrepancy_q1.json"});
  CHECK(disc.rc == 4);
  json rep = json::parse(disc.out);
  REQUIRE(rep["modes"].size() == 3);
  for (const json& m : rep["modes"]) {
    CHECK(m.contains("order1"));
    CHECK(m.contains("order2"));
  }
  REQUIRE(rep["disagreement"].size() == 1);
  const json& d = rep["disagreement"][0];
  CHECK(d["order"] == 2);
  CHECK(d["paper"].get<double>() == 0.0);
  CHECK(d["oracle"].get<double>() > 0.8);
  CHECK(d["corrected"].get<double>() ==
        doctest::Approx(d["oracle"].get<double>()).epsilon(1e-12));
  // order 1 fails identically in all modes: consistent, so not flagged

  CliResult kill = run({"compare", "scenes/example_47.json"});
  CHECK(kill.rc == 0);
  json krep = json::parse(kill.out);
  CHECK(krep["disagreement"].empty());
  for (const json& m : krep["modes"]) {
    CHECK(m["order1"]["verdict"] == true);
    CHECK(m["order2"]["verdict"] == true);
  }
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  CliResult a = run({"check", "scenes/example_44.json", "--order", "2"});
  CliResult b = run({"check", "scenes/example_44.json", "--order", "2"});
  CHECK(a.out == b.out);
  CliResult t1 = run({"check", "scenes/example_44.json", "--order", "2",
                      "--threads", "1"});
  CliResult t4 = run({"check", "scenes/example_44.json", "--order", "2",
                      "--threads", "4"});
  CHECK(t1.out == a.out);
  CHECK(t4.out == a.out);
  CliResult c1 =
      run({"compare", "scenes/discrepancy_q1.json", "--threads", "1"});
  CliResult c3 =
      run({"compare", "scenes/discrepancy_q1.json", "--threads", "3"});
  CHECK(c1.out == c3.out);
}

TEST_CASE("csv export flattens per-point residuals") {
  std::string csv_path = temp_path("residuals.csv");
  CliResult r = run({"check", "scenes/example_43.json", "--order", "1",
                     "--csv", csv_path});
  CHECK(r.rc == 1);
  std::string csv = read_file(csv_path);
  CHECK(csv.rfind("mode,order,t,x2,residual\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 81);
  CHECK(csv.find("oracle,1,1.05,") != std::string::npos);

  CliResult c = run({"compare", "scenes/discrepancy_q1.json", "--csv",
                     csv_path});
  CHECK(c.rc == 4);
  CHECK(count_lines(read_file(csv_path)) == 1 + 3 * 2 * 81);
  std::remove(csv_path.c_str());
}

TEST_CASE("schema and usage problems exit 2") {
  CHECK(run({"validate", "scenes/does_not_exist.json"}).rc == 2);
  CHECK(run({"validate", write_temp("bad.json", "{")}).rc == 2);
  CHECK(run({"validate", write_temp("nofactors.json", "{\"field\": {}}")})
            .rc == 2);
  // metric entry uses an unknown function
  std::string bad_expr = R"json({
    "factors": [{"name": "base", "vars": ["t"], "metric": [["sin(t)"]],
                 "box": [[0, 1]]}],
    "field": {"lifted": true, "components": [["0"]]}
  })json";
  CliResult r = run({"validate", write_temp("badexpr.json", bad_expr)});
  CHECK(r.rc == 2);
  CHECK(r.err.find("metric") != std::string::npos);
  // metric entry names a variable from another factor
  std::string foreign = R"json({
    "factors": [
      {"name": "base", "vars": ["t"], "metric": [["-1"]], "box": [[0, 1]]},
      {"name": "x2", "vars": ["x2"], "metric": [["t"]], "box": [[0, 1]]}
    ],
    "twists": [{"factor": 1, "f": "1"}],
    "field": {"lifted": true, "components": [["0"], ["0"]]}
  })json";
  CHECK(run({"validate", write_temp("foreign.json", foreign)}).rc == 2);

  CHECK(run({"frobnicate"}).rc == 2);
  CHECK(run({"check"}).rc == 2);
  CHECK(run({"check", "scenes/example_43.json", "--order", "3"}).rc == 2);
  CHECK(run({"check", "scenes/example_43.json", "--mode", "magic"}).rc == 2);
  CHECK(run({"check", "scenes/example_43.json", "--tol", "0"}).rc == 2);
  CHECK(run({"generate", "mystery"}).rc == 2);
  CHECK(run({"generate", "r42", "bogus=1"}).rc == 2);
  CHECK(run({"generate", "r42", "sign=x"}).rc == 2);
  CHECK(run({"generate", "r42", "a=fast"}).rc == 2);
  CHECK(run({}).rc == 2);
}

TEST_CASE("math-domain problems exit 3") {
  // twist reads a variable from a third factor
  std::string scope = R"json({
    "factors": [
      {"name": "base", "vars": ["t"], "metric": [["-1"]], "box": [[1, 2]]},
      {"name": "x2", "vars": ["x2"], "metric": [["1"]], "box": [[0, 1]]},
      {"name": "x3", "vars": ["x3"], "metric": [["1"]], "box": [[0, 1]]}
    ],
    "twists": [{"factor": 1, "f": "exp(x3)"}, {"factor": 2, "f": "1"}],
    "field": {"lifted": true, "components": [["0"], ["0"], ["0"]]}
  })json";
  CliResult r = run({"validate", write_temp("scope.json", scope)});
  CHECK(r.rc == 3);
  CHECK(r.err.find("x3") != std::string::npos);

  // twist goes nonpositive on the sampled box
  std::string nonpos = R"json({
    "factors": [
      {"name": "base", "vars": ["t"], "metric": [["-1"]], "box": [[1, 2]]},
      {"name": "x2", "vars": ["x2"], "metric": [["1"]], "box": [[0, 1]]}
    ],
    "twists": [{"factor": 1, "f": "t - 1.5"}],
    "field": {"lifted": true, "components": [["0"], ["0"]]}
  })json";
  CHECK(run({"validate", write_temp("nonpos.json", nonpos)}).rc == 3);

  // constant negative twist
  std::string negconst = R"json({
    "factors": [
      {"name": "base", "vars": ["t"], "metric": [["-1"]], "box": [[1, 2]]},
      {"name": "x2", "vars": ["x2"], "metric": [["1"]], "box": [[0, 1]]}
    ],
    "twists": [{"factor": 1, "f": "0 - 2"}],
    "field": {"lifted": true, "components": [["0"], ["0"]]}
  })json";
  CHECK(run({"validate", write_temp("negconst.json", negconst)}).rc == 3);

  // degenerate metric
  std::string degen = R"json({
    "factors": [{"name": "base", "vars": ["t"], "metric": [["0"]],
                 "box": [[0, 1]]}],
    "field": {"lifted": true, "components": [["0"]]}
  })json";
  CHECK(run({"validate", write_temp("degen.json", degen)}).rc == 3);

  // family validity-domain violations through generate
  CHECK(run({"generate", "r42", "c1=0"}).rc == 3);
  CHECK(run({"generate", "r42", "c2=-1.5"}).rc == 3);
  CHECK(run({"generate", "r42", "c0p=-0.15"}).rc == 3);
  CHECK(run({"generate", "r410", "ci=-1"}).rc == 3);
}

TEST_CASE("generate feeds check end to end") {
  std::string killing = temp_path("killing.json");
  CHECK(run({"generate", "r410", "c=1", "k=1", "a=1", "ci=1", "--out",
             killing})
            .rc == 0);
  CHECK(run({"check", killing, "--order", "1"}).rc == 0);
  CHECK(run({"check", killing, "--order", "2"}).rc == 0);

  std::string twokilling = temp_path("twokilling.json");
  CHECK(run({"generate", "r46", "c=2", "k=-1", "a=1", "b=0.5", "c0p=0.25",
             "sign=-", "--out", twokilling})
            .rc == 0);
  CHECK(run({"check", twokilling, "--order", "2", "--mode", "paper"}).rc == 0);
  CHECK(run({"check", twokilling, "--order", "1"}).rc == 1);

  std::string flow = temp_path("flow.json");
  CHECK(run({"generate", "base-flow", "c1=0", "c2=8", "--out", flow}).rc == 0);
  CHECK(run({"check", flow, "--order", "1"}).rc == 0);
  CHECK(run({"check", flow, "--order", "2"}).rc == 0);
  CHECK(run({"generate", "base-flow"}).rc == 0);  // v = cbrt(t), to stdout

  std::string spatial2 = temp_path("spatial2.json");
  CHECK(run({"generate", "r42", "n=2", "--out", spatial2}).rc == 0);
  CHECK(run({"check", spatial2, "--order", "2"}).rc == 0);
  for (const char* path : {killing.c_str(), twokilling.c_str(), flow.c_str(),
                           spatial2.c_str()})
    std::remove(path);
}

TEST_CASE("constants fold into every parsed expression") {
  std::string scene = R"json({
    "constants": {"amp": 2, "speed": -1},
    "factors": [
      {"name": "base", "vars": ["t"], "metric": [["0 - amp"]],
       "box": [[1, 2]]},
      {"name": "x2", "vars": ["x2"], "metric": [["amp"]], "box": [[0, 1]]}
    ],
    "twists": [{"factor": 1, "f": "exp(amp * t)"}],
    "field": {"lifted": true, "components": [["speed"], ["0"]]}
  })json";
  std::string path = write_temp("constants.json", scene);
  CHECK(run({"validate", path}).rc == 0);
  Scene s = scene_from_json(read_file(path));
  CHECK(s.factors[0].metric[0][0].is_constant());
  CHECK(s.factors[0].metric[0][0].constant_value() == -2.0);
  CHECK(s.field.components[0][0].constant_value() == -1.0);
  std::remove(path.c_str());
}

TEST_CASE("help exits 0") {
  CliResult r = run({"--help"});
  CHECK(r.rc == 0);
  CHECK(r.out.find("validate") != std::string::npos);
  CHECK(run({"check", "--help"}).rc == 0);
}
