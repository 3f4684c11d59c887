#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "qc/scenario.hpp"

using namespace qc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kBundled{
    "identity-n3",    "radial-stretch-c05", "calderon-family",
    "twin-criterion", "power-singular",     "fmo-log",
    "fmo-negative",   "extremal-identity",  "profile-logpower",
    "profile-grid",   "ring-p2",            "duality-sp"};

json load_scenario(const std::string& name) {
  const fs::path p = fs::path(QC_SCENARIO_DIR) / (name + ".json");
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), "missing scenario " << p.string());
  json doc;
  in >> doc;
  return doc;
}

}  // namespace

TEST_CASE("every bundled scenario parses, runs, and echoes its document") {
  for (const std::string& name : kBundled) {
    CAPTURE(name);
    const json doc = load_scenario(name);
    const RunResult res = run_scenario(doc);
    CHECK_FALSE(res.criterion_error);
    const json report = json::parse(res.report_json);
    CHECK(report.at("scenario") == doc);  // schema round trip
    CHECK(report.contains("results"));
    CHECK(report.at("toolkit").at("version") == kToolkitVersion);
  }
}

TEST_CASE("bundled scenario verdicts land where the oracles say") {
  {
    const json rep =
        json::parse(run_scenario(load_scenario("identity-n3")).report_json);
    CHECK(rep.at("overall") == "satisfied");
    CHECK(rep["results"]["calderon"]["classification"] == "convergent");
    CHECK(rep["results"]["twin"]["satisfied"] == true);
  }
  {
    const json rep = json::parse(
        run_scenario(load_scenario("radial-stretch-c05")).report_json);
    CHECK(rep.at("overall") == "satisfied");
  }
  {
    const json rep =
        json::parse(run_scenario(load_scenario("power-singular")).report_json);
    CHECK(rep.at("overall") == "not satisfied");
    CHECK(rep["results"]["twin"]["satisfied"] == false);
  }
  {
    const json rep =
        json::parse(run_scenario(load_scenario("fmo-negative")).report_json);
    CHECK(rep.at("overall") == "not satisfied");
    CHECK(rep["results"]["fmo"]["classification"] == "unbounded");
  }
  {
    const json rep =
        json::parse(run_scenario(load_scenario("fmo-log")).report_json);
    CHECK(rep["results"]["fmo"]["classification"] == "bounded");
    CHECK(rep["results"]["fmo_loglog"]["classification"] == "bounded");
    CHECK(rep["results"]["little_o"]["classification"] == "vanishes");
  }
  {
    const json rep = json::parse(
        run_scenario(load_scenario("extremal-identity")).report_json);
    const auto& ext = rep["results"]["extremal_identity"];
    CHECK(ext["rel_err"].get<double>() <= 1e-6);
    CHECK(ext["worst_margin"].get<double>() >= -1e-8);
    const auto& ring = rep["results"]["ring_bound"];
    CHECK(ring["value"].get<double>() ==
          doctest::Approx(4.0 * 3.14159265358979).epsilon(1e-6));
  }
  {
    const json rep =
        json::parse(run_scenario(load_scenario("ring-p2")).report_json);
    const double cap = rep["results"]["capacity"]["value"].get<double>();
    CHECK(std::abs(cap - 2.0 * 3.141592653589793) / (2.0 * 3.141592653589793) <
          0.05);
    CHECK(rep["results"]["sphere_family_bound"]["satisfied"] == true);
  }
  {
    const json rep =
        json::parse(run_scenario(load_scenario("duality-sp")).report_json);
    CHECK(rep["results"]["duality"]["residual_connecting"].get<double>() <=
          1e-6);
    CHECK(rep["results"]["duality"]["residual_separating"].get<double>() <=
          1e-6);
    CHECK(rep["results"]["capacity"]["value"].get<double>() ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("reports are byte-identical across reruns") {
  for (const std::string& name : kBundled) {
    CAPTURE(name);
    const json doc = load_scenario(name);
    const RunResult a = run_scenario(doc);
    const RunResult b = run_scenario(doc);
    CHECK(a.report_json == b.report_json);
    REQUIRE(a.csv.size() == b.csv.size());
    for (std::size_t i = 0; i < a.csv.size(); ++i)
      CHECK(a.csv[i].second == b.csv[i].second);
  }
}

TEST_CASE("profile artifacts match their closed forms") {
  const RunResult res = run_scenario(load_scenario("profile-logpower"));
  REQUIRE(res.csv.size() == 1);
  CHECK(res.csv[0].first == "profile.csv");
  std::istringstream is(res.csv[0].second);
  std::string header;
  std::getline(is, header);
  CHECK(header == "r,q,ls_norm,q_error");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    double r, q, ls, err;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r, &q, &ls, &err) ==
            4);
    const double want = std::pow(std::log(1.0 / r), 2.0);
    CHECK(q == doctest::Approx(want).epsilon(1e-8));
    // ||Q||_s(r) = q(r)... for radial weights the s-mean equals the value:
    // ls_norm = w(r) (omega r^2)^{1/s} with s = 2
    const double omega_r2 = 4.0 * 3.141592653589793 * r * r;
    CHECK(ls == doctest::Approx(want * std::sqrt(omega_r2)).epsilon(1e-8));
    ++rows;
  }
  CHECK(rows > 20);

  // grid-kind weight: interpolation is exact for a multilinear sample, and
  // the circle mean of the linear part cancels to the constant 10
  const RunResult grid = run_scenario(load_scenario("profile-grid"));
  REQUIRE(grid.csv.size() == 1);
  std::istringstream gs(grid.csv[0].second);
  std::getline(gs, header);
  while (std::getline(gs, line)) {
    double r, q, ls, err;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r, &q, &ls, &err) ==
            4);
    CHECK(q == doctest::Approx(10.0).epsilon(1e-10));
    CHECK(err <= 1e-10);
  }
}

TEST_CASE("schema violations carry field paths") {
  json doc = load_scenario("identity-n3");
  doc.erase("weight");
  CHECK_THROWS_WITH_AS(run_scenario(doc), doctest::Contains("$.weight"),
                       SchemaError);

  json doc2 = load_scenario("identity-n3");
  doc2["parameters"].erase("p");
  CHECK_THROWS_WITH_AS(run_scenario(doc2), doctest::Contains("$.parameters"),
                       SchemaError);

  json doc3 = load_scenario("identity-n3");
  doc3["parameters"]["alpha"] = 2.0;  // inconsistent with p = 3
  CHECK_THROWS_WITH_AS(run_scenario(doc3), doctest::Contains("alpha"),
                       SchemaError);

  json doc4 = load_scenario("identity-n3");
  doc4["criteria"].push_back("unknown-criterion");
  CHECK_THROWS_AS(run_scenario(doc4), SchemaError);
}

TEST_CASE("seed and ladder overrides flow into the run") {
  json doc = load_scenario("twin-criterion");
  RunOptions opt;
  opt.ladder_depth_override = 12;
  const json rep = json::parse(run_scenario(doc, opt).report_json);
  CHECK(rep["results"]["twin"]["divergence_part"]["ladder"].size() == 12);
  CHECK(rep["options"]["ladder_depth_override"] == 12);
}

TEST_CASE("report diff tolerates only small numeric drift") {
  const json a = json::parse(run_scenario(load_scenario("duality-sp")).report_json);
  json b = a;
  CHECK(report_diff(a, b, 1e-12).empty());
  b["results"]["capacity"]["value"] =
      b["results"]["capacity"]["value"].get<double>() + 1e-6;
  const auto diffs = report_diff(a, b, 1e-12);
  REQUIRE(diffs.size() == 1);
  CHECK(diffs[0].find("capacity.value") != std::string::npos);
  CHECK(report_diff(a, b, 1e-3).empty());
  b["results"].erase("modulus");
  CHECK(!report_diff(a, b, 1e-3).empty());
}

TEST_CASE("cli binary: exit codes and determinism end to end") {
  const fs::path tmp = fs::temp_directory_path() / "qc_cli_test";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const std::string cli = QC_CLI_PATH;
  const std::string scenario =
      (fs::path(QC_SCENARIO_DIR) / "duality-sp.json").string();

  const auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  CHECK(run("run --scenario " + scenario + " --out " + (tmp / "a").string()) ==
        0);
  CHECK(run("modulus --scenario " + scenario + " --out " +
            (tmp / "b").string()) == 0);
  CHECK(run("report-diff " + (tmp / "a/duality-sp.report.json").string() +
            " " + (tmp / "b/duality-sp.report.json").string()) == 0);

  // malformed scenario: usage/schema exit code
  const fs::path badfile = tmp / "bad.json";
  std::ofstream(badfile) << "{\"kind\": \"analysis\"}";
  CHECK(run("run --scenario " + badfile.string() + " --out " +
            (tmp / "c").string()) == 2);
  const fs::path notjson = tmp / "notjson.json";
  std::ofstream(notjson) << "not json at all";
  CHECK(run("run --scenario " + notjson.string() + " --out " +
            (tmp / "c").string()) == 2);

  // the modulus subcommand refuses analysis scenarios
  const std::string analysis =
      (fs::path(QC_SCENARIO_DIR) / "calderon-family.json").string();
  CHECK(run("modulus --scenario " + analysis + " --out " +
            (tmp / "d").string()) == 2);

  // differing reports exit nonzero from report-diff
  std::ofstream(tmp / "x.json") << "{\"v\": 1.0}";
  std::ofstream(tmp / "y.json") << "{\"v\": 2.0}";
  CHECK(run("report-diff " + (tmp / "x.json").string() + " " +
            (tmp / "y.json").string()) == 1);
  fs::remove_all(tmp);
}
