#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qc/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCriterionError = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string scenario;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int ladder_depth = 0;
  std::string tolerance_profile = "default";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--scenario", args.scenario, "scenario file (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed override for Monte Carlo paths")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--ladder-depth", args.ladder_depth,
                  "dyadic ladder depth override");
  cmd->add_option("--tolerance-profile", args.tolerance_profile,
                  "quadrature resolution profile")
      ->check(CLI::IsMember({"strict", "default"}));
}

qc::RunOptions make_options(const CommonArgs& args) {
  qc::RunOptions opt;
  if (args.seed_set) opt.seed_override = args.seed;
  if (args.ladder_depth > 0) opt.ladder_depth_override = args.ladder_depth;
  opt.strict = args.tolerance_profile == "strict";
  return opt;
}

int write_outputs(const qc::RunResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const fs::path report_path =
      out_dir / (result.name.empty() ? std::string("report.json")
                                     : result.name + ".report.json");
  qc::write_file_atomic(report_path, result.report_json);
  std::cerr << "report: " << report_path.string() << "\n";
  for (const auto& [name, content] : result.csv) {
    const fs::path p = out_dir / (result.name.empty() ? name
                                                      : result.name + "." + name);
    qc::write_file_atomic(p, content);
    std::cerr << "artifact: " << p.string() << "\n";
  }
  return result.criterion_error ? kExitCriterionError : kExitOk;
}

int run_command(const CommonArgs& args, bool profile_only,
                bool require_network) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::ifstream in(args.scenario);
    if (!in) {
      std::cerr << "error: cannot open " << args.scenario << "\n";
      return kExitUsage;
    }
    json doc;
    try {
      in >> doc;
    } catch (const json::parse_error& e) {
      std::cerr << "schema error at $: not valid JSON: " << e.what() << "\n";
      return kExitUsage;
    }
    if (require_network &&
        (!doc.contains("kind") || doc["kind"] != "network")) {
      std::cerr << "error: the modulus subcommand expects a network scenario\n";
      return kExitUsage;
    }
    const qc::RunOptions opt = make_options(args);
    const qc::RunResult result =
        profile_only ? qc::profile_scenario(doc, opt)
                     : qc::run_scenario(doc, opt);
    const int code = write_outputs(result, args.out_dir);
    const auto dt = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - t0);
    std::cerr << "wall clock: " << dt.count() << " ms\n";
    return code;
  } catch (const qc::SchemaError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCriterionError;
  }
}

int diff_command(const std::string& a_path, const std::string& b_path,
                 double tol) {
  json a, b;
  try {
    std::ifstream fa(a_path), fb(b_path);
    if (!fa || !fb) {
      std::cerr << "error: cannot open report files\n";
      return kExitUsage;
    }
    fa >> a;
    fb >> b;
  } catch (const json::parse_error& e) {
    std::cerr << "error: report is not valid JSON: " << e.what() << "\n";
    return kExitUsage;
  }
  const std::vector<std::string> diffs = qc::report_diff(a, b, tol);
  for (const std::string& d : diffs) std::cout << d << "\n";
  std::cout << (diffs.empty() ? "reports match" : "reports differ") << " (tol "
            << tol << ")\n";
  return diffs.empty() ? kExitOk : kExitCriterionError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "boundary-extension criteria toolkit: scenario runner and report tools"};
  app.require_subcommand(1);

  CommonArgs run_args, profile_args, modulus_args;
  CLI::App* run = app.add_subcommand("run", "run a scenario file");
  add_common(run, run_args);
  CLI::App* profile =
      app.add_subcommand("profile", "export the radial profile of a weight");
  add_common(profile, profile_args);
  CLI::App* modulus =
      app.add_subcommand("modulus", "run a network (graph) scenario");
  add_common(modulus, modulus_args);

  std::string diff_a, diff_b;
  double diff_tol = 1e-12;
  CLI::App* rdiff = app.add_subcommand(
      "report-diff", "numerically compare two report documents");
  rdiff->add_option("first", diff_a, "first report")->required();
  rdiff->add_option("second", diff_b, "second report")->required();
  rdiff->add_option("--tol", diff_tol, "relative tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (run->parsed()) return run_command(run_args, false, false);
  if (profile->parsed()) return run_command(profile_args, true, false);
  if (modulus->parsed()) return run_command(modulus_args, false, true);
  if (rdiff->parsed()) return diff_command(diff_a, diff_b, diff_tol);
  return kExitUsage;
}
