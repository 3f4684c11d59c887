#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qc/criteria.hpp"
#include "qc/network.hpp"

namespace qc {

inline constexpr const char* kToolkitName = "qctool";
inline constexpr const char* kToolkitVersion = "0.1.0";

// Runtime knobs layered over the scenario document by CLI flags.
struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<int> ladder_depth_override;
  bool strict = false;  // doubles quadrature resolutions
};

// A scenario is a JSON document; see README for the schema. Parse errors
// throw SchemaError with the offending field path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error("schema error at " + path + ": " + what),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunArtifacts {
  nlohmann::json* report = nullptr;  // owned by RunResult
};

struct RunResult {
  std::string name;
  // serialized report document (byte-stable for fixed seeds)
  std::string report_json;
  // csv artifacts by file name
  std::vector<std::pair<std::string, std::string>> csv;
  bool criterion_error = false;  // an operation failed (not "not satisfied")
};

// Parses and executes a scenario document.
RunResult run_scenario(const nlohmann::json& doc, const RunOptions& opt = {});
RunResult run_scenario_file(const std::filesystem::path& file,
                            const RunOptions& opt = {});

// Profile-only execution (the `profile` subcommand).
RunResult profile_scenario(const nlohmann::json& doc,
                           const RunOptions& opt = {});

// Numeric comparison of two report documents. Returns the list of
// differences ("path: a vs b"); empty means equal within tol.
std::vector<std::string> report_diff(const nlohmann::json& a,
                                     const nlohmann::json& b, double tol);

// Writes content to path atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

}  // namespace qc
