#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smallball/estimators.hpp"
#include "smallball/verifiers.hpp"

namespace smallball {

// Flat key-value configuration. Canonical keys are section-qualified ("model.kind");
// the text form accepts "[section]" headers, "key = value" lines and '#'/';' comments.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::string& path);

struct ExperimentConfig {
  std::string experiment;  // sbf, rsbf, quantize, constants, verify-all
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string format = "csv";

  std::string model = "wiener";  // scalar, spectrum, wiener, bridge
  double sigma = 1.0;
  std::vector<double> lambdas = {1.0, 0.25};
  int grid_n = 256;
  double horizon = 1.0;
  int dim = 1;

  std::string norm = "sup";  // sup, lp:<p>, hoelder:<beta>

  std::string method = "mc";
  long samples = 100000;
  int particles = 2000;
  int replicas = 1;

  std::vector<double> eps = {0.5};
  std::vector<double> r_grid = {4.0, 8.0};
  std::vector<double> s = {2.0};
  std::vector<double> a_grid = {1.0, 2.0, 4.0, 8.0, 16.0};

  int centers = 200;
  long n_test = 640;
  double kappa = 0.5;
  std::string constant_mode = "subadditive";  // eps_fit, subadditive, both
  double series_dt = 1.0 / 256.0;

  // Canonical key map: every field except run.out, numbers in shortest round-trip form.
  ConfigMap to_map() const;
  // Throws ConfigError on unknown keys or malformed values.
  static ExperimentConfig from_map(const ConfigMap& keys);
  // Budgets positive, seed present, grids nonempty and sorted, known names.
  void validate() const;

  GaussianModel make_model() const;
  NormSpec make_norm() const;
  EstimatorOptions make_estimator() const;
};

// Mapping from command-line flag names (without dashes) to canonical keys.
const std::map<std::string, std::string>& flag_keys();

// FNV-1a 64 over "key=value\n" lines of the canonical map, as 16 hex digits. Independent
// of the key order in the source text.
std::string config_hash(const ExperimentConfig& cfg);

// Shortest round-trip decimal form.
std::string format_number(double x);
// Accepts integers and floating forms such as "1e6"; throws ConfigError otherwise.
double parse_number(const std::string& text, const std::string& what);
std::vector<double> parse_list(const std::string& text, const std::string& what);

// Result table: rows of ordered JSON objects sharing the column list.
struct Table {
  std::vector<std::string> columns;
  std::vector<nlohmann::ordered_json> rows;

  void add(nlohmann::ordered_json row);
  std::string to_csv() const;
  std::string to_json() const;
  static Table from_csv(const std::string& text);
  static Table from_json(const std::string& text);
};

Table report_table(const std::vector<VerifierReport>& reports);

// Writes via a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

struct VerdictSummary {
  int pass = 0;
  int fail = 0;
  int informational = 0;
};

struct ReportVerdict {
  std::string name;
  std::string tag;
  std::string verdict;
};

struct ResultManifest {
  std::string config_hash;
  std::string artifact_version;
  ConfigMap config;
  std::vector<std::string> files;  // relative to the output directory
  std::map<std::string, std::string> file_digests;
  VerdictSummary verdicts;  // over report rows
  std::vector<ReportVerdict> reports;
  double wall_seconds = 0.0;  // kept out of manifest.json; written to timing.json

  nlohmann::ordered_json to_json() const;
  static ResultManifest from_json(const nlohmann::ordered_json& j);
};

extern const char* const kArtifactVersion;

// FNV-1a 64 of a byte string as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

// Runs the configured experiment and writes its tables, manifest.json and timing.json
// into cfg.out. Outputs depend only on the configuration.
ResultManifest run(const ExperimentConfig& cfg);

ResultManifest read_manifest(const std::string& out_dir);

}  // namespace smallball
