#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smallball/errors.hpp"
#include "smallball/experiments.hpp"
#include "smallball/parallel.hpp"
#include "smallball/plotdata.hpp"

using namespace smallball;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
  const fs::path p = fs::path(SMALLBALL_TEST_TMP) / name;
  fs::remove_all(p);
  return p.string();
}

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(SMALLBALL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig scalar_sbf(const std::string& out) {
  ExperimentConfig c;
  c.experiment = "sbf";
  c.seed = 7;
  c.out = out;
  c.model = "scalar";
  c.eps = {1.0, 0.5};
  c.samples = 50000;
  return c;
}

}  // namespace

TEST(Config, TextParsingSectionsAndComments) {
  const ConfigMap m = parse_config_text("experiment = sbf\nseed = 3 # top level goes to run\n[model]\nkind = scalar\n; comment\n"
                                        "[grids]\neps = 1.0, 0.5\n");
  EXPECT_EQ(m.at("run.experiment"), "sbf");
  EXPECT_EQ(m.at("run.seed"), "3");
  EXPECT_EQ(m.at("model.kind"), "scalar");
  EXPECT_EQ(m.at("grids.eps"), "1.0, 0.5");
  EXPECT_THROW(parse_config_text("[model\nkind = x\n"), ConfigError);
  EXPECT_THROW(parse_config_text("novalue\n"), ConfigError);
}

TEST(Config, MapRoundTripAndUnknownKeys) {
  ExperimentConfig c = scalar_sbf("x");
  const ExperimentConfig d = ExperimentConfig::from_map(c.to_map());
  EXPECT_EQ(d.to_map(), c.to_map());
  EXPECT_EQ(d.eps, c.eps);
  ConfigMap bad = c.to_map();
  bad["model.colour"] = "red";
  EXPECT_THROW(ExperimentConfig::from_map(bad), ConfigError);
  ConfigMap counts = c.to_map();
  counts["estimator.samples"] = "1e6";
  EXPECT_EQ(ExperimentConfig::from_map(counts).samples, 1000000);
  counts["estimator.samples"] = "1.5";
  EXPECT_THROW(ExperimentConfig::from_map(counts), ConfigError);
}

TEST(Config, Validation) {
  ExperimentConfig c = scalar_sbf("x");
  EXPECT_NO_THROW(c.validate());
  c.seed.reset();
  EXPECT_THROW(c.validate(), ConfigError);
  c = scalar_sbf("x");
  c.eps = {0.5, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = scalar_sbf("x");
  c.kappa = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = scalar_sbf("x");
  c.norm = "lp:0.5";
  EXPECT_THROW(c.make_norm(), ConfigError);
  c.norm = "hoelder:0.25";
  EXPECT_EQ(c.make_norm().kind, NormKind::hoelder);
}

TEST(Config, HashIgnoresKeyOrderAndOutputDirectory) {
  const ConfigMap a = parse_config_text("[run]\nexperiment = sbf\nseed = 1\n[model]\nkind = scalar\nsigma = 2\n");
  const ConfigMap b = parse_config_text("[model]\nsigma = 2.0\nkind = scalar\n[run]\nseed = 1\nexperiment = sbf\nout = elsewhere\n");
  EXPECT_EQ(config_hash(ExperimentConfig::from_map(a)), config_hash(ExperimentConfig::from_map(b)));
  ConfigMap c = a;
  c["model.sigma"] = "3";
  EXPECT_NE(config_hash(ExperimentConfig::from_map(a)), config_hash(ExperimentConfig::from_map(c)));
  EXPECT_EQ(config_hash(ExperimentConfig::from_map(a)).size(), 16u);
}

TEST(Numbers, FormatAndParse) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(parse_number("1e6", "x"), 1e6);
  EXPECT_THROW(parse_number("abc", "x"), ConfigError);
  EXPECT_EQ(parse_list("4, 8,12", "r"), (std::vector<double>{4, 8, 12}));
}

TEST(Tables, CsvAndJsonRoundTrip) {
  Table t;
  t.columns = {"name", "x", "flag"};
  t.add({{"name", "a,b"}, {"x", 0.1}, {"flag", "pass"}});
  t.add({{"name", "plain"}, {"x", 1e-300}, {"flag", "fail"}});
  const Table c = Table::from_csv(t.to_csv());
  EXPECT_EQ(c.columns, t.columns);
  EXPECT_EQ(c.to_csv(), t.to_csv());
  const Table j = Table::from_json(t.to_json());
  EXPECT_EQ(j.to_json(), t.to_json());
  EXPECT_EQ(j.rows[0]["name"], "a,b");
  EXPECT_EQ(j.rows[1]["x"].get<double>(), 1e-300);
  Table bad;
  bad.columns = {"a"};
  EXPECT_THROW(bad.add({{"b", 1}}), DataError);
}

TEST(Tables, ReportTableColumns) {
  VerifierReport r{"demo", "enclosure", {}};
  r.add("row", 0.5, 1.0, 2.0, 0.0, "note");
  const Table t = report_table({r});
  EXPECT_EQ(t.columns, (std::vector<std::string>{"report", "tag", "check", "x", "lhs", "rhs", "tolerance", "verdict", "note"}));
  EXPECT_EQ(t.rows[0]["verdict"], "pass");
  EXPECT_EQ(t.rows[0]["tag"], "enclosure");
}

TEST(Manifest, JsonRoundTrip) {
  ResultManifest m;
  m.config_hash = "0123456789abcdef";
  m.artifact_version = kArtifactVersion;
  m.config = {{"run.seed", "1"}};
  m.files = {"sbf.csv"};
  m.file_digests = {{"sbf.csv", fnv1a_hex("x")}};
  m.verdicts = {2, 1, 3};
  m.reports = {{"enclosure", "enclosure", "pass"}};
  const ResultManifest back = ResultManifest::from_json(m.to_json());
  EXPECT_EQ(back.to_json().dump(), m.to_json().dump());
  EXPECT_EQ(m.to_json().count("wall_seconds"), 0u);
  // FNV-1a 64 reference values.
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Run, ScalarSbfMatchesClosedFormAndWritesManifest) {
  const std::string dir = tmp_dir("run_sbf");
  const ResultManifest m = run(scalar_sbf(dir));
  EXPECT_EQ(m.files, (std::vector<std::string>{"sbf.csv"}));
  const Table t = Table::from_csv(read_file(dir + "/sbf.csv"));
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) {
    const double eps = row["eps"].get<double>();
    EXPECT_NEAR(row["phi"].get<double>(), oracle::scalar_phi(eps), 4 * row["stderr"].get<double>());
    EXPECT_NEAR(row["analytic_phi"].get<double>(), oracle::scalar_phi(eps), 1e-12);
  }
  const ResultManifest back = read_manifest(dir);
  EXPECT_EQ(back.config_hash, m.config_hash);
  EXPECT_EQ(back.file_digests.at("sbf.csv"), fnv1a_hex(read_file(dir + "/sbf.csv")));
  EXPECT_TRUE(fs::exists(dir + "/timing.json"));
}

TEST(Run, OutputsAreByteIdenticalAcrossWorkerCounts) {
  ExperimentConfig c;
  c.experiment = "rsbf";
  c.seed = 11;
  c.model = "wiener";
  c.grid_n = 64;
  c.method = "transfer";
  c.eps = {0.6, 0.5};
  c.centers = 40;
  std::vector<std::string> digests;
  for (int w : {1, 3}) {
    set_worker_count(w);
    c.out = tmp_dir("run_workers_" + std::to_string(w));
    run(c);
    digests.push_back(read_file(c.out + "/manifest.json"));
    for (const auto& e : fs::directory_iterator(c.out))
      if (e.path().filename() != "timing.json") digests.back() += read_file(e.path().string());
  }
  set_worker_count(0);
  EXPECT_EQ(digests[0], digests[1]);
}

TEST(Run, ConstantsBothModesReportTheSandwich) {
  ExperimentConfig c;
  c.experiment = "constants";
  c.seed = 9;
  c.model = "wiener";
  c.grid_n = 64;
  c.constant_mode = "both";
  c.eps = {0.5, 0.4, 0.3};
  c.a_grid = {1.0, 2.0, 4.0};
  c.centers = 30;
  c.out = tmp_dir("run_constants");
  const ResultManifest m = run(c);
  const Table t = Table::from_csv(read_file(c.out + "/constants.csv"));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0]["mode"], "eps_fit");
  EXPECT_EQ(t.rows[1]["mode"], "subadditive");
  EXPECT_TRUE(fs::exists(c.out + "/series.csv"));
  EXPECT_TRUE(fs::exists(c.out + "/scaled.csv"));
  bool sandwich = false;
  for (const auto& r : m.reports) sandwich = sandwich || r.tag == "constant-sandwich";
  EXPECT_TRUE(sandwich);
}

TEST(Plotdata, FigureTablesHaveTidySchema) {
  ExperimentConfig c;
  c.experiment = "rsbf";
  c.seed = 5;
  c.model = "scalar";
  c.method = "analytic";
  c.eps = {0.4, 0.2};
  c.centers = 50;
  c.out = tmp_dir("plotdata");
  run(c);
  const auto files = emit_plotdata(c.out);
  ASSERT_FALSE(files.empty());
  EXPECT_NE(std::find(files.begin(), files.end(), "plot_sbf_vs_eps.csv"), files.end());
  for (const auto& f : files) {
    const Table t = Table::from_csv(read_file(c.out + "/" + f));
    EXPECT_EQ(t.columns, (std::vector<std::string>{"x", "y", "y_lo", "y_hi", "series"}));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      EXPECT_LE(r["y_lo"].get<double>(), r["y"].get<double>());
      EXPECT_GE(r["y_hi"].get<double>(), r["y"].get<double>());
      if (i > 0 && t.rows[i - 1]["series"] == r["series"]) EXPECT_LT(t.rows[i - 1]["x"].get<double>(), r["x"].get<double>());
    }
  }
}

TEST(Cli, ExitCodes) {
  const std::string out = tmp_dir("cli");
  EXPECT_EQ(cli("sbf --model scalar --eps 1.0 --samples 1e4 --seed 7 --out " + out), 0);
  EXPECT_TRUE(fs::exists(out + "/manifest.json"));
  EXPECT_EQ(cli("sbf --model scalar --eps 1.0 --samples 1e4 --out " + out), 1);
  EXPECT_EQ(cli("sbf --model scalar --bogus 3 --seed 7 --out " + out), 1);
  EXPECT_EQ(cli("sbf --model banana --seed 7 --out " + out), 1);
  EXPECT_EQ(cli("plotdata --out " + out), 0);
  EXPECT_EQ(cli("plotdata --out " + out + "/missing"), 2);
  EXPECT_EQ(cli("quantize --model scalar --r 0 --s 2 --n-test 200 --seed 1 --out " + out + "/q"), 0);
}

TEST(Cli, WorkersEnvironmentDoesNotChangeOutputs) {
  const std::string a = tmp_dir("cli_w1"), b = tmp_dir("cli_w4");
  const std::string args = "sbf --model wiener --grid-n 64 --norm lp:2 --eps 0.5 --samples 20000 --seed 3 --out ";
  ASSERT_EQ(cli(args + a, "SMALLBALL_WORKERS=1"), 0);
  ASSERT_EQ(cli(args + b, "SMALLBALL_WORKERS=4"), 0);
  EXPECT_EQ(read_file(a + "/sbf.csv"), read_file(b + "/sbf.csv"));
  EXPECT_EQ(read_file(a + "/manifest.json"), read_file(b + "/manifest.json"));
}
