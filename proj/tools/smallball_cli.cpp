#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "smallball/errors.hpp"
#include "smallball/experiments.hpp"
#include "smallball/plotdata.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kVerifier = 3 };

int fail(Exit code, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
  return code;
}

struct ExperimentFlags {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& flags) {
  cmd->add_option("--config", flags.config, "Key-value configuration file; flags override its keys");
  for (const auto& [flag, key] : smallball::flag_keys()) {
    std::string names = "--" + flag;
    if (flag == "r-grid") names += ",--r";
    cmd->add_option_function<std::string>(
        names, [&flags, key = key](const std::string& v) { flags.values[key] = v; }, "Sets " + key);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo lab for Gaussian small-ball probabilities, random-center gauges and random codebooks"};
  app.require_subcommand(1);
  std::map<std::string, ExperimentFlags> flags;
  for (const char* name : {"sbf", "rsbf", "quantize", "constants", "verify-all"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string("Run the ") + name + " experiment");
    add_experiment_flags(cmd, flags[name]);
  }
  std::string plot_dir;
  CLI::App* plot = app.add_subcommand("plotdata", "Write tidy plot tables for a finished run");
  plot->add_option("--out", plot_dir, "Run directory holding manifest.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, "config", e.what());
  }

  try {
    if (plot->parsed()) {
      nlohmann::ordered_json j;
      j["files"] = smallball::emit_plotdata(plot_dir);
      std::cout << j.dump(2) << "\n";
      return kOk;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    const ExperimentFlags& f = flags[name];
    smallball::ConfigMap keys = f.config.empty() ? smallball::ConfigMap{} : smallball::read_config_file(f.config);
    for (const auto& [k, v] : f.values) keys[k] = v;
    keys["run.experiment"] = name;
    const smallball::ExperimentConfig cfg = smallball::ExperimentConfig::from_map(keys);
    cfg.validate();
    const smallball::ResultManifest m = smallball::run(cfg);
    std::cout << m.to_json().dump(2) << "\n";
    return m.verdicts.fail > 0 ? kVerifier : kOk;
  } catch (const smallball::ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const std::exception& e) {
    return fail(kRuntime, "runtime", e.what());
  }
}
