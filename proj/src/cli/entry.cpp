#include <CLI11.hpp>

#include <map>
#include <optional>
#include <ostream>

#include "madv/cli.hpp"

namespace madv::cli {
namespace {

// Flags that are shorthand for one config key.
const std::vector<std::pair<std::string, std::string>>& targeted_overrides() {
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"--seed", "seed"},        {"--method", "method"},
      {"--target", "target"},    {"--patch-size", "patch_size"},
      {"--domain", "domain"},    {"--run-dir", "run_dir"},
      {"--quota", "quota"},      {"--max-iterations", "max_iterations"},
      {"--source-class", "source_class"}, {"--image-index", "image_index"},
  };
  return flags;
}

const std::map<std::string, std::string>& summaries() {
  static const std::map<std::string, std::string> text = {
      {"gen-data", "write the synthetic dataset and reference patches"},
      {"train-classifier", "train the target classifier"},
      {"pretrain-gan", "pretrain the patch generator and discriminator"},
      {"attack", "run the random-placement or PEPG attack on one input"},
      {"eval-robustness", "relocate every collected patch and report success rates"},
      {"heatmap", "target confidence over all patch centres"},
      {"cam", "Grad-CAM overlap of attack and random placements"},
      {"report", "aggregate success rate and iterations over attack runs"},
  };
  return text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Natural adversarial patches against self-trained classifiers.", "madv"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> assignments;
  std::map<std::string, std::string> overrides;
  std::string command;

  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, summaries().at(name));
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--set", assignments, "override one config key (key=value); repeatable");
    for (const auto& [flag, key] : targeted_overrides()) {
      sub->add_option_function<std::string>(
          flag, [&overrides, key = key](const std::string& v) { overrides[key] = v; }, "sets " + key);
    }
    sub->callback([&command, name = name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    err << app.help();
    return kConfigError;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = RunConfig::load(config_path);
    for (const auto& a : assignments) config.set_assignment(a);
    for (const auto& [key, value] : overrides) config.set(key, value);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    run_command(command, config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << command << " failed: " << e.what() << "\n";
    return kContractViolation;
  }
  return kOk;
}

}  // namespace madv::cli
