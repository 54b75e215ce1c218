#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "percol/cli.hpp"
#include "percol/errors.hpp"

int main(int argc, char** argv) {
  using namespace percol::cli;
  CLI::App app{"Periodic solutions of coupled renewal / delay equations by piecewise collocation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "Compute one periodic orbit; writes solution.csv and summary.csv"},
      {"continue", "Follow the branch in one parameter; writes branch.csv"},
      {"converge", "Error and order study over several L; writes convergence.csv and orders.csv"}};
  for (auto [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "Override a config key, e.g. --set grid.L=40")->take_all();
    sub->add_option("--output", output, "Output directory (same as --set output.directory=...)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"status", "error"}, {"kind", "validation"}, {"message", e.what()}}.dump() << '\n';
    return kExitValidation;
  }

  const Command command = parse_command(app.get_subcommands().front()->get_name());
  Json config = Json::object();
  try {
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    if (!output.empty()) {
      if (!config.contains("output") || !config["output"].is_object()) config["output"] = Json::object();
      config["output"]["directory"] = output;
    }
  } catch (const percol::ConfigError& e) {
    std::cerr << Json{{"status", "error"}, {"kind", "validation"}, {"message", e.what()}}.dump() << '\n';
    return kExitValidation;
  }
  return execute(command, config, std::cerr);
}
