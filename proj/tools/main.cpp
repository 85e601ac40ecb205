#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cavqed/cli.hpp"
#include "cavqed/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cavity-QED spectra, fits and multilayer optics from a JSON config"};
  app.set_version_flag("--version", std::string(cavqed::kToolVersion));
  std::string config;
  std::string mode;
  app.add_option("config", config, "run configuration (JSON)")->required();
  app.add_option("--mode", mode, "override the config's mode")
      ->check(CLI::IsMember({"simulate", "fit", "tmm", "derive"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cavqed::kExitSchema;
  }
  std::optional<std::string> override_mode;
  if (!mode.empty()) override_mode = mode;
  return cavqed::run(config, override_mode, std::cout, std::cerr);
}
