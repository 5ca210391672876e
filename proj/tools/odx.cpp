#include <CLI11.hpp>

#include <iostream>

#include "odx/harness.hpp"

using odx::harness::json;

int main(int argc, char** argv) {
  CLI::App app{"odx: hitting times and escape rates for interval maps with holes"};
  app.require_subcommand(1);

  auto* maps = app.add_subcommand("maps", "list the map catalogue");
  auto* schema = app.add_subcommand("schema", "print the config JSON schema");

  auto* run = app.add_subcommand("run", "run an experiment from a config file and/or overrides");
  std::string config_path, kind, out_dir;
  std::vector<std::string> sets;
  run->add_option("config", config_path, "config JSON file");
  run->add_option("--kind", kind, "experiment kind (overrides the config)");
  run->add_option("--set", sets, "dot-path override key=value (value parsed as JSON when possible)")->take_all();
  run->add_option("--output-dir", out_dir, "output directory (overrides output_dir)");
  bool quiet = false;
  run->add_flag("-q,--quiet", quiet, "do not print the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*maps) {
    std::cout << odx::harness::list_catalogue();
    return 0;
  }
  if (*schema) {
    std::cout << odx::io::kConfigSchema;
    return 0;
  }

  try {
    json cfg = json::object();
    std::vector<odx::harness::InputFile> inputs;
    if (!config_path.empty()) {
      const std::string text = odx::io::read_file(config_path);
      cfg = json::parse(text, nullptr, false);
      if (cfg.is_discarded()) throw odx::Error(odx::ErrorCode::ConfigInvalid, config_path + " is not valid JSON");
      inputs.push_back({config_path, text});
    }
    if (!kind.empty()) cfg["kind"] = kind;
    if (!out_dir.empty()) cfg["output_dir"] = out_dir;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw odx::Error(odx::ErrorCode::ConfigInvalid, "--set expects key=value, got '" + s + "'");
      odx::harness::set_path(cfg, s.substr(0, eq), odx::harness::parse_value(s.substr(eq + 1)));
    }
    auto man = odx::harness::run(std::move(cfg), inputs);
    if (!quiet) std::cout << man.to_json().dump(2) << '\n';
    return 0;
  } catch (const odx::Error& e) {
    std::cerr << "odx: " << e.what() << '\n';
    return odx::harness::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "odx: " << e.what() << '\n';
    return 4;
  }
}
