#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scatlab/app/commands.hpp"

using namespace scatlab;

namespace {

int run(int argc, char** argv) {
  CLI::App app{"scatlab: semiclassical scattering laboratory"};
  app.set_help_flag("--help", "print help");
  app.set_version_flag("--version", std::string(kToolVersion));
  std::string command, config_path, preset_name, out_dir = "scatlab-out", format = "ini";
  std::vector<double> hs;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool no_cache = false;

  std::vector<std::string> choices = command_names();
  choices.push_back("preset");
  app.add_option("subcommand", command, "classical-map | volumes | smatrix | phases | equidist | trace-check | "
                                        "nondegeneracy | transport | preset")
      ->required()
      ->check(CLI::IsMember(choices));
  auto* cfg_opt = app.add_option("--config", config_path, "experiment config (INI, or JSON if it starts with '{')");
  auto* preset_opt = app.add_option("--preset", preset_name, "built-in scenario instead of --config")
                         ->check(CLI::IsMember(preset_names()));
  cfg_opt->excludes(preset_opt);
  auto* seed_opt = app.add_option("--seed", seed, "override [run] seed");
  app.add_option("--out", out_dir, "output directory (also holds the S-matrix cache)");
  app.add_option("--h", hs, "override the h grid (strictly decreasing)");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (results do not depend on it)")
                          ->check(CLI::Range(1u, 1024u));
  app.add_flag("--no-cache", no_cache, "neither read nor write the S-matrix cache");
  app.add_option("--format", format, "preset output format")->check(CLI::IsMember({"ini", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (command == "preset") {
      if (preset_name.empty()) throw config_error("MissingPreset", "preset needs --preset NAME");
      const auto c = preset(preset_name);
      const std::string text = format == "json" ? config_to_tree(c).dump(2) + "\n" : config_to_ini(c);
      if (app.count("--out")) {
        const auto path = std::filesystem::path(out_dir) / (preset_name + (format == "json" ? ".json" : ".cfg"));
        write_text(path, text);
        std::cout << path.string() << "\n";
      } else {
        std::cout << text;
      }
      return 0;
    }
    if (config_path.empty() && preset_name.empty())
      throw config_error("MissingConfig", "give --config PATH or --preset NAME");
    ExperimentConfig c = config_path.empty() ? preset(preset_name) : load_config(config_path);
    if (*seed_opt) c.seed = seed;
    if (*workers_opt) c.workers = workers;
    if (!hs.empty()) {
      c.h_grid = hs;
      c.transport_h = hs;
    }
    validate(c);
    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.use_cache = !no_cache;
    run_to_directory(command, c, ctx);
    std::cerr << "scatlab " << command << ": wrote " << (ctx.out_dir / "report.csv").string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "scatlab: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "scatlab: internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
