#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddlab/config.hpp"
#include "ddlab/error.hpp"
#include "ddlab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ddlab: density evolution under delayed dynamics"};
  app.set_version_flag("--version", ddlab::runner::version());

  std::string kind;
  std::string config_path;
  unsigned threads = 0;
  bool dry_run = false;
  std::string output_root;
  std::vector<std::string> kinds(std::begin(ddlab::config::kKinds), std::end(ddlab::config::kKinds));
  app.add_option("kind", kind, "experiment kind")->required()->check(CLI::IsMember(kinds));
  app.add_option("--config,-c", config_path, "run configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--threads,-j", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", dry_run, "validate and write the manifest only");
  app.add_option("--output-root", output_root, "root for run directories (default $DDLAB_OUTPUT_ROOT)");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = ddlab::config::parse_config_file(config_path);
    if (cfg.kind != kind)
      throw ddlab::ConfigError({{0, "config declares kind '" + cfg.kind + "' but '" + kind + "' was requested"}});
    ddlab::runner::RunOptions opt;
    if (threads > 0) opt.threads = threads;
    opt.dry_run = dry_run;
    if (!output_root.empty()) opt.output_root = output_root;
    const auto manifest = ddlab::runner::run(cfg, opt);
    std::cout << "wrote " << manifest.files.size() << " file(s) to " << manifest.directory << "\n";
    std::cout << "config " << manifest.config_hash << "  " << manifest.wall_seconds << " s\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ddlab: " << e.what() << "\n";
    return ddlab::runner::exit_code_for(e);
  }
}
