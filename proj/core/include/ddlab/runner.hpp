#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "ddlab/config.hpp"

namespace ddlab::runner {

struct OutputFile {
  std::string name;  // relative to the run directory
  std::string hash;  // git blob hash of the content
};

struct RunManifest {
  std::string kind;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  unsigned threads = 1;
  bool dry_run = false;
  std::string directory;
  std::vector<OutputFile> files;
  std::string normalized_config;
};

struct RunOptions {
  std::optional<unsigned> threads;  // overrides the config's `threads`
  bool dry_run = false;
  // Root used when [output] dir is empty; falls back to $DDLAB_OUTPUT_ROOT,
  // then "ddlab-out".
  std::optional<std::string> output_root;
};

// Executes the experiment and writes its CSVs plus manifest.txt.
RunManifest run(const config::RunConfig& cfg, const RunOptions& opt = {});

std::string format_manifest(const RunManifest& m);
// Recovers the embedded config from a manifest written by run().
config::RunConfig manifest_config(const std::string& manifest_text);

const char* version();

// Process exit code for an exception escaping run(): 2 config, 3 divergence,
// 4 quadrature, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace ddlab::runner
