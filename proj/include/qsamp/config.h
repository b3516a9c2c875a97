#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qsamp/train.h"

namespace qsamp {

/// One training run. Parsed from an INI-style file, see docs/formats.md.
struct ExperimentConfig {
  TrainConfig train;
  std::filesystem::path dataset;
  /// Training b-value; defaults to the dataset's first b-value.
  std::optional<double> bvalue;
  /// Optional starting protocol (bvec file) replacing the generated one.
  std::filesystem::path init_protocol;
  std::filesystem::path out_dir;
  /// Method label used in reports; defaults to the sampling mode.
  std::string label;
};

/// The {method x n x seed} experiment matrix.
struct BenchConfig {
  TrainConfig train;  // shared settings; n, seed and mode are overridden per cell
  std::vector<SamplingMode> methods;
  std::vector<std::size_t> ns;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path dataset;
  std::filesystem::path out_dir;
  bool save_checkpoints = false;
};

/// Relative paths are resolved against `base` (the config file's directory).
/// Unknown sections or keys and malformed values throw InvalidArgument.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base = {});
BenchConfig parse_bench_config(const std::string& text, const std::filesystem::path& base = {});

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
BenchConfig load_bench_config(const std::filesystem::path& path);

}  // namespace qsamp
