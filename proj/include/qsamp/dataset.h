#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "qsamp/phantom.h"

namespace qsamp {

enum class Split { train, val, test };
std::string_view split_name(Split s);

struct DatasetSpec {
  std::size_t train = 200;
  std::size_t val = 24;
  std::size_t test = 31;
  int width = 32;
  int height = 32;
  /// The first entry is the training b-value. Train and validation phantoms
  /// are generated at it only; test phantoms at every listed b-value.
  std::vector<double> bvalues{1000.0};
  double sigma = 0.02;
  std::uint64_t seed = 1;
  /// When >= 0, noiseless signals are projected onto the SH space of this
  /// order before noise is added, which makes them exactly band-limited.
  int bandlimit_order = -1;
  PhantomOptions phantom;
};

/// Split sizes from a total and three ratios: val and test are rounded,
/// train takes the remainder. Ratios must sum to 1 within 1e-9.
std::array<std::size_t, 3> split_sizes(std::size_t count, std::array<double, 3> ratios);

struct DatasetEntry {
  std::uint64_t seed = 0;
  /// Aligned with the dataset b-values; train/val entries hold one image.
  std::vector<PhantomImage> images;
};

struct Dataset {
  DatasetSpec spec;
  std::shared_ptr<const Protocol> protocol;
  std::vector<DatasetEntry> train;
  std::vector<DatasetEntry> val;
  std::vector<DatasetEntry> test;

  const std::vector<DatasetEntry>& entries(Split s) const;
  /// Images of a split at one b-value. Throws when that b-value was not generated for the split.
  std::vector<PhantomImage> images(Split s, double bvalue) const;
  double training_bvalue() const { return spec.bvalues.front(); }
};

Dataset make_dataset(const DatasetSpec& spec, std::shared_ptr<const Protocol> protocol);

Dataset make_dataset(std::size_t count, std::array<double, 3> ratios, std::shared_ptr<const Protocol> protocol,
                     std::vector<double> bvalues, double sigma, std::uint64_t seed);

/// Directory layout: manifest.txt, protocol.bvec and one .phantom file per
/// (phantom, b-value). The manifest is a deterministic function of the spec.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);
std::string format_manifest(const Dataset& dataset);

}  // namespace qsamp
