#pragma once

#include <filesystem>
#include <string>

#include "qsamp/train.h"

namespace qsamp {

/// Text header ("qsamp-checkpoint 1" ... "end") followed by a little-endian
/// float64 blob: 2n raw angles (theta, phi interleaved), then for each layer
/// its weight matrix row-major and its bias. See docs/formats.md.
std::string serialize_checkpoint(const TrainedModel& model);
TrainedModel deserialize_checkpoint(const std::string& bytes);

void write_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel read_checkpoint(const std::filesystem::path& path);

/// CSV: epoch,train_loss,val_loss,lr_sampling,lr_recon
std::string format_curve_csv(const TrainedModel& model);

}  // namespace qsamp
