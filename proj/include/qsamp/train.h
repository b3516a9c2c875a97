#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qsamp/metrics.h"
#include "qsamp/mlp.h"
#include "qsamp/phantom.h"
#include "qsamp/recon.h"
#include "qsamp/sphere.h"

namespace qsamp {

enum class SamplingMode { learned, random_frozen, uniform_frozen };

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view text);

struct TrainConfig {
  std::size_t n = 3;
  std::size_t epochs = 50;
  double lr_sampling = 1e-3;
  double lr_recon = 1e-4;
  double lambda_tv = 2e-7;
  std::size_t batch_size = 4;
  std::uint64_t seed = 1;
  SamplingMode mode = SamplingMode::learned;
  int hidden = 256;
  int hidden_layers = 2;
  int sh_order = 4;
  std::size_t electrostatic_iterations = 10000;
  /// Starting directions; empty means generated from mode and seed.
  std::vector<Direction> init_angles;

  /// Throws InvalidArgument on violated invariants.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when there is no validation data
};

struct TrainedModel {
  TrainConfig config;
  /// Unconstrained angles as optimized, one per sparse direction.
  std::vector<Direction> angles;
  Mlp mlp;
  std::vector<EpochRecord> curve;
  std::size_t full_size = 0;
  std::uint64_t full_protocol_hash = 0;

  /// Canonical (upper hemisphere) form of the learned angles.
  Protocol protocol() const;
  double acceleration_factor() const { return static_cast<double>(full_size) / static_cast<double>(angles.size()); }
};

/// Fingerprint of a protocol's exact directions.
std::uint64_t protocol_hash(const Protocol& p);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update in place. State is sized on first use.
/// Throws DivergenceError ("diverged") if any gradient is non-finite; in
/// that case neither state nor parameters are modified.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

/// Called at the end of each epoch with the current model and whether it
/// has the best validation loss so far.
using EpochCallback = std::function<void(const TrainedModel&, bool is_best)>;

/// Jointly optimizes the sparse sampling angles and the reconstructor on
/// whole images: subsample -> MLP -> L1 + TV loss, back-propagated into both
/// the network and (in learned mode) the angles, two Adam groups updated
/// simultaneously every step.
TrainedModel train_joint(const TrainConfig& cfg, std::span<const PhantomImage> train,
                         std::span<const PhantomImage> val, std::shared_ptr<const Protocol> full,
                         const EpochCallback& on_epoch = {});

/// Initial angles for a configuration (shared by training and tests).
std::vector<Direction> initial_angles(const TrainConfig& cfg);

/// Gradient of the mean batch loss with respect to the angles and network
/// parameters for a fixed model, over the given images. Exposed for
/// gradient checks.
struct JointGradient {
  double loss = 0.0;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi;
  MlpGradients network;
};
JointGradient joint_gradient(const Mlp& mlp, std::span<const Direction> angles, std::span<const PhantomImage> images,
                             std::shared_ptr<const Protocol> full, const BasisSpec& spec, const LossConfig& loss_cfg);

struct MetricsConfig {
  double psnr_cap = kPsnrCap;
  SsimOptions ssim;
  /// Compare ground truth with itself instead of reconstructing.
  bool identity = false;
};

struct MetricsSummary {
  std::string method;
  std::size_t n = 0;
  double bvalue = 0.0;
  std::size_t count = 0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
};

/// Per-phantom metrics of a trained model on images sharing its full protocol.
std::vector<MetricsRecord> evaluate_images(const TrainedModel& model, std::span<const PhantomImage> images,
                                           const MetricsConfig& cfg, const std::string& method);

/// Mean and population standard deviation of evaluate_images, per b-value
/// (images are grouped by their b-value, ascending).
std::vector<MetricsSummary> evaluate(const TrainedModel& model, std::span<const PhantomImage> images,
                                     const MetricsConfig& cfg, const std::string& method);

std::vector<MetricsSummary> summarize(std::span<const MetricsRecord> records);

/// Plain-text table: one row per method, PSNR and SSIM columns per n,
/// one block per b-value.
std::string format_table(std::span<const MetricsSummary> rows);

}  // namespace qsamp
