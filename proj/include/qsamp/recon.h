#pragma once

#include <memory>
#include <span>

#include <Eigen/Core>

#include "qsamp/mlp.h"
#include "qsamp/qspace.h"
#include "qsamp/shbasis.h"
#include "qsamp/sphere.h"

namespace qsamp {

/// Maps sparse samples (n x V) to full-protocol signals (N x V).
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;
  virtual Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& sparse) const = 0;
};

class MlpReconstructor final : public Reconstructor {
 public:
  explicit MlpReconstructor(Mlp mlp) : mlp_(std::move(mlp)) {}
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& sparse) const override { return mlp_.forward(sparse); }
  const Mlp& mlp() const { return mlp_; }

 private:
  Mlp mlp_;
};

/// Zero-parameter baseline: regularized SH fit on the sparse directions,
/// evaluated on the full protocol. The ridge penalty weights each l > 0
/// coefficient by (l(l+1))^2 and leaves l = 0 free.
class LinearShReconstructor final : public Reconstructor {
 public:
  LinearShReconstructor(std::span<const Direction> sparse, const Protocol& full, BasisSpec spec, double ridge);
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& sparse) const override;
  /// N x n
  const Eigen::MatrixXd& matrix() const { return map_; }

 private:
  Eigen::MatrixXd map_;
};

/// Ridge used by linear_recon when the caller does not choose one.
double default_linear_ridge(std::size_t n, const BasisSpec& spec);

SignalVector linear_recon(const SignalVector& s, const Protocol& q, const std::shared_ptr<const Protocol>& full,
                          double ridge, BasisSpec spec = BasisSpec());

/// Anisotropic total variation of a multi-channel 2-D image stored as
/// channels x (width*height), voxel (x, y) in column y*width + x:
/// sum of |forward differences| along x and y, no wrap-around, summed over channels.
double tv(const Eigen::MatrixXd& image, int width, int height);

/// Subgradient of tv with sign(0) = 0.
Eigen::MatrixXd tv_gradient(const Eigen::MatrixXd& image, int width, int height);

struct LossConfig {
  double lambda_tv = 2e-7;
};

struct LossResult {
  double value = 0.0;
  double l1 = 0.0;  // mean absolute error
  double tv = 0.0;  // unweighted total variation of xhat
  Eigen::MatrixXd gradient;  // d value / d xhat
};

/// mean|xhat - x| + lambda_tv * tv(xhat), with its subgradient (sign(0) = 0).
LossResult loss(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x, int width, int height, const LossConfig& cfg);

}  // namespace qsamp
