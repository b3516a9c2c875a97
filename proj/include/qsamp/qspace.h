#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qsamp/shbasis.h"
#include "qsamp/sphere.h"

namespace qsamp {

/// SH coefficient vector c_1..c_R of one voxel.
struct ShCoefficients {
  Eigen::VectorXd values;
  BasisSpec spec;
};

/// Per-direction signal of one voxel, tied to the protocol it was sampled on.
struct SignalVector {
  Eigen::VectorXd values;
  std::shared_ptr<const Protocol> protocol;
};

/// Moore-Penrose pseudo-inverse by SVD. Singular values below
/// rel_tol * sigma_max are dropped; ridge > 0 turns the kept ones into
/// sigma / (sigma^2 + ridge), i.e. Tikhonov-regularized least squares.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rel_tol = 1e-10, double ridge = 0.0);

/// Least-squares SH coefficients, C = pinv(B) S.
ShCoefficients fit_sh(const SignalVector& s, const BasisMatrix& b, double ridge = 0.0);

/// Signal synthesized from coefficients at the given directions.
SignalVector resample(const ShCoefficients& c, const std::shared_ptr<const Protocol>& q);
Eigen::VectorXd resample(const ShCoefficients& c, std::span<const Direction> dirs);

/// dS_i/dtheta_i and dS_i/dphi_i. Direction i only influences sample i, so
/// the Jacobian is diagonal and only its diagonal is returned.
struct ResampleGradient {
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi;
};
ResampleGradient resample_grad(const ShCoefficients& c, std::span<const Direction> dirs);

/// The subsampling operator: fit on the full protocol, evaluate on a sparse one.
/// pinv(B_N) is computed once; the sparse basis is rebuilt per call because
/// its directions are the trainable quantities.
class FullProtocolFit {
 public:
  FullProtocolFit(std::shared_ptr<const Protocol> full, BasisSpec spec, double ridge = 0.0);

  const Protocol& protocol() const { return *full_; }
  const std::shared_ptr<const Protocol>& protocol_ptr() const { return full_; }
  const BasisSpec& spec() const { return basis_.spec(); }
  const BasisMatrix& basis() const { return basis_; }
  /// R x N
  const Eigen::MatrixXd& pseudo_inverse() const { return pinv_; }

  /// Coefficients of many signals at once: (N x V) -> (R x V).
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& signals) const;

  /// n x N linear map B_n pinv(B_N).
  Eigen::MatrixXd subsample_matrix(std::span<const Direction> sparse) const;

 private:
  std::shared_ptr<const Protocol> full_;
  BasisMatrix basis_;
  Eigen::MatrixXd pinv_;
};

/// Subsample every signal of a batch onto q. All signals must share the
/// full protocol of `full`.
std::vector<SignalVector> subsample_batch(std::span<const SignalVector> batch, const FullProtocolFit& full,
                                          const std::shared_ptr<const Protocol>& q);

}  // namespace qsamp
