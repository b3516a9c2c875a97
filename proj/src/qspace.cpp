#include "qsamp/qspace.h"

#include <Eigen/SVD>

#include "qsamp/error.h"

namespace qsamp {

namespace {

bool same_protocol(const std::shared_ptr<const Protocol>& a, const Protocol& b) {
  return a && (a.get() == &b || a->same_directions(b));
}

}  // namespace

Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rel_tol, double ridge) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = rel_tol * sv(0);
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double s = sv(i);
    inv(i) = (s > cutoff && s > 0.0) ? s / (s * s + ridge) : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

ShCoefficients fit_sh(const SignalVector& s, const BasisMatrix& b, double ridge) {
  if (!same_protocol(s.protocol, b.protocol())) throw InvalidArgument("fit_sh: signal and basis protocols differ");
  if (s.values.size() != b.rows()) throw InvalidArgument("fit_sh: signal length does not match basis rows");
  return {pinv(b.values(), 1e-10, ridge) * s.values, b.spec()};
}

Eigen::VectorXd resample(const ShCoefficients& c, std::span<const Direction> dirs) {
  if (c.values.size() != c.spec.size()) throw InvalidArgument("resample: coefficient length mismatch");
  return basis_matrix(dirs, c.spec) * c.values;
}

SignalVector resample(const ShCoefficients& c, const std::shared_ptr<const Protocol>& q) {
  if (!q) throw InvalidArgument("resample: null protocol");
  return {resample(c, q->directions()), q};
}

ResampleGradient resample_grad(const ShCoefficients& c, std::span<const Direction> dirs) {
  if (c.values.size() != c.spec.size()) throw InvalidArgument("resample_grad: coefficient length mismatch");
  const BasisGradient g = basis_matrix_grad(dirs, c.spec);
  return {g.d_theta * c.values, g.d_phi * c.values};
}

FullProtocolFit::FullProtocolFit(std::shared_ptr<const Protocol> full, BasisSpec spec, double ridge)
    : full_(std::move(full)), basis_(full_ ? *full_ : throw InvalidArgument("null protocol"), spec),
      pinv_(pinv(basis_.values(), 1e-10, ridge)) {}

Eigen::MatrixXd FullProtocolFit::coefficients(const Eigen::MatrixXd& signals) const {
  if (signals.rows() != basis_.rows()) throw InvalidArgument("signal rows do not match the full protocol");
  return pinv_ * signals;
}

Eigen::MatrixXd FullProtocolFit::subsample_matrix(std::span<const Direction> sparse) const {
  return basis_matrix(sparse, spec()) * pinv_;
}

std::vector<SignalVector> subsample_batch(std::span<const SignalVector> batch, const FullProtocolFit& full,
                                          const std::shared_ptr<const Protocol>& q) {
  std::vector<SignalVector> out;
  if (batch.empty()) return out;
  if (!q) throw InvalidArgument("subsample_batch: null protocol");
  const Eigen::MatrixXd sparse_basis = basis_matrix(*q, full.spec());
  out.reserve(batch.size());
  for (const auto& s : batch) {
    if (!same_protocol(s.protocol, full.protocol()))
      throw InvalidArgument("subsample_batch: signal not on the full protocol");
    out.push_back({sparse_basis * (full.pseudo_inverse() * s.values), q});
  }
  return out;
}

}  // namespace qsamp
