#include "qsamp/recon.h"

#include <cmath>

#include <Eigen/SVD>

#include "qsamp/error.h"

namespace qsamp {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_image(const Eigen::MatrixXd& image, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("image must be at least 1x1");
  if (image.cols() != static_cast<Eigen::Index>(width) * height)
    throw InvalidArgument("image column count does not match width*height");
}

}  // namespace

double default_linear_ridge(std::size_t n, const BasisSpec& spec) {
  return static_cast<int>(n) < spec.size() ? 1e-3 : 0.0;
}

LinearShReconstructor::LinearShReconstructor(std::span<const Direction> sparse, const Protocol& full, BasisSpec spec,
                                             double ridge) {
  if (sparse.empty()) throw InvalidArgument("linear_recon: no sparse directions");
  if (!(ridge >= 0.0)) throw InvalidArgument("linear_recon: ridge must be >= 0");
  const Eigen::MatrixXd bq = basis_matrix(sparse, spec);
  Eigen::VectorXd penalty(spec.size());
  for (int j = 1; j <= spec.size(); ++j) {
    const int l = index_to_lm(j).l;
    penalty(j - 1) = std::pow(l * (l + 1.0), 2.0);
  }
  const Eigen::MatrixXd normal = bq.transpose() * bq + ridge * Eigen::MatrixXd(penalty.asDiagonal());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-12 * sv(0))) throw InvalidArgument("linear_recon: singular normal equations");
  const Eigen::MatrixXd coeffs = svd.solve(bq.transpose());  // R x n
  map_ = basis_matrix(full, spec) * coeffs;
}

Eigen::MatrixXd LinearShReconstructor::reconstruct(const Eigen::MatrixXd& sparse) const {
  if (sparse.rows() != map_.cols()) throw InvalidArgument("linear_recon: input length mismatch");
  return map_ * sparse;
}

SignalVector linear_recon(const SignalVector& s, const Protocol& q, const std::shared_ptr<const Protocol>& full,
                          double ridge, BasisSpec spec) {
  if (!full) throw InvalidArgument("linear_recon: null full protocol");
  if (s.values.size() != static_cast<Eigen::Index>(q.size())) throw InvalidArgument("linear_recon: input length mismatch");
  LinearShReconstructor r(q.directions(), *full, spec, ridge);
  return {r.reconstruct(s.values), full};
}

double tv(const Eigen::MatrixXd& image, int width, int height) {
  check_image(image, width, height);
  double total = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Index v = static_cast<Eigen::Index>(y) * width + x;
      if (x + 1 < width) total += (image.col(v + 1) - image.col(v)).cwiseAbs().sum();
      if (y + 1 < height) total += (image.col(v + width) - image.col(v)).cwiseAbs().sum();
    }
  }
  return total;
}

Eigen::MatrixXd tv_gradient(const Eigen::MatrixXd& image, int width, int height) {
  check_image(image, width, height);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(image.rows(), image.cols());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Index v = static_cast<Eigen::Index>(y) * width + x;
      for (const Eigen::Index u : {x + 1 < width ? v + 1 : Eigen::Index{-1}, y + 1 < height ? v + width : Eigen::Index{-1}}) {
        if (u < 0) continue;
        for (Eigen::Index c = 0; c < image.rows(); ++c) {
          const double s = sign(image(c, u) - image(c, v));
          g(c, u) += s;
          g(c, v) -= s;
        }
      }
    }
  }
  return g;
}

LossResult loss(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x, int width, int height, const LossConfig& cfg) {
  if (xhat.rows() != x.rows() || xhat.cols() != x.cols()) throw InvalidArgument("loss: shape mismatch");
  if (!(cfg.lambda_tv >= 0.0)) throw InvalidArgument("loss: lambda_tv must be >= 0");
  check_image(xhat, width, height);
  const double count = static_cast<double>(x.size());

  LossResult r;
  const Eigen::MatrixXd diff = xhat - x;
  r.l1 = diff.cwiseAbs().sum() / count;
  r.gradient = diff.unaryExpr([](double v) { return sign(v); }) / count;
  r.tv = tv(xhat, width, height);
  if (cfg.lambda_tv > 0.0) r.gradient += cfg.lambda_tv * tv_gradient(xhat, width, height);
  r.value = r.l1 + cfg.lambda_tv * r.tv;
  return r;
}

}  // namespace qsamp
