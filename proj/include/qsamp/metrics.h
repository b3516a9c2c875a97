#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

namespace qsamp {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / MSE) over all entries; `cap` when MSE is zero.
/// Peak defaults to the maximum of the reference x.
double psnr(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x, std::optional<double> peak = std::nullopt,
            double cap = kPsnrCap);

struct SsimOptions {
  int window = 7;  // odd; 7 leaves >= 4 valid positions per axis at 32x32
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  /// Dynamic range. Defaults to the larger of the two images' maxima.
  std::optional<double> peak;
};

/// Gaussian-weighted SSIM over all valid window positions (no padding),
/// computed per channel and averaged. Images are channels x (width*height)
/// with voxel (x, y) in column y*width + x.
double ssim(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x, int width, int height,
            const SsimOptions& options = {});

struct MetricsRecord {
  std::string method;
  std::size_t n = 0;
  double bvalue = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

}  // namespace qsamp
