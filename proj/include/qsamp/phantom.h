#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qsamp/sphere.h"

namespace qsamp {

/// One compartment of the multi-tensor model: volume fraction and
/// diffusion tensor (mm^2/s).
struct Compartment {
  double fraction = 1.0;
  Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero();
};

/// S0 * sum_i f_i exp(-b g^T D_i g). Fractions must sum to 1 within 1e-12.
double tensor_signal(const Direction& g, double bvalue, std::span<const Compartment> compartments, double s0 = 1.0);

/// Axially symmetric tensor with principal axis `axis` (normalized here).
Eigen::Matrix3d cylinder_tensor(const Vec3& axis, double lambda_par, double lambda_perp);

enum class Region : std::uint8_t {
  background = 0,
  isotropic = 1,
  single_fiber = 2,
  crossing = 3,
};

struct PhantomOptions {
  double lambda_par = 1.7e-3;
  double lambda_perp = 0.2e-3;
  double iso_diffusivity = 0.8e-3;
  double s0 = 1.0;
  double crossing_angle_deg = 60.0;
};

/// One 2-D slice of direction-dependent signals.
/// `signals` is N x (width*height); column y*width + x holds voxel (x, y).
struct PhantomImage {
  int width = 0;
  int height = 0;
  double bvalue = 0.0;
  std::uint64_t seed = 0;
  std::shared_ptr<const Protocol> protocol;
  Eigen::MatrixXd signals;
  std::vector<std::uint8_t> labels;

  Eigen::Index voxels() const { return static_cast<Eigen::Index>(width) * height; }
  Region region(int x, int y) const { return static_cast<Region>(labels[static_cast<std::size_t>(y * width + x)]); }
};

/// Region geometry of a phantom: labels plus per-voxel fiber axes.
struct PhantomLayout {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;
  /// Primary axis per voxel (single-fiber and crossing voxels).
  std::vector<Vec3> axis;
  /// Second axis per voxel (crossing voxels only).
  std::vector<Vec3> second_axis;
};

/// Deterministic region layout: an elliptical tissue mask (isotropic
/// filling), a curved single-fiber band whose axis follows the curve, and
/// a rectangular patch of two fibers crossing at a fixed angle, 50/50.
PhantomLayout make_layout(int width, int height, std::uint64_t seed, const PhantomOptions& options = {});

/// Noiseless phantom at one b-value. width, height >= 8.
PhantomImage make_phantom(int width, int height, std::shared_ptr<const Protocol> protocol, double bvalue,
                          std::uint64_t seed, const PhantomOptions& options = {});

/// Rician magnitude noise sqrt((S + e1)^2 + e2^2), e1, e2 ~ N(0, sigma^2).
PhantomImage add_noise(const PhantomImage& image, double sigma, std::uint64_t seed);

/// Binary container. Text header, terminated by a line "end", followed by
/// width*height label bytes and N*width*height little-endian float64
/// signals in voxel order, direction fastest. See docs/formats.md.
void write_phantom(const PhantomImage& image, const std::filesystem::path& path,
                   const std::string& protocol_ref = "protocol.bvec");

/// When `protocol` is null the header's protocol reference is loaded,
/// relative to the phantom's directory.
PhantomImage read_phantom(const std::filesystem::path& path, std::shared_ptr<const Protocol> protocol = nullptr);

}  // namespace qsamp
