#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qsamp {

using Vec3 = Eigen::Vector3d;

/// A direction on the unit sphere in polar (theta) / azimuthal (phi) angles,
/// radians. Any real pair is a valid direction; normalize() gives the
/// canonical representative with theta in [0, pi] and phi in [0, 2 pi).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;

  friend bool operator==(const Direction&, const Direction&) = default;
};

/// (sin t cos p, sin t sin p, cos t).
Vec3 angles_to_unit(const Direction& d);

/// Canonical form of an arbitrary angle pair. Throws InvalidArgument
/// ("invalid angle") on non-finite input.
Direction normalize_direction(double theta, double phi);

/// Canonical direction of a (not necessarily unit) nonzero vector.
Direction unit_to_angles(const Vec3& v);

/// Reflect through the origin when below the equator so that theta <= pi/2.
Direction to_upper_hemisphere(const Direction& d);

/// Axial angle between two directions, in [0, pi/2]; antipodes count as equal.
double axial_angle(const Direction& a, const Direction& b);

/// Ordered, nonempty set of sampling directions with no identical or
/// antipodal pair (within kDegenerateTolerance radians).
class Protocol {
 public:
  static constexpr double kDegenerateTolerance = 1e-9;

  Protocol() = default;
  explicit Protocol(std::vector<Direction> directions, std::string label = {});

  std::size_t size() const { return directions_.size(); }
  bool empty() const { return directions_.empty(); }
  const Direction& operator[](std::size_t i) const { return directions_[i]; }
  std::span<const Direction> directions() const { return directions_; }
  std::vector<Vec3> unit_vectors() const;

  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// Same directions in the same order; labels are ignored.
  bool same_directions(const Protocol& other) const { return directions_ == other.directions_; }

  /// Smallest axial angle over all pairs, radians. Infinity for one direction.
  double min_separation() const;

 private:
  std::vector<Direction> directions_;
  std::string label_;
};

/// n directions i.i.d. uniform on the upper hemisphere.
Protocol random_protocol(std::size_t n, std::uint64_t seed);

/// Antipodally symmetric Coulomb energy
///   sum_{i<j} 1/|p_i - p_j| + 1/|p_i + p_j|.
double electrostatic_energy(std::span<const Vec3> points);

struct ElectrostaticResult {
  Protocol protocol;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  /// Energy after each accepted step, starting with the initial energy.
  std::vector<double> energy_trace;
};

/// Jones-style repulsion: projected gradient descent on the sphere from a
/// random start, fixed step halved whenever a step would raise the energy.
ElectrostaticResult electrostatic_optimize(std::size_t n, std::size_t iterations, std::uint64_t seed);

inline Protocol electrostatic_protocol(std::size_t n, std::size_t iterations = 10000, std::uint64_t seed = 0) {
  return electrostatic_optimize(n, iterations, seed).protocol;
}

/// bvec-style text: three lines (x, y, z), one column per direction.
Protocol read_protocol(const std::filesystem::path& path);
Protocol parse_protocol(const std::string& text);
void write_protocol(const Protocol& protocol, const std::filesystem::path& path);
std::string format_protocol(const Protocol& protocol);

}  // namespace qsamp
