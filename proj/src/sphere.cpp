#include "qsamp/sphere.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "qsamp/error.h"
#include "qsamp/io.h"
#include "qsamp/rng.h"

namespace qsamp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a value just below a multiple of 2 pi can round up to 2 pi
  if (a >= kTwoPi) a = 0.0;
  return a;
}

}  // namespace

Vec3 angles_to_unit(const Direction& d) {
  const double st = std::sin(d.theta);
  return {st * std::cos(d.phi), st * std::sin(d.phi), std::cos(d.theta)};
}

Direction normalize_direction(double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi)) throw InvalidArgument("invalid angle");
  theta = wrap_two_pi(theta);
  if (theta > kPi) {
    // reflecting theta across the pole moves the point half a turn in phi
    theta = kTwoPi - theta;
    phi += kPi;
  }
  return {theta, wrap_two_pi(phi)};
}

Direction unit_to_angles(const Vec3& v) {
  const double rho = std::hypot(v.x(), v.y());
  const double theta = std::atan2(rho, v.z());
  const double phi = rho == 0.0 ? 0.0 : std::atan2(v.y(), v.x());
  return normalize_direction(theta, phi);
}

Direction to_upper_hemisphere(const Direction& d) {
  const Direction c = normalize_direction(d.theta, d.phi);
  if (c.theta <= kPi / 2.0) return c;
  return normalize_direction(kPi - c.theta, c.phi + kPi);
}

double axial_angle(const Direction& a, const Direction& b) {
  const Vec3 u = angles_to_unit(a);
  const Vec3 v = angles_to_unit(b);
  // atan2 form stays accurate for nearly parallel vectors, unlike acos
  return std::atan2(u.cross(v).norm(), std::abs(u.dot(v)));
}

Protocol::Protocol(std::vector<Direction> directions, std::string label)
    : directions_(std::move(directions)), label_(std::move(label)) {
  if (directions_.empty()) throw InvalidArgument("empty protocol");
  for (auto& d : directions_) d = normalize_direction(d.theta, d.phi);
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    for (std::size_t j = i + 1; j < directions_.size(); ++j) {
      if (axial_angle(directions_[i], directions_[j]) < kDegenerateTolerance) {
        throw InvalidArgument("degenerate protocol: directions " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide or are antipodal");
      }
    }
  }
}

std::vector<Vec3> Protocol::unit_vectors() const {
  std::vector<Vec3> out;
  out.reserve(directions_.size());
  for (const auto& d : directions_) out.push_back(angles_to_unit(d));
  return out;
}

double Protocol::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < directions_.size(); ++i)
    for (std::size_t j = i + 1; j < directions_.size(); ++j)
      best = std::min(best, axial_angle(directions_[i], directions_[j]));
  return best;
}

Protocol random_protocol(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("random_protocol: n must be at least 1");
  Rng rng = make_rng(seed, "random-protocol");
  std::vector<Direction> dirs;
  dirs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // cos(theta) uniform on [0, 1] is the uniform density on the hemisphere
    const double z = uniform01(rng);
    const double phi = kTwoPi * uniform01(rng);
    dirs.push_back({std::acos(z), phi});
  }
  return Protocol(std::move(dirs), "random-" + std::to_string(n));
}

double electrostatic_energy(std::span<const Vec3> points) {
  double e = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      e += 1.0 / (points[i] - points[j]).norm() + 1.0 / (points[i] + points[j]).norm();
    }
  }
  return e;
}

namespace {

// Tangential component of the energy gradient at every point.
void energy_gradient(std::span<const Vec3> p, std::vector<Vec3>& grad) {
  const std::size_t n = p.size();
  std::fill(grad.begin(), grad.end(), Vec3::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 d = p[i] - p[j];
      const Vec3 s = p[i] + p[j];
      const double dn = d.norm();
      const double sn = s.norm();
      const Vec3 gd = d / (dn * dn * dn);
      const Vec3 gs = s / (sn * sn * sn);
      grad[i] -= gd + gs;
      grad[j] += gd - gs;
    }
  }
  for (std::size_t i = 0; i < n; ++i) grad[i] -= grad[i].dot(p[i]) * p[i];
}

}  // namespace

ElectrostaticResult electrostatic_optimize(std::size_t n, std::size_t iterations, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("electrostatic_protocol: n must be at least 2");

  Rng rng = make_rng(seed, "electrostatic");
  std::vector<Vec3> points(n);
  for (auto& p : points) {
    const double z = 2.0 * uniform01(rng) - 1.0;
    const double phi = kTwoPi * uniform01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    p = {r * std::cos(phi), r * std::sin(phi), z};
  }

  ElectrostaticResult result;
  double energy = electrostatic_energy(points);
  result.initial_energy = energy;
  result.energy_trace.push_back(energy);

  std::vector<Vec3> grad(n);
  std::vector<Vec3> trial(n);
  double step = 0.1;  // radians moved by the point with the largest gradient
  bool grad_valid = false;
  for (std::size_t it = 0; it < iterations && step > 1e-14; ++it) {
    if (!grad_valid) {
      energy_gradient(points, grad);
      grad_valid = true;
    }
    double gmax = 0.0;
    for (const auto& g : grad) gmax = std::max(gmax, g.norm());
    if (gmax == 0.0) break;

    for (std::size_t i = 0; i < n; ++i) trial[i] = (points[i] - (step / gmax) * grad[i]).normalized();
    const double trial_energy = electrostatic_energy(trial);
    if (trial_energy < energy) {
      points.swap(trial);
      energy = trial_energy;
      result.energy_trace.push_back(energy);
      grad_valid = false;
    } else {
      step *= 0.5;
    }
  }

  std::vector<Direction> dirs;
  dirs.reserve(n);
  for (const auto& p : points) dirs.push_back(to_upper_hemisphere(unit_to_angles(p)));
  result.final_energy = energy;
  result.protocol = Protocol(std::move(dirs), "uniform-" + std::to_string(n));
  return result;
}

std::string format_protocol(const Protocol& protocol) {
  const auto vecs = protocol.unit_vectors();
  std::string out;
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (i) out += ' ';
      out += format_double(vecs[i][axis]);
    }
    out += '\n';
  }
  return out;
}

void write_protocol(const Protocol& protocol, const std::filesystem::path& path) {
  write_file_atomic(path, format_protocol(protocol));
}

Protocol parse_protocol(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<double> row;
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw IoError("malformed bvec: bad number '" + tok + "'");
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.size() != 3)
    throw IoError("malformed bvec: expected 3 rows, found " + std::to_string(rows.size()));
  if (rows[1].size() != rows[0].size() || rows[2].size() != rows[0].size()) throw IoError("ragged bvec");

  std::vector<Direction> dirs;
  dirs.reserve(rows[0].size());
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    const Vec3 v(rows[0][i], rows[1][i], rows[2][i]);
    if (std::abs(v.norm() - 1.0) > 1e-6) throw IoError("non-unit direction at column " + std::to_string(i));
    dirs.push_back(unit_to_angles(v));
  }
  try {
    return Protocol(std::move(dirs));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("malformed bvec: ") + e.what());
  }
}

Protocol read_protocol(const std::filesystem::path& path) {
  return parse_protocol(read_file(path));
}

}  // namespace qsamp
