#include "qsamp/phantom.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "qsamp/error.h"
#include "qsamp/io.h"
#include "qsamp/rng.h"

namespace qsamp {

double tensor_signal(const Direction& g, double bvalue, std::span<const Compartment> compartments, double s0) {
  double total = 0.0;
  for (const auto& c : compartments) total += c.fraction;
  if (compartments.empty() || std::abs(total - 1.0) > 1e-12)
    throw InvalidArgument("tensor_signal: fractions must sum to 1");
  const Vec3 u = angles_to_unit(g);
  double s = 0.0;
  for (const auto& c : compartments) {
    if (c.fraction < 0.0) throw InvalidArgument("tensor_signal: negative fraction");
    s += c.fraction * std::exp(-bvalue * u.dot(c.tensor * u));
  }
  return s0 * s;
}

Eigen::Matrix3d cylinder_tensor(const Vec3& axis, double lambda_par, double lambda_perp) {
  const Vec3 a = axis.normalized();
  return lambda_perp * Eigen::Matrix3d::Identity() + (lambda_par - lambda_perp) * a * a.transpose();
}

PhantomLayout make_layout(int width, int height, std::uint64_t seed, const PhantomOptions& options) {
  if (width < 8 || height < 8) throw InvalidArgument("phantom must be at least 8x8");
  Rng rng = make_rng(seed, "phantom-layout");
  auto u = [&] { return uniform01(rng); };

  PhantomLayout out;
  out.width = width;
  out.height = height;
  const auto nvox = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  out.labels.assign(nvox, static_cast<std::uint8_t>(Region::background));
  out.axis.assign(nvox, Vec3::Zero());
  out.second_axis.assign(nvox, Vec3::Zero());

  const double w = width;
  const double h = height;
  const double small = std::min(w, h);

  // tissue ellipse
  const double cx = w / 2.0 + (u() - 0.5) * w / 8.0;
  const double cy = h / 2.0 + (u() - 0.5) * h / 8.0;
  const double rx = w * (0.36 + 0.08 * u());
  const double ry = h * (0.36 + 0.08 * u());

  // curved band: circle arc whose centre lies outside the image
  const double psi = 2.0 * std::numbers::pi * u();
  const double dist = (0.7 + 0.4 * u()) * std::max(w, h);
  const double acx = cx + dist * std::cos(psi);
  const double acy = cy + dist * std::sin(psi);
  const double r0 = dist + (u() - 0.5) * 0.2 * small;
  const double half_thickness = std::max(1.0, (0.18 + 0.1 * u()) * small / 2.0);
  const double elevation = (u() - 0.5) * 0.7;

  // crossing patch near the tissue centre
  const int sx = std::max(2, static_cast<int>(std::lround((0.2 + 0.1 * u()) * w)));
  const int sy = std::max(2, static_cast<int>(std::lround((0.2 + 0.1 * u()) * h)));
  const double pcx = cx + (u() - 0.5) * 2.0 * rx / 3.0;
  const double pcy = cy + (u() - 0.5) * 2.0 * ry / 3.0;
  const int x0 = static_cast<int>(std::floor(pcx - sx / 2.0));
  const int y0 = static_cast<int>(std::floor(pcy - sy / 2.0));
  const double beta = std::numbers::pi * u();
  const double alpha = options.crossing_angle_deg * std::numbers::pi / 180.0;
  const Vec3 cross_a(std::cos(beta), std::sin(beta), 0.0);
  const Vec3 cross_b(std::cos(beta + alpha), std::sin(beta + alpha), 0.0);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto v = static_cast<std::size_t>(y * width + x);
      const double px = x + 0.5;
      const double py = y + 0.5;
      const double ex = (px - cx) / rx;
      const double ey = (py - cy) / ry;
      if (ex * ex + ey * ey > 1.0) continue;
      out.labels[v] = static_cast<std::uint8_t>(Region::isotropic);

      const double dx = px - acx;
      const double dy = py - acy;
      const double r = std::hypot(dx, dy);
      if (std::abs(r - r0) <= half_thickness) {
        // tangent of the arc, tilted out of plane by a fixed elevation
        const double tx = -dy / r;
        const double ty = dx / r;
        out.labels[v] = static_cast<std::uint8_t>(Region::single_fiber);
        out.axis[v] = Vec3(std::cos(elevation) * tx, std::cos(elevation) * ty, std::sin(elevation));
      }
      if (x >= x0 && x < x0 + sx && y >= y0 && y < y0 + sy) {
        out.labels[v] = static_cast<std::uint8_t>(Region::crossing);
        out.axis[v] = cross_a;
        out.second_axis[v] = cross_b;
      }
    }
  }
  return out;
}

PhantomImage make_phantom(int width, int height, std::shared_ptr<const Protocol> protocol, double bvalue,
                          std::uint64_t seed, const PhantomOptions& options) {
  if (!protocol) throw InvalidArgument("make_phantom: null protocol");
  if (!(bvalue >= 0.0)) throw InvalidArgument("make_phantom: b-value must be >= 0");
  const PhantomLayout layout = make_layout(width, height, seed, options);

  PhantomImage img;
  img.width = width;
  img.height = height;
  img.bvalue = bvalue;
  img.seed = seed;
  img.protocol = std::move(protocol);
  img.labels = layout.labels;
  const auto n = static_cast<Eigen::Index>(img.protocol->size());
  img.signals = Eigen::MatrixXd::Zero(n, img.voxels());

  const auto dirs = img.protocol->directions();
  const Eigen::Matrix3d iso = options.iso_diffusivity * Eigen::Matrix3d::Identity();
  std::vector<Compartment> comps;
  for (Eigen::Index v = 0; v < img.voxels(); ++v) {
    const auto vi = static_cast<std::size_t>(v);
    comps.clear();
    switch (static_cast<Region>(layout.labels[vi])) {
      case Region::background:
        continue;
      case Region::isotropic:
        comps.push_back({1.0, iso});
        break;
      case Region::single_fiber:
        comps.push_back({1.0, cylinder_tensor(layout.axis[vi], options.lambda_par, options.lambda_perp)});
        break;
      case Region::crossing:
        comps.push_back({0.5, cylinder_tensor(layout.axis[vi], options.lambda_par, options.lambda_perp)});
        comps.push_back({0.5, cylinder_tensor(layout.second_axis[vi], options.lambda_par, options.lambda_perp)});
        break;
    }
    for (Eigen::Index i = 0; i < n; ++i)
      img.signals(i, v) = tensor_signal(dirs[static_cast<std::size_t>(i)], bvalue, comps, options.s0);
  }
  return img;
}

PhantomImage add_noise(const PhantomImage& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("add_noise: sigma must be >= 0");
  PhantomImage out = image;
  if (sigma == 0.0) return out;
  Rng rng = make_rng(seed, "rician");
  double* data = out.signals.data();
  for (Eigen::Index k = 0; k < out.signals.size(); ++k) {
    const double e1 = sigma * standard_normal(rng);
    const double e2 = sigma * standard_normal(rng);
    data[k] = std::hypot(data[k] + e1, e2);
  }
  return out;
}

namespace {

constexpr const char* kPhantomMagic = "qsamp-phantom 1";

void append_le_doubles(std::string& out, const double* data, std::size_t count) {
  const std::size_t offset = out.size();
  out.resize(offset + count * sizeof(double));
  char* dst = out.data() + offset;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, data, count * sizeof(double));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(data[i]);
      for (int b = 0; b < 8; ++b) dst[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
}

void read_le_doubles(const char* src, double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data, src, count * sizeof(double));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[i * 8 + b])) << (8 * b);
      data[i] = std::bit_cast<double>(bits);
    }
  }
}

}  // namespace

void write_phantom(const PhantomImage& image, const std::filesystem::path& path, const std::string& protocol_ref) {
  std::string out;
  out += kPhantomMagic;
  out += '\n';
  out += "width " + std::to_string(image.width) + '\n';
  out += "height " + std::to_string(image.height) + '\n';
  out += "directions " + std::to_string(image.signals.rows()) + '\n';
  out += "bvalue " + format_double(image.bvalue) + '\n';
  out += "seed " + std::to_string(image.seed) + '\n';
  out += "protocol " + protocol_ref + '\n';
  out += "end\n";
  out.append(reinterpret_cast<const char*>(image.labels.data()), image.labels.size());
  append_le_doubles(out, image.signals.data(), static_cast<std::size_t>(image.signals.size()));
  write_file_atomic(path, out);
}

PhantomImage read_phantom(const std::filesystem::path& path, std::shared_ptr<const Protocol> protocol) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw IoError("truncated phantom header: " + path.string());
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };

  if (next_line() != kPhantomMagic) throw IoError("not a phantom file: " + path.string());
  PhantomImage img;
  long long directions = -1;
  std::string protocol_ref;
  for (std::string line = next_line(); line != "end"; line = next_line()) {
    std::istringstream in(line);
    std::string key;
    in >> key;
    if (key == "width") in >> img.width;
    else if (key == "height") in >> img.height;
    else if (key == "directions") in >> directions;
    else if (key == "bvalue") in >> img.bvalue;
    else if (key == "seed") in >> img.seed;
    else if (key == "protocol") in >> protocol_ref;
    else throw IoError("unknown phantom header key '" + key + "' in " + path.string());
    if (in.fail()) throw IoError("bad phantom header line '" + line + "' in " + path.string());
  }
  if (img.width < 1 || img.height < 1 || directions < 1) throw IoError("incomplete phantom header: " + path.string());

  if (!protocol) {
    if (protocol_ref.empty()) throw IoError("phantom has no protocol reference: " + path.string());
    protocol = std::make_shared<const Protocol>(read_protocol(path.parent_path() / protocol_ref));
  }
  if (static_cast<long long>(protocol->size()) != directions)
    throw IoError("phantom direction count does not match its protocol: " + path.string());
  img.protocol = std::move(protocol);

  const auto nvox = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  const auto nvals = nvox * static_cast<std::size_t>(directions);
  if (bytes.size() - pos != nvox + nvals * sizeof(double)) throw IoError("phantom payload size mismatch: " + path.string());
  img.labels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + nvox));
  img.signals.resize(directions, static_cast<Eigen::Index>(nvox));
  read_le_doubles(bytes.data() + pos + nvox, img.signals.data(), nvals);
  return img;
}

}  // namespace qsamp
