#include "qsamp/dataset.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qsamp/error.h"
#include "qsamp/io.h"
#include "qsamp/qspace.h"
#include "qsamp/rng.h"

namespace qsamp {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::array<std::size_t, 3> split_sizes(std::size_t count, std::array<double, 3> ratios) {
  for (double r : ratios)
    if (!(r >= 0.0)) throw InvalidArgument("split ratios must be nonnegative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
  const auto val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(count)));
  const auto test = static_cast<std::size_t>(std::llround(ratios[2] * static_cast<double>(count)));
  if (val + test > count) throw InvalidArgument("split ratios leave no room for training data");
  return {count - val - test, val, test};
}

const std::vector<DatasetEntry>& Dataset::entries(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

std::vector<PhantomImage> Dataset::images(Split s, double bvalue) const {
  std::vector<PhantomImage> out;
  for (const auto& e : entries(s)) {
    const PhantomImage* hit = nullptr;
    for (const auto& img : e.images)
      if (img.bvalue == bvalue) hit = &img;
    if (!hit) throw InvalidArgument("dataset has no " + std::string(split_name(s)) + " images at b=" + format_double(bvalue));
    out.push_back(*hit);
  }
  return out;
}

namespace {

std::uint64_t bvalue_key(double b) { return std::bit_cast<std::uint64_t>(b); }

DatasetEntry make_entry(const DatasetSpec& spec, const std::shared_ptr<const Protocol>& protocol,
                        const FullProtocolFit* band, std::uint64_t seed, bool all_bvalues) {
  DatasetEntry e;
  e.seed = seed;
  const std::size_t nb = all_bvalues ? spec.bvalues.size() : 1;
  for (std::size_t k = 0; k < nb; ++k) {
    const double b = spec.bvalues[k];
    PhantomImage img = make_phantom(spec.width, spec.height, protocol, b, seed, spec.phantom);
    if (band) img.signals = band->basis().values() * band->coefficients(img.signals);
    e.images.push_back(add_noise(img, spec.sigma, derive_seed(seed, "noise", bvalue_key(b))));
  }
  return e;
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec, std::shared_ptr<const Protocol> protocol) {
  if (!protocol) throw InvalidArgument("make_dataset: null protocol");
  if (spec.bvalues.empty()) throw InvalidArgument("make_dataset: need at least one b-value");
  if (!(spec.sigma >= 0.0)) throw InvalidArgument("make_dataset: sigma must be >= 0");

  std::unique_ptr<FullProtocolFit> band;
  if (spec.bandlimit_order >= 0) band = std::make_unique<FullProtocolFit>(protocol, BasisSpec(spec.bandlimit_order));

  Dataset ds;
  ds.spec = spec;
  ds.protocol = protocol;
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < spec.train; ++i)
    ds.train.push_back(make_entry(spec, protocol, band.get(), derive_seed(spec.seed, "phantom", index++), false));
  for (std::size_t i = 0; i < spec.val; ++i)
    ds.val.push_back(make_entry(spec, protocol, band.get(), derive_seed(spec.seed, "phantom", index++), false));
  for (std::size_t i = 0; i < spec.test; ++i)
    ds.test.push_back(make_entry(spec, protocol, band.get(), derive_seed(spec.seed, "phantom", index++), true));
  return ds;
}

Dataset make_dataset(std::size_t count, std::array<double, 3> ratios, std::shared_ptr<const Protocol> protocol,
                     std::vector<double> bvalues, double sigma, std::uint64_t seed) {
  const auto sizes = split_sizes(count, ratios);
  DatasetSpec spec;
  spec.train = sizes[0];
  spec.val = sizes[1];
  spec.test = sizes[2];
  spec.bvalues = std::move(bvalues);
  spec.sigma = sigma;
  spec.seed = seed;
  return make_dataset(spec, std::move(protocol));
}

namespace {

constexpr const char* kManifestMagic = "qsamp-dataset 1";

std::string phantom_file(Split s, std::size_t index, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_%04zu_b%g.phantom", std::string(split_name(s)).c_str(), index, b);
  return buf;
}

}  // namespace

std::string format_manifest(const Dataset& ds) {
  const auto& s = ds.spec;
  std::ostringstream out;
  out << kManifestMagic << '\n';
  out << "seed " << s.seed << '\n';
  out << "width " << s.width << '\n';
  out << "height " << s.height << '\n';
  out << "sigma " << format_double(s.sigma) << '\n';
  out << "bandlimit_order " << s.bandlimit_order << '\n';
  out << "bvalues";
  for (double b : s.bvalues) out << ' ' << format_double(b);
  out << '\n';
  out << "lambda_par " << format_double(s.phantom.lambda_par) << '\n';
  out << "lambda_perp " << format_double(s.phantom.lambda_perp) << '\n';
  out << "iso_diffusivity " << format_double(s.phantom.iso_diffusivity) << '\n';
  out << "s0 " << format_double(s.phantom.s0) << '\n';
  out << "crossing_angle_deg " << format_double(s.phantom.crossing_angle_deg) << '\n';
  out << "protocol protocol.bvec\n";
  out << "counts " << ds.train.size() << ' ' << ds.val.size() << ' ' << ds.test.size() << '\n';
  for (Split sp : {Split::train, Split::val, Split::test}) {
    const auto& entries = ds.entries(sp);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out << split_name(sp) << ' ' << i << ' ' << entries[i].seed;
      for (const auto& img : entries[i].images) out << ' ' << phantom_file(sp, i, img.bvalue);
      out << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_protocol(*ds.protocol, dir / "protocol.bvec");
  for (Split sp : {Split::train, Split::val, Split::test}) {
    const auto& entries = ds.entries(sp);
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (const auto& img : entries[i].images) write_phantom(img, dir / phantom_file(sp, i, img.bvalue));
  }
  write_file_atomic(dir / "manifest.txt", format_manifest(ds));
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest)) throw IoError("dataset not found: " + dir.string());
  std::istringstream in(read_file(manifest));
  std::string line;
  if (!std::getline(in, line) || line != kManifestMagic) throw IoError("not a dataset manifest: " + manifest.string());

  Dataset ds;
  ds.spec.bvalues.clear();
  ds.protocol = std::make_shared<const Protocol>(read_protocol(dir / "protocol.bvec"));
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto& s = ds.spec;
    if (key == "seed") ls >> s.seed;
    else if (key == "width") ls >> s.width;
    else if (key == "height") ls >> s.height;
    else if (key == "sigma") ls >> s.sigma;
    else if (key == "bandlimit_order") ls >> s.bandlimit_order;
    else if (key == "bvalues") {
      for (double b; ls >> b;) s.bvalues.push_back(b);
      ls.clear();
    } else if (key == "lambda_par") ls >> s.phantom.lambda_par;
    else if (key == "lambda_perp") ls >> s.phantom.lambda_perp;
    else if (key == "iso_diffusivity") ls >> s.phantom.iso_diffusivity;
    else if (key == "s0") ls >> s.phantom.s0;
    else if (key == "crossing_angle_deg") ls >> s.phantom.crossing_angle_deg;
    else if (key == "protocol") {
      std::string ignored;
      ls >> ignored;
    } else if (key == "counts") ls >> s.train >> s.val >> s.test;
    else if (key == "train" || key == "val" || key == "test") {
      std::size_t index = 0;
      DatasetEntry e;
      ls >> index >> e.seed;
      for (std::string file; ls >> file;) e.images.push_back(read_phantom(dir / file, ds.protocol));
      ls.clear();
      if (e.images.empty()) throw IoError("manifest entry without phantom files: " + line);
      auto& target = key == "train" ? ds.train : key == "val" ? ds.val : ds.test;
      target.push_back(std::move(e));
    } else {
      throw IoError("unknown manifest key '" + key + "'");
    }
    if (ls.fail()) throw IoError("bad manifest line: " + line);
  }
  if (!ended) throw IoError("truncated manifest: " + manifest.string());
  if (ds.train.size() != ds.spec.train || ds.val.size() != ds.spec.val || ds.test.size() != ds.spec.test)
    throw IoError("manifest counts do not match its entries");
  return ds;
}

}  // namespace qsamp
