#include "qsamp/checkpoint.h"

#include <bit>
#include <cstring>
#include <sstream>

#include "qsamp/error.h"
#include "qsamp/io.h"

namespace qsamp {

namespace {

constexpr const char* kMagic = "qsamp-checkpoint 1";

void put(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double get(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw IoError("checkpoint payload truncated");
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  pos += 8;
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string serialize_checkpoint(const TrainedModel& m) {
  const auto& c = m.config;
  std::ostringstream h;
  h << kMagic << '\n';
  h << "architecture mlp";
  for (int w : m.mlp.widths()) h << ' ' << w;
  h << '\n';
  h << "n " << m.angles.size() << '\n';
  h << "N " << m.full_size << '\n';
  h << "full_protocol_hash " << m.full_protocol_hash << '\n';
  h << "order " << c.sh_order << '\n';
  h << "mode " << to_string(c.mode) << '\n';
  h << "seed " << c.seed << '\n';
  h << "epochs " << c.epochs << '\n';
  h << "lr_sampling " << format_double(c.lr_sampling) << '\n';
  h << "lr_recon " << format_double(c.lr_recon) << '\n';
  h << "lambda_tv " << format_double(c.lambda_tv) << '\n';
  h << "batch_size " << c.batch_size << '\n';
  h << "hidden " << c.hidden << '\n';
  h << "hidden_layers " << c.hidden_layers << '\n';
  h << "electrostatic_iterations " << c.electrostatic_iterations << '\n';
  for (const auto& e : m.curve)
    h << "curve " << e.epoch << ' ' << format_double(e.train_loss) << ' ' << format_double(e.val_loss) << '\n';
  h << "end\n";

  std::string out = h.str();
  for (const auto& a : m.angles) {
    put(out, a.theta);
    put(out, a.phi);
  }
  for (const auto& l : m.mlp.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index k = 0; k < l.weight.cols(); ++k) put(out, l.weight(r, k));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) put(out, l.bias(r));
  }
  return out;
}

TrainedModel deserialize_checkpoint(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_line = [&]() {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw IoError("checkpoint header truncated");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw IoError("not a checkpoint");

  TrainedModel m;
  std::vector<int> widths;
  std::size_t n = 0;
  for (std::string line = next_line(); line != "end"; line = next_line()) {
    std::istringstream in(line);
    std::string key;
    in >> key;
    auto& c = m.config;
    if (key == "architecture") {
      std::string kind;
      in >> kind;
      if (kind != "mlp") throw IoError("unsupported architecture '" + kind + "'");
      for (int w; in >> w;) widths.push_back(w);
      in.clear();
    } else if (key == "n") in >> n;
    else if (key == "N") in >> m.full_size;
    else if (key == "full_protocol_hash") in >> m.full_protocol_hash;
    else if (key == "order") in >> c.sh_order;
    else if (key == "mode") {
      std::string mode;
      in >> mode;
      c.mode = parse_sampling_mode(mode);
    } else if (key == "seed") in >> c.seed;
    else if (key == "epochs") in >> c.epochs;
    else if (key == "lr_sampling") in >> c.lr_sampling;
    else if (key == "lr_recon") in >> c.lr_recon;
    else if (key == "lambda_tv") in >> c.lambda_tv;
    else if (key == "batch_size") in >> c.batch_size;
    else if (key == "hidden") in >> c.hidden;
    else if (key == "hidden_layers") in >> c.hidden_layers;
    else if (key == "electrostatic_iterations") in >> c.electrostatic_iterations;
    else if (key == "curve") {
      EpochRecord e;
      std::string train, val;
      in >> e.epoch >> train >> val;
      e.train_loss = std::stod(train);
      e.val_loss = std::stod(val);
      m.curve.push_back(e);
    } else {
      throw IoError("unknown checkpoint key '" + key + "'");
    }
    if (in.fail()) throw IoError("bad checkpoint line: " + line);
  }
  m.config.n = n;
  if (widths.size() < 2 || n == 0 || static_cast<std::size_t>(widths.front()) != n ||
      static_cast<std::size_t>(widths.back()) != m.full_size)
    throw IoError("checkpoint architecture inconsistent with n/N");

  m.angles.resize(n);
  for (auto& a : m.angles) {
    a.theta = get(bytes, pos);
    a.phi = get(bytes, pos);
  }
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    DenseLayer l{Eigen::MatrixXd(widths[k + 1], widths[k]), Eigen::VectorXd(widths[k + 1])};
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get(bytes, pos);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = get(bytes, pos);
    layers.push_back(std::move(l));
  }
  if (pos != bytes.size()) throw IoError("checkpoint has trailing bytes");
  try {
    m.mlp = Mlp(std::move(layers));
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("corrupt checkpoint: ") + e.what());
  }
  return m;
}

void write_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(model));
}

TrainedModel read_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

std::string format_curve_csv(const TrainedModel& model) {
  std::string out = "epoch,train_loss,val_loss,lr_sampling,lr_recon\n";
  for (const auto& e : model.curve) {
    out += std::to_string(e.epoch) + ',' + format_double(e.train_loss) + ',' + format_double(e.val_loss) + ',' +
           format_double(model.config.lr_sampling) + ',' + format_double(model.config.lr_recon) + '\n';
  }
  return out;
}

}  // namespace qsamp
