#include "qsamp/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "qsamp/error.h"
#include "qsamp/io.h"
#include "qsamp/qspace.h"
#include "qsamp/rng.h"
#include "qsamp/shbasis.h"

namespace qsamp {

std::string_view to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::learned: return "learned";
    case SamplingMode::random_frozen: return "random-frozen";
    case SamplingMode::uniform_frozen: return "uniform-frozen";
  }
  return "?";
}

SamplingMode parse_sampling_mode(std::string_view text) {
  if (text == "learned") return SamplingMode::learned;
  if (text == "random-frozen" || text == "random") return SamplingMode::random_frozen;
  if (text == "uniform-frozen" || text == "uniform") return SamplingMode::uniform_frozen;
  throw InvalidArgument("unknown sampling mode '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  // zero learning rates are accepted: they freeze a group
  if (!(lr_sampling >= 0.0) || !(lr_recon >= 0.0)) throw InvalidArgument("learning rates must be >= 0");
  if (!(lambda_tv >= 0.0)) throw InvalidArgument("lambda_tv must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (hidden < 1 || hidden_layers < 0) throw InvalidArgument("bad hidden layer configuration");
  if (!init_angles.empty() && init_angles.size() != n) throw InvalidArgument("init protocol size != n");
  BasisSpec check(sh_order);
  (void)check;
}

Protocol TrainedModel::protocol() const {
  std::vector<Direction> dirs;
  dirs.reserve(angles.size());
  for (const auto& a : angles) dirs.push_back(to_upper_hemisphere(a));
  return Protocol(std::move(dirs), std::string(to_string(config.mode)) + "-n" + std::to_string(angles.size()));
}

std::uint64_t protocol_hash(const Protocol& p) { return fnv1a64(format_protocol(p)); }

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) throw InvalidArgument("adam_step: parameter/gradient size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw DivergenceError("diverged");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw InvalidArgument("adam_step: state size mismatch");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = AdamState::kBeta1 * state.m[i] + (1.0 - AdamState::kBeta1) * grads[i];
    state.v[i] = AdamState::kBeta2 * state.v[i] + (1.0 - AdamState::kBeta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::kEpsilon);
  }
}

std::vector<Direction> initial_angles(const TrainConfig& cfg) {
  if (!cfg.init_angles.empty()) return cfg.init_angles;
  const std::uint64_t seed = derive_seed(cfg.seed, "sampling-init");
  Protocol p;
  const bool use_uniform = cfg.mode != SamplingMode::random_frozen && cfg.n >= 2;
  p = use_uniform ? electrostatic_protocol(cfg.n, cfg.electrostatic_iterations, seed) : random_protocol(cfg.n, seed);
  return {p.directions().begin(), p.directions().end()};
}

namespace {

struct PreparedImage {
  const PhantomImage* image;
  Eigen::MatrixXd coeffs;  // R x V
};

std::vector<PreparedImage> prepare(std::span<const PhantomImage> images, const FullProtocolFit& fit) {
  std::vector<PreparedImage> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    if (!img.protocol || !img.protocol->same_directions(fit.protocol()))
      throw InvalidArgument("image is not sampled on the model's full protocol");
    out.push_back({&img, fit.coefficients(img.signals)});
  }
  return out;
}

std::vector<int> network_widths(const TrainConfig& cfg, std::size_t full_size) {
  std::vector<int> w{static_cast<int>(cfg.n)};
  for (int k = 0; k < cfg.hidden_layers; ++k) w.push_back(cfg.hidden);
  w.push_back(static_cast<int>(full_size));
  return w;
}

// Loss and gradients of the mean per-image loss over `batch`.
JointGradient batch_gradient(const Mlp& mlp, std::span<const Direction> angles,
                             std::span<const PreparedImage* const> batch, const BasisSpec& spec,
                             const LossConfig& loss_cfg, bool want_angles) {
  Eigen::Index total = 0;
  for (const auto* p : batch) total += p->coeffs.cols();
  const Eigen::Index r = spec.size();
  Eigen::MatrixXd coeffs(r, total);
  Eigen::Index col = 0;
  for (const auto* p : batch) {
    coeffs.middleCols(col, p->coeffs.cols()) = p->coeffs;
    col += p->coeffs.cols();
  }

  const Eigen::MatrixXd sparse_basis = basis_matrix(angles, spec);
  const Eigen::MatrixXd sparse = sparse_basis * coeffs;
  Mlp::Tape tape;
  const Eigen::MatrixXd xhat = mlp.forward(sparse, tape);

  JointGradient out;
  Eigen::MatrixXd upstream(xhat.rows(), xhat.cols());
  const double scale = 1.0 / static_cast<double>(batch.size());
  col = 0;
  for (const auto* p : batch) {
    const auto& img = *p->image;
    const Eigen::Index v = img.voxels();
    LossResult lr = loss(xhat.middleCols(col, v), img.signals, img.width, img.height, loss_cfg);
    out.loss += scale * lr.value;
    upstream.middleCols(col, v) = scale * lr.gradient;
    col += v;
  }

  out.network = mlp.backward(tape, upstream);
  if (want_angles) {
    const BasisGradient bg = basis_matrix_grad(angles, spec);
    const Eigen::MatrixXd m = out.network.input * coeffs.transpose();  // n x R
    out.d_theta = (bg.d_theta.array() * m.array()).rowwise().sum();
    out.d_phi = (bg.d_phi.array() * m.array()).rowwise().sum();
  }
  return out;
}

double mean_loss(const Mlp& mlp, std::span<const Direction> angles, const std::vector<PreparedImage>& images,
                 const BasisSpec& spec, const LossConfig& loss_cfg) {
  if (images.empty()) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd sparse_basis = basis_matrix(angles, spec);
  double total = 0.0;
  for (const auto& p : images) {
    const auto& img = *p.image;
    const Eigen::MatrixXd xhat = mlp.forward(sparse_basis * p.coeffs);
    total += loss(xhat, img.signals, img.width, img.height, loss_cfg).value;
  }
  return total / static_cast<double>(images.size());
}

}  // namespace

JointGradient joint_gradient(const Mlp& mlp, std::span<const Direction> angles, std::span<const PhantomImage> images,
                             std::shared_ptr<const Protocol> full, const BasisSpec& spec, const LossConfig& loss_cfg) {
  if (images.empty()) throw InvalidArgument("joint_gradient: no images");
  const FullProtocolFit fit(std::move(full), spec);
  const auto prepared = prepare(images, fit);
  std::vector<const PreparedImage*> batch;
  for (const auto& p : prepared) batch.push_back(&p);
  return batch_gradient(mlp, angles, batch, spec, loss_cfg, true);
}

TrainedModel train_joint(const TrainConfig& cfg, std::span<const PhantomImage> train,
                         std::span<const PhantomImage> val, std::shared_ptr<const Protocol> full,
                         const EpochCallback& on_epoch) {
  cfg.validate();
  if (!full) throw InvalidArgument("train_joint: null full protocol");
  if (train.empty()) throw InvalidArgument("train_joint: empty training set");
  if (cfg.n > full->size()) throw InvalidArgument("train_joint: n exceeds the full protocol size");

  const BasisSpec spec(cfg.sh_order);
  const FullProtocolFit fit(full, spec);
  const auto train_images = prepare(train, fit);
  const auto val_images = prepare(val, fit);

  TrainedModel model;
  model.config = cfg;
  model.full_size = full->size();
  model.full_protocol_hash = protocol_hash(*full);
  model.angles = initial_angles(cfg);
  const auto widths = network_widths(cfg, full->size());
  model.mlp = Mlp::glorot(widths, derive_seed(cfg.seed, "mlp-init"));

  const LossConfig loss_cfg{cfg.lambda_tv};
  const bool learn_angles = cfg.mode == SamplingMode::learned;
  std::vector<AdamState> weight_states(model.mlp.layers().size());
  std::vector<AdamState> bias_states(model.mlp.layers().size());
  AdamState angle_state;
  std::vector<double> angle_params(2 * cfg.n);
  std::vector<double> angle_grads(2 * cfg.n);

  std::vector<std::size_t> order(train_images.size());
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<const PreparedImage*> batch;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(cfg.seed, "shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(&train_images[order[k]]);

      JointGradient g = batch_gradient(model.mlp, model.angles, batch, spec, loss_cfg, learn_angles);
      if (!std::isfinite(g.loss))
        throw DivergenceError("diverged: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += g.loss;
      ++batches;

      auto& layers = model.mlp.layers();
      for (std::size_t k = 0; k < layers.size(); ++k) {
        auto& w = layers[k].weight;
        auto& b = layers[k].bias;
        const auto& gw = g.network.layers[k].weight;
        const auto& gb = g.network.layers[k].bias;
        adam_step(weight_states[k], {w.data(), static_cast<std::size_t>(w.size())},
                  {gw.data(), static_cast<std::size_t>(gw.size())}, cfg.lr_recon);
        adam_step(bias_states[k], {b.data(), static_cast<std::size_t>(b.size())},
                  {gb.data(), static_cast<std::size_t>(gb.size())}, cfg.lr_recon);
      }
      if (learn_angles) {
        for (std::size_t i = 0; i < cfg.n; ++i) {
          angle_params[2 * i] = model.angles[i].theta;
          angle_params[2 * i + 1] = model.angles[i].phi;
          angle_grads[2 * i] = g.d_theta(static_cast<Eigen::Index>(i));
          angle_grads[2 * i + 1] = g.d_phi(static_cast<Eigen::Index>(i));
        }
        adam_step(angle_state, angle_params, angle_grads, cfg.lr_sampling);
        for (std::size_t i = 0; i < cfg.n; ++i) model.angles[i] = {angle_params[2 * i], angle_params[2 * i + 1]};
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(batches);
    rec.val_loss = mean_loss(model.mlp, model.angles, val_images, spec, loss_cfg);
    if (!val_images.empty() && !std::isfinite(rec.val_loss))
      throw DivergenceError("diverged: non-finite validation loss at epoch " + std::to_string(epoch));
    model.curve.push_back(rec);

    const double score = val_images.empty() ? rec.train_loss : rec.val_loss;
    const bool is_best = score < best_val;
    if (is_best) best_val = score;
    if (on_epoch) on_epoch(model, is_best);
  }
  return model;
}

std::vector<MetricsRecord> evaluate_images(const TrainedModel& model, std::span<const PhantomImage> images,
                                           const MetricsConfig& cfg, const std::string& method) {
  std::vector<MetricsRecord> out;
  if (images.empty()) return out;
  const auto& full = images.front().protocol;
  if (!full) throw InvalidArgument("evaluate: image without protocol");
  if (full->size() != model.full_size || protocol_hash(*full) != model.full_protocol_hash)
    throw InvalidArgument("evaluate: protocol mismatch between model and data");

  const BasisSpec spec(model.config.sh_order);
  const FullProtocolFit fit(full, spec);
  const Eigen::MatrixXd q = fit.subsample_matrix(model.angles);
  for (const auto& img : images) {
    if (!img.protocol || !img.protocol->same_directions(*full))
      throw InvalidArgument("evaluate: protocol mismatch between model and data");
    const Eigen::MatrixXd xhat = cfg.identity ? img.signals : model.mlp.forward(q * img.signals);
    SsimOptions so = cfg.ssim;
    if (!so.peak) so.peak = img.signals.maxCoeff();
    MetricsRecord r;
    r.method = method;
    r.n = model.angles.size();
    r.bvalue = img.bvalue;
    r.psnr = psnr(xhat, img.signals, std::nullopt, cfg.psnr_cap);
    r.ssim = ssim(xhat, img.signals, img.width, img.height, so);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricsSummary> summarize(std::span<const MetricsRecord> records) {
  // keyed by (method order of first appearance, n, b)
  std::vector<std::string> methods;
  for (const auto& r : records)
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  std::map<std::tuple<std::size_t, std::size_t, double>, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records) {
    const auto mi = static_cast<std::size_t>(std::find(methods.begin(), methods.end(), r.method) - methods.begin());
    groups[{mi, r.n, r.bvalue}].push_back(&r);
  }
  std::vector<MetricsSummary> out;
  for (const auto& [key, group] : groups) {
    MetricsSummary s;
    s.method = methods[std::get<0>(key)];
    s.n = std::get<1>(key);
    s.bvalue = std::get<2>(key);
    s.count = group.size();
    const double count = static_cast<double>(group.size());
    for (const auto* r : group) {
      s.psnr_mean += r->psnr;
      s.ssim_mean += r->ssim;
    }
    s.psnr_mean /= count;
    s.ssim_mean /= count;
    for (const auto* r : group) {
      s.psnr_std += (r->psnr - s.psnr_mean) * (r->psnr - s.psnr_mean);
      s.ssim_std += (r->ssim - s.ssim_mean) * (r->ssim - s.ssim_mean);
    }
    s.psnr_std = std::sqrt(s.psnr_std / count);
    s.ssim_std = std::sqrt(s.ssim_std / count);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<MetricsSummary> evaluate(const TrainedModel& model, std::span<const PhantomImage> images,
                                     const MetricsConfig& cfg, const std::string& method) {
  const auto records = evaluate_images(model, images, cfg, method);
  return summarize(records);
}

std::string format_table(std::span<const MetricsSummary> rows) {
  std::vector<double> bvalues;
  std::vector<std::size_t> ns;
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(bvalues.begin(), bvalues.end(), r.bvalue) == bvalues.end()) bvalues.push_back(r.bvalue);
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::sort(bvalues.begin(), bvalues.end());
  std::sort(ns.begin(), ns.end());

  std::string out;
  char buf[64];
  for (double b : bvalues) {
    std::snprintf(buf, sizeof buf, "b = %g\n", b);
    out += buf;
    std::snprintf(buf, sizeof buf, "%-16s", "Method");
    out += buf;
    for (const char* metric : {"PSNR", "SSIM"})
      for (std::size_t n : ns) {
        std::snprintf(buf, sizeof buf, " %10s", (std::string(metric) + " n=" + std::to_string(n)).c_str());
        out += buf;
      }
    out += '\n';
    for (const auto& m : methods) {
      std::snprintf(buf, sizeof buf, "%-16s", m.c_str());
      out += buf;
      for (int metric = 0; metric < 2; ++metric)
        for (std::size_t n : ns) {
          const MetricsSummary* hit = nullptr;
          for (const auto& r : rows)
            if (r.method == m && r.n == n && r.bvalue == b) hit = &r;
          if (!hit) std::snprintf(buf, sizeof buf, " %10s", "-");
          else if (metric == 0) std::snprintf(buf, sizeof buf, " %10.2f", hit->psnr_mean);
          else std::snprintf(buf, sizeof buf, " %10.4f", hit->ssim_mean);
          out += buf;
        }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

}  // namespace qsamp
