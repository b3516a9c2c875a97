#include "qsamp/mlp.h"

#include <cmath>
#include <string>

#include "qsamp/error.h"
#include "qsamp/rng.h"

namespace qsamp {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("mlp needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.bias.size() != l.weight.rows()) throw InvalidArgument("mlp layer " + std::to_string(k) + ": bias size mismatch");
    if (k > 0 && l.weight.cols() != layers_[k - 1].weight.rows())
      throw InvalidArgument("mlp layer " + std::to_string(k) + ": input width does not chain");
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw InvalidArgument("mlp layer " + std::to_string(k) + ": non-finite parameters");
  }
}

Mlp Mlp::glorot(std::span<const int> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw InvalidArgument("mlp needs input and output widths");
  Rng rng = make_rng(seed, "glorot");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const int in = widths[k];
    const int out = widths[k + 1];
    if (in < 1 || out < 1) throw InvalidArgument("mlp widths must be positive");
    const double limit = std::sqrt(6.0 / (in + out));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    // fill row by row so the draw order does not depend on storage order
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = limit * (2.0 * uniform01(rng) - 1.0);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::zeros(std::span<const int> widths) {
  if (widths.size() < 2) throw InvalidArgument("mlp needs input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k)
    layers.push_back({Eigen::MatrixXd::Zero(widths[k + 1], widths[k]), Eigen::VectorXd::Zero(widths[k + 1])});
  return Mlp(std::move(layers));
}

std::vector<int> Mlp::widths() const {
  std::vector<int> w{static_cast<int>(input_size())};
  for (const auto& l : layers_) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  Tape tape;
  return forward(input, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Tape& tape) const {
  if (layers_.empty()) throw InvalidArgument("mlp has no layers");
  if (input.rows() != input_size())
    throw InvalidArgument("mlp input has " + std::to_string(input.rows()) + " rows, expected " +
                          std::to_string(input_size()));
  tape.activations.resize(layers_.size() + 1);
  tape.activations[0] = input;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    auto& a = tape.activations[k + 1];
    a.noalias() = layers_[k].weight * tape.activations[k];
    a.colwise() += layers_[k].bias;
    if (k + 1 < layers_.size()) a = a.cwiseMax(0.0);
  }
  return tape.activations.back();
}

MlpGradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& upstream) const {
  if (tape.activations.size() != layers_.size() + 1) throw InvalidArgument("mlp tape does not match network");
  const auto& out = tape.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
    throw InvalidArgument("mlp upstream gradient shape mismatch");

  MlpGradients g;
  g.layers.resize(layers_.size());
  Eigen::MatrixXd delta = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& a_prev = tape.activations[k];
    g.layers[k].weight.noalias() = delta * a_prev.transpose();
    g.layers[k].bias = delta.rowwise().sum();
    Eigen::MatrixXd next;
    next.noalias() = layers_[k].weight.transpose() * delta;
    // rectifier derivative of the previous hidden layer, 0 at the kink
    if (k > 0) next = (a_prev.array() > 0.0).select(next, 0.0);
    delta.swap(next);
  }
  g.input = std::move(delta);
  return g;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k) {
    const auto& x = a.layers_[k];
    const auto& y = b.layers_[k];
    if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols()) return false;
    if (x.weight != y.weight || x.bias != y.bias) return false;
  }
  return true;
}

}  // namespace qsamp
