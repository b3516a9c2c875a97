#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace qsamp {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct MlpGradients {
  std::vector<DenseLayer> layers;
  Eigen::MatrixXd input;  // d loss / d input, same shape as the forward input
};

/// Fully connected network with rectifier activations on every hidden layer
/// and a linear output layer. Inputs are column-batched: in x batch.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  /// widths = {in, hidden..., out}.
  static Mlp glorot(std::span<const int> widths, std::uint64_t seed);
  static Mlp zeros(std::span<const int> widths);

  Eigen::Index input_size() const { return layers_.front().weight.cols(); }
  Eigen::Index output_size() const { return layers_.back().weight.rows(); }
  std::vector<int> widths() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t parameter_count() const;

  /// Post-activation outputs of every layer; activations[0] is the input.
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Tape& tape) const;

  /// Reverse-mode gradients given d loss / d output for the taped batch.
  /// Parameter gradients are summed over the batch columns.
  MlpGradients backward(const Tape& tape, const Eigen::MatrixXd& upstream) const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace qsamp
