#pragma once

#include <span>

#include <Eigen/Core>

#include "qsamp/sphere.h"

namespace qsamp {

/// Real symmetric spherical-harmonic basis of even maximum order L.
/// Terms are indexed 1..R with j(l, m) = (l^2 + l + 2)/2 + m, R = (L+1)(L+2)/2.
class BasisSpec {
 public:
  static constexpr int kDefaultOrder = 4;

  explicit BasisSpec(int order = kDefaultOrder);

  int order() const { return order_; }
  int size() const { return (order_ + 1) * (order_ + 2) / 2; }

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;

 private:
  int order_;
};

struct DegreeOrder {
  int l = 0;
  int m = 0;
  friend bool operator==(const DegreeOrder&, const DegreeOrder&) = default;
};

/// 1-based term index <-> (l, m). l must be even, |m| <= l.
DegreeOrder index_to_lm(int j);
int lm_to_index(int l, int m);

/// Associated Legendre function P_l^m(x), without the Condon-Shortley phase.
double assoc_legendre(int l, int m, double x);

/// Y_j(theta, phi) for 1 <= j <= spec.size():
///   m < 0: sqrt2 K P_l^|m|(cos t) cos(|m| p)
///   m = 0:       K P_l^0(cos t)
///   m > 0: sqrt2 K P_l^m(cos t) sin(m p)
/// with K = sqrt((2l+1)/(4 pi) (l-|m|)!/(l+|m|)!).
double real_sh(const BasisSpec& spec, int j, double theta, double phi);

/// Row vector of all R basis values at one direction, plus the two
/// angular derivatives when requested (pass null to skip).
void evaluate_basis(const BasisSpec& spec, const Direction& d, Eigen::Ref<Eigen::RowVectorXd> values,
                    Eigen::RowVectorXd* d_theta = nullptr, Eigen::RowVectorXd* d_phi = nullptr);

/// N x R design matrix, row i = [Y_1(d_i) ... Y_R(d_i)].
Eigen::MatrixXd basis_matrix(std::span<const Direction> dirs, const BasisSpec& spec);
inline Eigen::MatrixXd basis_matrix(const Protocol& p, const BasisSpec& spec) {
  return basis_matrix(p.directions(), spec);
}

struct BasisGradient {
  Eigen::MatrixXd d_theta;  // N x R, dY_j/dtheta at each direction
  Eigen::MatrixXd d_phi;    // N x R, dY_j/dphi at each direction
};

/// Entrywise angular derivatives of the design matrix. Within 1e-8 of a
/// pole, theta-derivatives of m != 0 terms are evaluated at theta clamped
/// 1e-8 into the interior.
BasisGradient basis_matrix_grad(std::span<const Direction> dirs, const BasisSpec& spec);
inline BasisGradient basis_matrix_grad(const Protocol& p, const BasisSpec& spec) {
  return basis_matrix_grad(p.directions(), spec);
}

}  // namespace qsamp

namespace qsamp {

/// Design matrix bound to the protocol and basis it was built from.
class BasisMatrix {
 public:
  BasisMatrix(Protocol protocol, BasisSpec spec)
      : protocol_(std::move(protocol)), spec_(spec), values_(basis_matrix(protocol_, spec_)) {}

  const Protocol& protocol() const { return protocol_; }
  const BasisSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

 private:
  Protocol protocol_;
  BasisSpec spec_;
  Eigen::MatrixXd values_;
};

}  // namespace qsamp
