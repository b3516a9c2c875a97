#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "oracles.h"
#include "qsamp/error.h"
#include "qsamp/rng.h"
#include "qsamp/shbasis.h"

using namespace qsamp;
using std::numbers::pi;

TEST_CASE("term indexing") {
  CHECK(lm_to_index(0, 0) == 1);
  CHECK(lm_to_index(2, -2) == 2);
  CHECK(lm_to_index(2, 2) == 6);
  CHECK(lm_to_index(4, 4) == 15);
  CHECK(BasisSpec(4).size() == 15);
  CHECK(BasisSpec(8).size() == 45);
  for (int l = 0; l <= 8; l += 2)
    for (int m = -l; m <= l; ++m) CHECK(index_to_lm(lm_to_index(l, m)) == DegreeOrder{l, m});
  for (int j = 1; j <= 45; ++j) {
    const auto lm = index_to_lm(j);
    CHECK(lm_to_index(lm.l, lm.m) == j);
  }
  CHECK_THROWS_AS(lm_to_index(1, 0), InvalidArgument);
  CHECK_THROWS_AS(BasisSpec(3), InvalidArgument);
}

TEST_CASE("associated Legendre values") {
  for (double x : {-1.0, -0.3, 0.0, 0.7, 1.0}) CHECK(assoc_legendre(0, 0, x) == 1.0);
  CHECK(assoc_legendre(2, 0, 1.0) == doctest::Approx(1.0));
  CHECK(assoc_legendre(2, 2, 0.0) == doctest::Approx(3.0));
  // closed forms without the Condon-Shortley phase
  for (double x : {-0.9, -0.2, 0.4, 0.8}) {
    const double s = std::sqrt(1 - x * x);
    CHECK(assoc_legendre(2, 1, x) == doctest::Approx(3 * x * s));
    CHECK(assoc_legendre(4, 0, x) == doctest::Approx((35 * std::pow(x, 4) - 30 * x * x + 3) / 8));
    CHECK(assoc_legendre(4, 4, x) == doctest::Approx(105 * std::pow(s, 4)));
  }
  CHECK_THROWS_AS(assoc_legendre(2, 3, 0.0), InvalidArgument);
  CHECK_THROWS_AS(assoc_legendre(2, 1, 1.5), InvalidArgument);
}

TEST_CASE("real SH closed forms at order 2") {
  const BasisSpec spec(4);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double t = pi * uniform01(rng);
    const double p = 2 * pi * uniform01(rng);
    const double st = std::sin(t), ct = std::cos(t);
    CHECK(real_sh(spec, 1, t, p) == doctest::Approx(0.5 / std::sqrt(pi)));
    CHECK(real_sh(spec, 1, t, p) == doctest::Approx(0.2820947918));
    CHECK(real_sh(spec, 4, t, p) == doctest::Approx(0.25 * std::sqrt(5 / pi) * (3 * ct * ct - 1)));
    CHECK(real_sh(spec, 2, t, p) == doctest::Approx(0.25 * std::sqrt(15 / pi) * st * st * std::cos(2 * p)));
    CHECK(real_sh(spec, 6, t, p) == doctest::Approx(0.25 * std::sqrt(15 / pi) * st * st * std::sin(2 * p)));
    CHECK(real_sh(spec, 3, t, p) == doctest::Approx(0.5 * std::sqrt(15 / pi) * st * ct * std::cos(p)));
    CHECK(real_sh(spec, 5, t, p) == doctest::Approx(0.5 * std::sqrt(15 / pi) * st * ct * std::sin(p)));
  }
  CHECK_THROWS_AS(real_sh(spec, 16, 0.1, 0.1), InvalidArgument);
  CHECK_THROWS_AS(real_sh(spec, 0, 0.1, 0.1), InvalidArgument);
}

TEST_CASE("orthonormality under Gauss x trapezoid quadrature") {
  // 64 Gauss-Legendre nodes in cos(theta) x 128 uniform nodes in phi.
  const auto [nodes, weights] = oracle::gauss_legendre(64);
  for (int order : {4, 8}) {
    const BasisSpec spec(order);
    const int r = spec.size();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(r, r);
    Eigen::RowVectorXd row(r);
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      const double t = std::acos(nodes[a]);
      for (int b = 0; b < 128; ++b) {
        const double p = 2 * pi * b / 128.0;
        evaluate_basis(spec, {t, p}, row);
        gram += weights[a] * (2 * pi / 128.0) * row.transpose() * row;
      }
    }
    CHECK((gram - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("antipodal symmetry of every basis function") {
  const BasisSpec spec(8);
  Rng rng(17);
  Eigen::RowVectorXd a(spec.size()), b(spec.size());
  for (int i = 0; i < 200; ++i) {
    const double t = pi * uniform01(rng);
    const double p = 2 * pi * uniform01(rng);
    evaluate_basis(spec, {t, p}, a);
    evaluate_basis(spec, {pi - t, p + pi}, b);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("basis matrix shape, constant column and conditioning") {
  const Protocol p = electrostatic_protocol(90, 10000, 1);
  const BasisMatrix b(p, BasisSpec(4));
  CHECK(b.rows() == 90);
  CHECK(b.cols() == 15);
  for (Eigen::Index i = 0; i < b.rows(); ++i) CHECK(std::abs(b.values()(i, 0) - 0.5 / std::sqrt(pi)) < 1e-15);
  CHECK(b.values().allFinite());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b.values());
  const auto& sv = svd.singularValues();
  CHECK(sv(0) / sv(sv.size() - 1) < 10.0);
}

TEST_CASE("analytic derivatives match central finite differences") {
  const BasisSpec spec(8);
  const int r = spec.size();
  Rng rng(99);
  const double h = 1e-6;
  Eigen::RowVectorXd v(r), dt, dp, plus(r), minus(r);
  int checked = 0;
  while (checked < 100) {
    const double t = pi * uniform01(rng);
    if (std::sin(t) <= 0.1) continue;
    const double p = 2 * pi * uniform01(rng);
    evaluate_basis(spec, {t, p}, v, &dt, &dp);
    CHECK(dt(0) == 0.0);
    CHECK(dp(0) == 0.0);
    for (int j = 1; j <= r; ++j)
      if (index_to_lm(j).m == 0) CHECK(dp(j - 1) == 0.0);
    evaluate_basis(spec, {t + h, p}, plus);
    evaluate_basis(spec, {t - h, p}, minus);
    const Eigen::RowVectorXd fd_t = (plus - minus) / (2 * h);
    evaluate_basis(spec, {t, p + h}, plus);
    evaluate_basis(spec, {t, p - h}, minus);
    const Eigen::RowVectorXd fd_p = (plus - minus) / (2 * h);
    for (int j = 0; j < r; ++j) {
      CHECK(oracle::relative_error(dt(j), fd_t(j), 1e-4) < 1e-5);
      CHECK(oracle::relative_error(dp(j), fd_p(j), 1e-4) < 1e-5);
    }
    ++checked;
  }
}

TEST_CASE("derivatives stay finite at the poles and off the canonical range") {
  const BasisSpec spec(4);
  Eigen::RowVectorXd v(spec.size()), dt, dp;
  for (double t : {0.0, pi, 1e-12, pi - 1e-12, -0.4, 3.9, 7.0}) {
    evaluate_basis(spec, {t, 0.3}, v, &dt, &dp);
    CHECK(dt.allFinite());
    CHECK(dp.allFinite());
  }
  // unconstrained angles: the value at (t, p) equals the value at its canonical form
  Eigen::RowVectorXd w(spec.size());
  for (double t : {-0.4, 3.9, 7.0, -5.0}) {
    evaluate_basis(spec, {t, 1.1}, v);
    const Direction c = normalize_direction(t, 1.1);
    evaluate_basis(spec, c, w);
    CHECK((v - w).cwiseAbs().maxCoeff() < 1e-12);
  }
  // and the theta-derivative stays consistent there with finite differences
  const double h = 1e-6;
  Eigen::RowVectorXd plus(spec.size()), minus(spec.size());
  for (double t : {-0.4, 3.9}) {
    evaluate_basis(spec, {t, 1.1}, v, &dt, &dp);
    evaluate_basis(spec, {t + h, 1.1}, plus);
    evaluate_basis(spec, {t - h, 1.1}, minus);
    for (int j = 0; j < spec.size(); ++j)
      CHECK(oracle::relative_error(dt(j), (plus(j) - minus(j)) / (2 * h), 1e-4) < 1e-5);
  }
}
