#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "oracles.h"
#include "qsamp/error.h"
#include "qsamp/qspace.h"
#include "qsamp/rng.h"

using namespace qsamp;
using std::numbers::pi;

namespace {

std::shared_ptr<const Protocol> full_protocol() {
  static const auto p = std::make_shared<const Protocol>(electrostatic_protocol(90, 10000, 1));
  return p;
}

Eigen::VectorXd random_coeffs(Rng& rng, int r) {
  Eigen::VectorXd c(r);
  for (int j = 0; j < r; ++j) c(j) = standard_normal(rng);
  return c;
}

}  // namespace

TEST_CASE("fit_sh recovers band-limited coefficients exactly") {
  const auto full = full_protocol();
  const BasisMatrix b(*full, BasisSpec(4));
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd truth = random_coeffs(rng, 15);
    const SignalVector s{b.values() * truth, full};
    const ShCoefficients c = fit_sh(s, b);
    CHECK((c.values - truth).cwiseAbs().maxCoeff() < 1e-10);
    // resampling on the fitting protocol reproduces the signal
    CHECK((resample(c, full).values - s.values).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fit_sh of constant and zero signals") {
  const auto full = full_protocol();
  const BasisMatrix b(*full, BasisSpec(4));
  const double k = 0.7;
  const ShCoefficients c = fit_sh({Eigen::VectorXd::Constant(90, k), full}, b);
  CHECK(std::abs(c.values(0) - 2 * std::sqrt(pi) * k) < 1e-10);
  CHECK(c.values.tail(14).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit_sh({Eigen::VectorXd::Zero(90), full}, b).values.cwiseAbs().maxCoeff() == 0.0);

  const auto other = std::make_shared<const Protocol>(random_protocol(90, 4));
  CHECK_THROWS_AS(fit_sh({Eigen::VectorXd::Zero(90), other}, b), InvalidArgument);
}

TEST_CASE("resample examples") {
  ShCoefficients c{Eigen::VectorXd::Zero(15), BasisSpec(4)};
  c.values(0) = 2.0;
  const auto q = std::make_shared<const Protocol>(random_protocol(7, 2));
  const SignalVector s = resample(c, q);
  for (Eigen::Index i = 0; i < s.values.size(); ++i) CHECK(std::abs(s.values(i) - 0.2820947918 * 2.0) < 1e-9);

  Rng rng(8);
  c.values = random_coeffs(rng, 15);
  for (int i = 0; i < 100; ++i) {
    const double t = pi * uniform01(rng);
    const double p = 2 * pi * uniform01(rng);
    const Direction a[] = {{t, p}};
    const Direction b[] = {{pi - t, p + pi}};
    CHECK(std::abs(resample(c, a)(0) - resample(c, b)(0)) < 1e-12);
  }
}

TEST_CASE("resample_grad") {
  Rng rng(21);
  const auto q = random_protocol(40, 5);
  std::vector<Direction> dirs;
  for (const auto& d : q.directions())
    if (std::sin(d.theta) > 0.1) dirs.push_back(d);

  ShCoefficients e1{Eigen::VectorXd::Zero(15), BasisSpec(4)};
  e1.values(0) = 1.0;
  const auto g0 = resample_grad(e1, dirs);
  CHECK(g0.d_theta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g0.d_phi.cwiseAbs().maxCoeff() == 0.0);

  // only m = 0 terms: no phi dependence
  ShCoefficients zonal{Eigen::VectorXd::Zero(15), BasisSpec(4)};
  for (int l : {0, 2, 4}) zonal.values(lm_to_index(l, 0) - 1) = standard_normal(rng);
  CHECK(resample_grad(zonal, dirs).d_phi.cwiseAbs().maxCoeff() == 0.0);

  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const ShCoefficients c{random_coeffs(rng, 15), BasisSpec(4)};
    const auto g = resample_grad(c, dirs);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const auto f_t = [&](double t) {
        const Direction d[] = {{t, dirs[i].phi}};
        return resample(c, d)(0);
      };
      const auto f_p = [&](double p) {
        const Direction d[] = {{dirs[i].theta, p}};
        return resample(c, d)(0);
      };
      const auto k = static_cast<Eigen::Index>(i);
      CHECK(oracle::relative_error(g.d_theta(k), oracle::central_difference(f_t, dirs[i].theta, h), 1e-4) < 1e-5);
      CHECK(oracle::relative_error(g.d_phi(k), oracle::central_difference(f_p, dirs[i].phi, h), 1e-4) < 1e-5);
    }
  }
}

TEST_CASE("subsample_batch is the linear map B_n pinv(B_N)") {
  const auto full = full_protocol();
  const FullProtocolFit fit(full, BasisSpec(4));
  const auto q = std::make_shared<const Protocol>(electrostatic_protocol(6, 2000, 3));
  Rng rng(4);

  std::vector<SignalVector> batch;
  for (int v = 0; v < 8; ++v) {
    Eigen::VectorXd s(90);
    for (int i = 0; i < 90; ++i) s(i) = uniform01(rng);
    batch.push_back({s, full});
  }
  const auto out = subsample_batch(batch, fit, q);
  const Eigen::MatrixXd map = fit.subsample_matrix(q->directions());
  CHECK(map.rows() == 6);
  CHECK(map.cols() == 90);
  for (std::size_t v = 0; v < batch.size(); ++v) {
    CHECK(out[v].values.size() == 6);
    CHECK((out[v].values - map * batch[v].values).cwiseAbs().maxCoeff() < 1e-12);
  }

  // linearity: additivity and homogeneity
  std::vector<SignalVector> scaled, summed;
  for (std::size_t v = 0; v < batch.size(); ++v) {
    scaled.push_back({2.5 * batch[v].values, full});
    summed.push_back({batch[v].values + batch[(v + 1) % batch.size()].values, full});
  }
  const auto out_scaled = subsample_batch(scaled, fit, q);
  const auto out_summed = subsample_batch(summed, fit, q);
  for (std::size_t v = 0; v < batch.size(); ++v) {
    CHECK((out_scaled[v].values - 2.5 * out[v].values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out_summed[v].values - out[v].values - out[(v + 1) % batch.size()].values).cwiseAbs().maxCoeff() < 1e-12);
  }

  std::vector<SignalVector> zeros(3, SignalVector{Eigen::VectorXd::Zero(90), full});
  for (const auto& z : subsample_batch(zeros, fit, q)) CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(subsample_batch({}, fit, q).empty());
}

TEST_CASE("subsampling onto the full protocol is the identity on band-limited data") {
  const auto full = full_protocol();
  const FullProtocolFit fit(full, BasisSpec(4));
  Rng rng(6);
  std::vector<SignalVector> batch;
  for (int v = 0; v < 10; ++v) batch.push_back({fit.basis().values() * random_coeffs(rng, 15), full});
  const auto out = subsample_batch(batch, fit, full);
  for (std::size_t v = 0; v < batch.size(); ++v) CHECK((out[v].values - batch[v].values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pinv with truncation and ridge") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 2, 0, 0;
  const Eigen::MatrixXd p = pinv(a);
  CHECK((a * p * a - a).cwiseAbs().maxCoeff() < 1e-14);
  // rank-deficient: the null direction is dropped instead of blowing up
  Eigen::MatrixXd rd(2, 2);
  rd << 1, 1, 1, 1;
  CHECK((pinv(rd) - 0.25 * rd).cwiseAbs().maxCoeff() < 1e-14);
  // ridge shrinks toward zero
  CHECK(pinv(a, 1e-10, 1.0)(0, 0) == doctest::Approx(0.5));
}
