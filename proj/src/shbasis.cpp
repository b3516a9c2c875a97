#include "qsamp/shbasis.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "qsamp/error.h"

namespace qsamp {

namespace {

constexpr double kPoleClamp = 1e-8;

// (2l+1)/(4 pi) * (l-m)!/(l+m)!, square-rooted. Log-space from l = 6 on.
double normalization(int l, int m) {
  double ratio = 1.0;
  if (l < 6) {
    for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
  } else {
    ratio = std::exp(std::lgamma(l - m + 1.0) - std::lgamma(l + m + 1.0));
  }
  return std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * ratio);
}

// Fills p[l][m] = P_l^m(x) for 0 <= m <= l <= order, given s = sqrt(1 - x^2).
void legendre_table(int order, double x, double s, std::vector<double>& p) {
  const int stride = order + 1;
  p.assign(static_cast<std::size_t>(stride * stride), 0.0);
  auto at = [&](int l, int m) -> double& { return p[static_cast<std::size_t>(l * stride + m)]; };
  double pmm = 1.0;
  for (int m = 0; m <= order; ++m) {
    if (m > 0) pmm *= (2.0 * m - 1.0) * s;
    at(m, m) = pmm;
    if (m + 1 <= order) at(m + 1, m) = x * (2.0 * m + 1.0) * pmm;
    for (int l = m + 2; l <= order; ++l)
      at(l, m) = (x * (2.0 * l - 1.0) * at(l - 1, m) - (l + m - 1.0) * at(l - 2, m)) / (l - m);
  }
}

}  // namespace

BasisSpec::BasisSpec(int order) : order_(order) {
  if (order < 0 || order % 2 != 0) throw InvalidArgument("SH order must be even and nonnegative");
}

DegreeOrder index_to_lm(int j) {
  if (j < 1) throw InvalidArgument("SH index must be >= 1");
  int l = 0;
  while (lm_to_index(l, l) < j) l += 2;
  return {l, j - (l * l + l + 2) / 2};
}

int lm_to_index(int l, int m) {
  if (l < 0 || l % 2 != 0 || m < -l || m > l) throw InvalidArgument("invalid SH degree/order");
  return (l * l + l + 2) / 2 + m;
}

double assoc_legendre(int l, int m, double x) {
  if (m < 0 || m > l) throw InvalidArgument("assoc_legendre: need 0 <= m <= l");
  if (!(std::abs(x) <= 1.0)) throw InvalidArgument("assoc_legendre: |x| must be <= 1");
  std::vector<double> p;
  legendre_table(l, x, std::sqrt((1.0 - x) * (1.0 + x)), p);
  return p[static_cast<std::size_t>(l * (l + 1) + m)];
}

double real_sh(const BasisSpec& spec, int j, double theta, double phi) {
  if (j < 1 || j > spec.size()) throw InvalidArgument("SH index out of range");
  Eigen::RowVectorXd row(spec.size());
  evaluate_basis(spec, {theta, phi}, row);
  return row[j - 1];
}

void evaluate_basis(const BasisSpec& spec, const Direction& d, Eigen::Ref<Eigen::RowVectorXd> values,
                    Eigen::RowVectorXd* d_theta, Eigen::RowVectorXd* d_phi) {
  const int order = spec.order();
  const int stride = order + 1;
  // Signed sin(theta): P_l^m(cos t) carries sin^m t, which keeps Y smooth in
  // theta for unconstrained angles outside [0, pi].
  const double x = std::cos(d.theta);
  const double s = std::sin(d.theta);

  thread_local std::vector<double> p;
  thread_local std::vector<double> pc;
  legendre_table(order, x, s, p);
  auto P = [&](int l, int m) { return p[static_cast<std::size_t>(l * stride + m)]; };

  double xd = x;
  double sd = s;
  const std::vector<double>* pd = &p;
  if (d_theta && std::abs(s) < kPoleClamp) {
    const double pole = std::round(d.theta / std::numbers::pi) * std::numbers::pi;
    const double tc = d.theta >= pole ? pole + kPoleClamp : pole - kPoleClamp;
    xd = std::cos(tc);
    sd = std::sin(tc);
    legendre_table(order, xd, sd, pc);
    pd = &pc;
  }
  auto PD = [&](int l, int m) { return l < m ? 0.0 : (*pd)[static_cast<std::size_t>(l * stride + m)]; };

  if (d_theta) d_theta->resize(spec.size());
  if (d_phi) d_phi->resize(spec.size());

  for (int l = 0; l <= order; l += 2) {
    const int center = lm_to_index(l, 0) - 1;
    const double k0 = normalization(l, 0);
    values[center] = k0 * P(l, 0);
    // d/dt P_l^0(cos t) = -P_l^1(cos t), exact at the poles
    if (d_theta) (*d_theta)[center] = l > 0 ? -k0 * P(l, 1) : 0.0;
    if (d_phi) (*d_phi)[center] = 0.0;

    for (int m = 1; m <= l; ++m) {
      const double k = std::numbers::sqrt2 * normalization(l, m);
      const double plm = k * P(l, m);
      const double c = std::cos(m * d.phi);
      const double sn = std::sin(m * d.phi);
      values[center - m] = plm * c;
      values[center + m] = plm * sn;
      if (d_theta) {
        const double dp = k * (l * xd * PD(l, m) - (l + m) * PD(l - 1, m)) / sd;
        (*d_theta)[center - m] = dp * c;
        (*d_theta)[center + m] = dp * sn;
      }
      if (d_phi) {
        (*d_phi)[center - m] = -plm * m * sn;
        (*d_phi)[center + m] = plm * m * c;
      }
    }
  }
}

Eigen::MatrixXd basis_matrix(std::span<const Direction> dirs, const BasisSpec& spec) {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(dirs.size()), spec.size());
  Eigen::RowVectorXd row(spec.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    evaluate_basis(spec, dirs[i], row);
    b.row(static_cast<Eigen::Index>(i)) = row;
  }
  return b;
}

BasisGradient basis_matrix_grad(std::span<const Direction> dirs, const BasisSpec& spec) {
  const auto n = static_cast<Eigen::Index>(dirs.size());
  BasisGradient g{Eigen::MatrixXd(n, spec.size()), Eigen::MatrixXd(n, spec.size())};
  Eigen::RowVectorXd row(spec.size()), dt, dp;
  for (Eigen::Index i = 0; i < n; ++i) {
    evaluate_basis(spec, dirs[static_cast<std::size_t>(i)], row, &dt, &dp);
    g.d_theta.row(i) = dt;
    g.d_phi.row(i) = dp;
  }
  return g;
}

}  // namespace qsamp
