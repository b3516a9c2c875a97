#include "qsamp/metrics.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsamp/error.h"

namespace qsamp {

double psnr(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x, std::optional<double> peak, double cap) {
  if (xhat.rows() != x.rows() || xhat.cols() != x.cols()) throw InvalidArgument("psnr: shape mismatch");
  if (x.size() == 0) throw InvalidArgument("psnr: empty image");
  const double p = peak.value_or(x.maxCoeff());
  if (!(p > 0.0)) throw InvalidArgument("psnr: peak must be > 0");
  const double mse = (xhat - x).squaredNorm() / static_cast<double>(x.size());
  if (mse == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(p * p / mse));
}

namespace {

// Valid-mode separable filter of one width x height plane.
void filter_valid(const double* in, int width, int height, const std::vector<double>& w, std::vector<double>& tmp,
                  std::vector<double>& out) {
  const int k = static_cast<int>(w.size());
  const int ow = width - k + 1;
  const int oh = height - k + 1;
  tmp.assign(static_cast<std::size_t>(ow * height), 0.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += w[static_cast<std::size_t>(i)] * in[y * width + x + i];
      tmp[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  out.assign(static_cast<std::size_t>(ow * oh), 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += w[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>((y + i) * ow + x)];
      out[static_cast<std::size_t>(y * ow + x)] = acc;
    }
}

}  // namespace

double ssim(const Eigen::MatrixXd& xhat, const Eigen::MatrixXd& x, int width, int height, const SsimOptions& o) {
  if (xhat.rows() != x.rows() || xhat.cols() != x.cols()) throw InvalidArgument("ssim: shape mismatch");
  if (x.cols() != static_cast<Eigen::Index>(width) * height) throw InvalidArgument("ssim: column count != width*height");
  if (o.window < 1 || o.window % 2 == 0) throw InvalidArgument("ssim: window must be odd and positive");
  if (width < o.window || height < o.window) throw InvalidArgument("ssim: image smaller than window");
  if (x.rows() == 0) throw InvalidArgument("ssim: no channels");

  const double peak = o.peak.value_or(std::max(x.maxCoeff(), xhat.maxCoeff()));
  if (!(peak > 0.0)) throw InvalidArgument("ssim: peak must be > 0");
  const double c1 = (o.k1 * peak) * (o.k1 * peak);
  const double c2 = (o.k2 * peak) * (o.k2 * peak);

  std::vector<double> w(static_cast<std::size_t>(o.window));
  const int half = o.window / 2;
  double wsum = 0.0;
  for (int i = 0; i < o.window; ++i) {
    const double d = i - half;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
    wsum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= wsum;

  const auto nvox = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> a(nvox), b(nvox), aa(nvox), bb(nvox), ab(nvox), tmp;
  std::vector<double> ma, mb, maa, mbb, mab;
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    for (std::size_t v = 0; v < nvox; ++v) {
      a[v] = xhat(c, static_cast<Eigen::Index>(v));
      b[v] = x(c, static_cast<Eigen::Index>(v));
      aa[v] = a[v] * a[v];
      bb[v] = b[v] * b[v];
      ab[v] = a[v] * b[v];
    }
    filter_valid(a.data(), width, height, w, tmp, ma);
    filter_valid(b.data(), width, height, w, tmp, mb);
    filter_valid(aa.data(), width, height, w, tmp, maa);
    filter_valid(bb.data(), width, height, w, tmp, mbb);
    filter_valid(ab.data(), width, height, w, tmp, mab);
    double channel = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double mu_a = ma[i];
      const double mu_b = mb[i];
      const double var_a = maa[i] - mu_a * mu_a;
      const double var_b = mbb[i] - mu_b * mu_b;
      const double cov = mab[i] - mu_a * mu_b;
      channel += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
    total += channel;
    count += ma.size();
  }
  return total / static_cast<double>(count);
}

}  // namespace qsamp
