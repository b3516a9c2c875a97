// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "oracles.h"
#include "qsamp/cli.h"
#include "qsamp/config.h"
#include "qsamp/io.h"
#include "qsamp/metrics.h"
#include "qsamp/mlp.h"
#include "qsamp/phantom.h"
#include "qsamp/qspace.h"
#include "qsamp/recon.h"
#include "qsamp/rng.h"
#include "qsamp/train.h"

using namespace qsamp;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string str(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::shared_ptr<const Protocol> full_protocol() {
  static const auto p = std::make_shared<const Protocol>(electrostatic_protocol(90, 10000, 1));
  return p;
}

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

void criterion_sh_roundtrip() {
  const auto full = full_protocol();
  const auto t0 = Clock::now();
  const BasisMatrix b(*full, BasisSpec(4));
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd c = gaussian(rng, 15, 1);
    const SignalVector s{b.values() * c, full};
    const SignalVector back = resample(fit_sh(s, b), full);
    worst = std::max(worst, (back.values - s.values).cwiseAbs().maxCoeff());
  }
  const double t = seconds_since(t0);
  report(1, "SH roundtrip exactness", worst < 1e-10 && t < 5.0,
         str("max abs error %.3g over 1000 trials (< 1e-10), %.2f s (< 5 s)", worst, t));
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  Rng rng(202);
  const double h = 1e-6;

  // resample_grad: 100 random (coefficients, direction) configurations
  double worst_sh = 0.0;
  for (int cfg = 0; cfg < 100; ++cfg) {
    const ShCoefficients c{gaussian(rng, 15, 1), BasisSpec(4)};
    double t = 0.0;
    do t = pi * uniform01(rng);
    while (std::sin(t) <= 0.1);
    const double p = 2 * pi * uniform01(rng);
    const Direction d[] = {{t, p}};
    const auto g = resample_grad(c, d);
    const auto at = [&](double tt, double pp) {
      const Direction q[] = {{tt, pp}};
      return resample(c, q)(0);
    };
    const double fd_t = (at(t + h, p) - at(t - h, p)) / (2 * h);
    const double fd_p = (at(t, p + h) - at(t, p - h)) / (2 * h);
    worst_sh = std::max({worst_sh, oracle::relative_error(g.d_theta(0), fd_t, 1e-4),
                         oracle::relative_error(g.d_phi(0), fd_p, 1e-4)});
  }

  // mlp backward: 100 random tiny networks, every parameter and input
  double worst_mlp = 0.0;
  int nets = 0;
  while (nets < 100) {
    const int widths[] = {3, 4, 4, 5};
    Mlp mlp = Mlp::glorot(widths, rng());
    for (auto& l : mlp.layers()) l.bias = 0.1 * gaussian(rng, l.bias.size(), 1);
    const Eigen::MatrixXd x = gaussian(rng, 3, 2);
    const Eigen::MatrixXd up = gaussian(rng, 5, 2);
    Mlp::Tape tape;
    mlp.forward(x, tape);
    bool kink = false;
    for (std::size_t k = 0; k + 1 < mlp.layers().size(); ++k) {
      const auto& l = mlp.layers()[k];
      kink |= ((l.weight * tape.activations[k]).colwise() + l.bias).cwiseAbs().minCoeff() < 1e-3;
    }
    if (kink) continue;
    ++nets;
    const auto probe = [&](const Mlp& m, const Eigen::MatrixXd& in) { return (m.forward(in).array() * up.array()).sum(); };
    const MlpGradients g = mlp.backward(tape, up);
    for (std::size_t k = 0; k < mlp.layers().size(); ++k) {
      auto& w = mlp.layers()[k].weight;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double saved = w.data()[i];
        w.data()[i] = saved + h;
        const double fp = probe(mlp, x);
        w.data()[i] = saved - h;
        const double fm = probe(mlp, x);
        w.data()[i] = saved;
        worst_mlp = std::max(worst_mlp, oracle::relative_error(g.layers[k].weight.data()[i], (fp - fm) / (2 * h), 1e-4));
      }
      auto& b = mlp.layers()[k].bias;
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        const double saved = b(i);
        b(i) = saved + h;
        const double fp = probe(mlp, x);
        b(i) = saved - h;
        const double fm = probe(mlp, x);
        b(i) = saved;
        worst_mlp = std::max(worst_mlp, oracle::relative_error(g.layers[k].bias(i), (fp - fm) / (2 * h), 1e-4));
      }
    }
    Eigen::MatrixXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      xp.data()[i] = x.data()[i] + h;
      const double fp = probe(mlp, xp);
      xp.data()[i] = x.data()[i] - h;
      const double fm = probe(mlp, xp);
      xp.data()[i] = x.data()[i];
      worst_mlp = std::max(worst_mlp, oracle::relative_error(g.input.data()[i], (fp - fm) / (2 * h), 1e-4));
    }
  }

  // end-to-end: frozen reconstructor, band-limited phantom, gradient w.r.t. the angles
  DatasetSpec spec;
  spec.train = 2;
  spec.val = spec.test = 0;
  spec.width = spec.height = 16;
  spec.bandlimit_order = 4;
  const Dataset ds = make_dataset(spec, full_protocol());
  const auto images = ds.images(Split::train, 1000.0);
  double worst_e2e = 0.0;
  for (int cfg = 0; cfg < 10; ++cfg) {
    const int widths[] = {6, 32, 32, 90};
    const Mlp mlp = Mlp::glorot(widths, 300 + static_cast<std::uint64_t>(cfg));
    std::vector<Direction> angles;
    for (int i = 0; i < 6; ++i) {
      double t = 0.0;
      do t = pi * uniform01(rng);
      while (std::sin(t) <= 0.1);
      angles.push_back({t, 2 * pi * uniform01(rng)});
    }
    const LossConfig lc{2e-7};
    const auto g = joint_gradient(mlp, angles, images, full_protocol(), BasisSpec(4), lc);
    const auto loss_at = [&](const std::vector<Direction>& a) {
      return joint_gradient(mlp, a, images, full_protocol(), BasisSpec(4), lc).loss;
    };
    for (std::size_t i = 0; i < angles.size(); ++i) {
      auto plus = angles, minus = angles;
      plus[i].theta += h;
      minus[i].theta -= h;
      const double fd_t = (loss_at(plus) - loss_at(minus)) / (2 * h);
      plus = minus = angles;
      plus[i].phi += h;
      minus[i].phi -= h;
      const double fd_p = (loss_at(plus) - loss_at(minus)) / (2 * h);
      const auto k = static_cast<Eigen::Index>(i);
      worst_e2e = std::max({worst_e2e, oracle::relative_error(g.d_theta(k), fd_t, 1e-4),
                            oracle::relative_error(g.d_phi(k), fd_p, 1e-4)});
    }
  }
  const double t = seconds_since(t0);
  report(2, "gradient correctness", worst_sh < 1e-5 && worst_mlp < 1e-5 && worst_e2e < 1e-3 && t < 10.0,
         str("resample_grad max rel %.2g, mlp_backward max rel %.2g (< 1e-5); end-to-end angles max rel %.2g (< 1e-3); "
             "%.2f s (< 10 s)",
             worst_sh, worst_mlp, worst_e2e, t));
}

void criterion_antipodal() {
  const BasisSpec spec(8);
  Rng rng(303);
  Eigen::RowVectorXd a(spec.size()), b(spec.size());
  double worst_basis = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double t = pi * uniform01(rng);
    const double p = 2 * pi * uniform01(rng);
    evaluate_basis(spec, {t, p}, a);
    evaluate_basis(spec, {pi - t, p + pi}, b);
    worst_basis = std::max(worst_basis, (a - b).cwiseAbs().maxCoeff());
  }
  const auto full = full_protocol();
  std::vector<Direction> flipped;
  for (const auto& d : full->directions()) flipped.push_back({pi - d.theta, d.phi + pi});
  const auto antipodal = std::make_shared<const Protocol>(flipped);
  double worst_phantom = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (double bv : {1000.0, 2000.0, 3000.0}) {
      const auto x = make_phantom(32, 32, full, bv, seed);
      const auto y = make_phantom(32, 32, antipodal, bv, seed);
      worst_phantom = std::max(worst_phantom, (x.signals - y.signals).cwiseAbs().maxCoeff());
    }
  report(3, "antipodal symmetry", worst_basis < 1e-12 && worst_phantom < 1e-12,
         str("basis (L = 8, 2000 directions) max diff %.2g, noiseless phantoms (15 images) max diff %.2g (< 1e-12)",
             worst_basis, worst_phantom));
}

struct CellKey {
  std::string method;
  std::size_t n;
  double b;
  auto operator<=>(const CellKey&) const = default;
};

void criteria_benchmark() {
  // Desk-scale synthetic benchmark; hyper-parameters come from the checked-in preset.
  const BenchConfig preset = load_bench_config(fs::path(QSAMP_SOURCE_DIR) / "configs" / "desk_bench.ini");
  DatasetSpec spec;
  spec.train = 24;
  spec.val = 8;
  spec.test = 31;
  spec.bvalues = {1000.0, 2000.0, 3000.0};
  spec.sigma = 0.02;
  spec.seed = 1;
  const auto t0 = Clock::now();
  const Dataset ds = make_dataset(spec, full_protocol());
  BenchConfig cfg = preset;
  cfg.methods = {SamplingMode::learned, SamplingMode::random_frozen, SamplingMode::uniform_frozen};
  cfg.ns = {3, 6, 9};
  cfg.seeds = {1, 2, 3};
  std::ostringstream log;
  const auto rows = run_bench(cfg, ds, &log);
  const double t = seconds_since(t0);

  const auto summary = aggregate_seeds(rows);
  std::printf("%s", format_table(summary).c_str());
  std::map<CellKey, const MetricsSummary*> cell;
  for (const auto& s : summary) cell[{s.method, s.n, s.bvalue}] = &s;

  // 4: learned >= random-frozen at b = 1000, every n, both metrics
  bool ok4 = true;
  std::string d4;
  for (std::size_t n : cfg.ns) {
    const auto* l = cell.at({"learned", n, 1000.0});
    const auto* r = cell.at({"random-frozen", n, 1000.0});
    ok4 &= l->psnr_mean >= r->psnr_mean && l->ssim_mean >= r->ssim_mean;
    d4 += str("n=%zu PSNR %.2f vs %.2f, SSIM %.4f vs %.4f; ", n, l->psnr_mean, r->psnr_mean, l->ssim_mean, r->ssim_mean);
  }
  report(4, "learned >= random-frozen (b = 1000, 3 seeds)", ok4 && t < 1800.0,
         d4 + str("bench runtime %.0f s (< 1800 s)", t));

  // 5: the SSIM ordering survives at b = 2000 and 3000
  bool ok5 = true;
  std::string d5;
  for (double b : {2000.0, 3000.0})
    for (std::size_t n : cfg.ns) {
      const auto* l = cell.at({"learned", n, b});
      const auto* r = cell.at({"random-frozen", n, b});
      ok5 &= l->ssim_mean >= r->ssim_mean;
      d5 += str("b=%g n=%zu SSIM %.4f vs %.4f; ", b, n, l->ssim_mean, r->ssim_mean);
    }
  d5.resize(d5.size() - 2);
  report(5, "out-of-distribution SSIM ordering", ok5, d5);

  // 6: learned PSNR increases with n. The seed-mean chain must be strictly
  // increasing; over the 3 seeds x 3 n cells at most one adjacent pair may invert.
  std::map<std::pair<std::uint64_t, std::size_t>, double> per_seed;
  for (const auto& r : rows)
    if (r.method == "learned" && r.bvalue == 1000.0) per_seed[{r.seed, r.n}] = r.metrics.psnr_mean;
  int inversions = 0;
  for (std::uint64_t s : cfg.seeds)
    for (std::size_t k = 0; k + 1 < cfg.ns.size(); ++k)
      inversions += !(per_seed.at({s, cfg.ns[k + 1]}) > per_seed.at({s, cfg.ns[k]}));
  const double m3 = cell.at({"learned", 3, 1000.0})->psnr_mean;
  const double m6 = cell.at({"learned", 6, 1000.0})->psnr_mean;
  const double m9 = cell.at({"learned", 9, 1000.0})->psnr_mean;
  report(6, "learned PSNR monotone in n", m9 > m6 && m6 > m3 && inversions <= 1,
         str("mean PSNR n=3 %.2f < n=6 %.2f < n=9 %.2f; per-seed inversions %d (<= 1)", m3, m6, m9, inversions));
}

void criterion_metrics() {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(5, 64, 1.0);
  const double cap = psnr(x, x);
  const double offset = psnr(x.array() + 0.1, x, 1.0);
  Rng rng(707);
  Eigen::MatrixXd a(4, 256);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = uniform01(rng);
  const Eigen::MatrixXd b = a + 0.2 * gaussian(rng, 4, 256);
  const double self = ssim(a, a, 16, 16);
  const double sym = std::abs(ssim(a, b, 16, 16) - ssim(b, a, 16, 16));
  report(7, "metric sanity",
         cap == 100.0 && std::abs(offset - 20.0) < 1e-12 && std::abs(self - 1.0) < 1e-12 && sym < 1e-12,
         str("psnr(x, x) = %g; psnr offset 0.1 = %.15g dB; ssim(x, x) - 1 = %.2g; |ssim(a,b) - ssim(b,a)| = %.2g", cap,
             offset, self - 1.0, sym));
}

void criterion_electrostatic() {
  const auto t0 = Clock::now();
  double worst_dot = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto v = electrostatic_protocol(3, 10000, seed).unit_vectors();
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) worst_dot = std::max(worst_dot, std::abs(v[i].dot(v[j])));
  }
  const double sep = electrostatic_protocol(90, 10000, 1).min_separation() * 180.0 / pi;
  const double t = seconds_since(t0);
  report(8, "electrostatic protocol quality", worst_dot < 0.05 && sep > 10.0 && t < 30.0,
         str("n=3 max |dot| %.2g (< 0.05, seeds 1-3); n=90 min separation %.2f deg (> 10); %.2f s (< 30 s)", worst_dot,
             sep, t));
}

void criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / "qsamp_acceptance_determinism";
  fs::remove_all(dir);
  std::ostringstream out, err;
  bool ok = run_cli({"dataset", "--train", "6", "--val", "2", "--test", "2", "--size", "16", "--out",
                     (dir / "ds").string()},
                    out, err) == 0;
  for (const char* run : {"a", "b"}) {
    write_file_atomic(dir / (std::string(run) + ".ini"),
                      "[train]\nn = 3\nepochs = 5\nhidden = 32\nseed = 4\n[data]\ndataset = ds\n[output]\ndir = run_" +
                          std::string(run) + "\n");
    ok &= run_cli({"train", "--config", (dir / (std::string(run) + ".ini")).string()}, out, err) == 0;
  }
  std::string detail;
  for (const char* f : {"checkpoint_last.ckpt", "checkpoint_best.ckpt", "curve.csv", "learned.bvec"}) {
    const bool same = ok && read_file(dir / "run_a" / f) == read_file(dir / "run_b" / f);
    ok &= same;
    detail += std::string(f) + (same ? " identical; " : " DIFFERS; ");
  }
  detail.resize(detail.size() - 2);
  report(9, "training determinism", ok, detail);
  fs::remove_all(dir);
}

void criterion_tv() {
  const double constant = tv(Eigen::MatrixXd::Constant(3, 25, 0.4), 5, 5);
  Eigen::MatrixXd img(1, 4);
  img << 0, 1, 0, 1;
  const double hand = tv(img, 2, 2);
  Rng rng(1010);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd x = gaussian(rng, 3, 48);
    const double alpha = 10.0 * standard_normal(rng);
    worst = std::max(worst, std::abs(tv(alpha * x, 8, 6) - std::abs(alpha) * tv(x, 8, 6)) / std::max(1.0, tv(alpha * x, 8, 6)));
  }
  report(10, "TV hand cases", constant == 0.0 && hand == 2.0 && worst < 1e-12,
         str("constant -> %g; [[0,1],[0,1]] -> %g; homogeneity max rel diff %.2g (< 1e-12)", constant, hand, worst));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::printf("acceptance gate, build %s\n", std::string(version_string()).c_str());
  criterion_sh_roundtrip();
  criterion_gradients();
  criterion_antipodal();
  criteria_benchmark();
  criterion_metrics();
  criterion_electrostatic();
  criterion_determinism();
  criterion_tv();
  std::printf("%d criteria failed, %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
