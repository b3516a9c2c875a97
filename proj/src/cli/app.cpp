#include "qsamp/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <ostream>

#include <CLI11.hpp>

#include "qsamp/checkpoint.h"
#include "qsamp/error.h"
#include "qsamp/io.h"

namespace qsamp {

namespace fs = std::filesystem;

std::string_view version_string() { return QSAMP_VERSION; }

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string format_run_manifest(const ExperimentConfig& cfg, const TrainedModel& model, double bvalue,
                                std::size_t best_epoch, double best_score) {
  std::string s = "qsamp-run 1\n";
  const auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  kv("version", std::string(version_string()));
  kv("method", cfg.label);
  kv("mode", std::string(to_string(cfg.train.mode)));
  kv("n", std::to_string(model.angles.size()));
  kv("full_directions", std::to_string(model.full_size));
  kv("af", fmt("%g", model.acceleration_factor()));
  kv("seed", std::to_string(cfg.train.seed));
  kv("epochs", std::to_string(cfg.train.epochs));
  kv("dataset", cfg.dataset.string());
  kv("bvalue", fmt("%g", bvalue));
  kv("init_protocol", cfg.init_protocol.string());
  kv("best_epoch", std::to_string(best_epoch));
  kv("best_loss", format_double(best_score));
  kv("final_train_loss", format_double(model.curve.back().train_loss));
  return s;
}

int cmd_train(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  const Dataset ds = read_dataset(cfg.dataset);
  const double b = cfg.bvalue.value_or(ds.training_bvalue());
  if (!cfg.init_protocol.empty()) {
    const Protocol init = read_protocol(cfg.init_protocol);
    cfg.train.init_angles.assign(init.directions().begin(), init.directions().end());
    cfg.train.validate();
  }
  const auto train = ds.images(Split::train, b);
  const auto val = ds.images(Split::val, b);
  ensure_dir(cfg.out_dir);

  std::size_t best_epoch = 0;
  double best_score = INFINITY;
  const auto on_epoch = [&](const TrainedModel& m, bool is_best) {
    const EpochRecord& r = m.curve.back();
    const std::string ckpt = serialize_checkpoint(m);
    write_file_atomic(cfg.out_dir / "checkpoint_last.ckpt", ckpt);
    if (is_best) {
      write_file_atomic(cfg.out_dir / "checkpoint_best.ckpt", ckpt);
      best_epoch = r.epoch;
      best_score = std::isnan(r.val_loss) ? r.train_loss : r.val_loss;
    }
    write_file_atomic(cfg.out_dir / "curve.csv", format_curve_csv(m));
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu/%zu train %.6g val %.6g%s\n", r.epoch, cfg.train.epochs,
                  r.train_loss, r.val_loss, is_best ? " *" : "");
    err << line;
  };

  TrainedModel model;
  try {
    model = train_joint(cfg.train, train, val, ds.protocol, on_epoch);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what();
    if (fs::exists(cfg.out_dir / "checkpoint_last.ckpt"))
      err << "; last good checkpoint kept in " << (cfg.out_dir / "checkpoint_last.ckpt").string();
    err << "\n";
    return kExitRuntime;
  }
  write_protocol(model.protocol(), cfg.out_dir / "learned.bvec");
  write_file_atomic(cfg.out_dir / "manifest.txt", format_run_manifest(cfg, model, b, best_epoch, best_score));
  out << "trained " << cfg.label << " n=" << model.angles.size() << " AF=" << fmt("%g", model.acceleration_factor())
      << " -> " << cfg.out_dir.string() << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string dataset;
  std::string out;
  std::string split = "test";
  std::string label;
  bool identity = false;
  double psnr_cap = kPsnrCap;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const TrainedModel model = read_checkpoint(a.checkpoint);
  const Dataset ds = read_dataset(a.dataset);
  Split split = Split::test;
  if (a.split == "train") split = Split::train;
  else if (a.split == "val") split = Split::val;
  else if (a.split != "test") throw InvalidArgument("unknown split '" + a.split + "'");

  MetricsConfig mc;
  mc.identity = a.identity;
  mc.psnr_cap = a.psnr_cap;
  const std::string label = a.label.empty() ? std::string(to_string(model.config.mode)) : a.label;
  std::vector<MetricsSummary> rows;
  for (double b : ds.spec.bvalues) {
    if (split != Split::test && b != ds.training_bvalue()) continue;
    const auto images = ds.images(split, b);
    for (auto& r : evaluate(model, images, mc, label)) rows.push_back(std::move(r));
  }
  const std::string table = format_table(rows);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_file_atomic(fs::path(a.out) / "metrics.csv", format_metrics_csv(rows));
    write_file_atomic(fs::path(a.out) / "table.txt", table);
  }
  out << table;
  return kExitOk;
}

int cmd_bench(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  const BenchConfig cfg = load_bench_config(config_path);
  const Dataset ds = read_dataset(cfg.dataset);
  ensure_dir(cfg.out_dir);
  const auto rows = run_bench(cfg, ds, &err);
  write_file_atomic(cfg.out_dir / "bench.csv", format_bench_csv(rows));
  const std::string table = format_table(aggregate_seeds(rows));
  write_file_atomic(cfg.out_dir / "bench_table.txt", table);
  out << table;
  return kExitOk;
}

void print_protocol(const Protocol& p, std::ostream& out) {
  constexpr double deg = 180.0 / std::numbers::pi;
  char line[160];
  out << "# " << p.size() << " directions\n";
  out << "# index theta_deg phi_deg x y z\n";
  const auto units = p.unit_vectors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu %.4f %.4f %.6f %.6f %.6f\n", i, p[i].theta * deg, p[i].phi * deg,
                  units[i].x(), units[i].y(), units[i].z());
    out << line;
  }
  const double sep = p.min_separation();
  if (std::isfinite(sep)) {
    std::snprintf(line, sizeof line, "min angular distance: %.4f deg\n", sep * deg);
    out << line;
  } else {
    out << "min angular distance: n/a\n";
  }
}

void emit_protocol(const Protocol& p, const std::string& path, std::ostream& out) {
  if (path.empty()) out << format_protocol(p);
  else write_protocol(p, path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint q-space sampling and reconstruction experiments", "qsamp"};
  app.set_version_flag("--version", std::string(version_string()));
  app.require_subcommand(1);

  auto* protocol = app.add_subcommand("protocol", "Generate or inspect direction files");
  protocol->require_subcommand(1);
  std::size_t pn = 0;
  std::uint64_t pseed = 0;
  std::size_t piters = 10000;
  std::string pout, pin;
  auto* make_random = protocol->add_subcommand("make-random", "i.i.d. uniform hemisphere directions");
  make_random->add_option("--n", pn, "number of directions")->required()->check(CLI::PositiveNumber);
  make_random->add_option("--seed", pseed, "random seed");
  make_random->add_option("--out", pout, "output bvec file (stdout when omitted)");
  auto* make_uniform = protocol->add_subcommand("make-uniform", "electrostatic repulsion directions");
  make_uniform->add_option("--n", pn, "number of directions")->required()->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  make_uniform->add_option("--seed", pseed, "random seed");
  make_uniform->add_option("--iterations", piters, "descent iterations")->capture_default_str();
  make_uniform->add_option("--out", pout, "output bvec file (stdout when omitted)");
  auto* show = protocol->add_subcommand("show", "print angles and the minimum pairwise angle");
  show->add_option("file", pin, "bvec file")->required();

  auto* dataset = app.add_subcommand("dataset", "Generate a phantom dataset");
  DatasetSpec dspec;
  int size = 32;
  std::size_t directions = 90;
  std::size_t diters = 10000;
  std::string dprotocol, dout;
  dataset->add_option("--train", dspec.train, "training phantoms")->capture_default_str();
  dataset->add_option("--val", dspec.val, "validation phantoms")->capture_default_str();
  dataset->add_option("--test", dspec.test, "test phantoms")->capture_default_str();
  dataset->add_option("--size", size, "phantom width and height")->capture_default_str();
  dataset->add_option("--bvalues", dspec.bvalues, "b-values, training value first")->delimiter(',')->capture_default_str();
  dataset->add_option("--sigma", dspec.sigma, "Rician noise sigma")->capture_default_str();
  dataset->add_option("--seed", dspec.seed, "master seed")->capture_default_str();
  dataset->add_option("--bandlimit", dspec.bandlimit_order, "SH order to band-limit noiseless signals (-1: off)");
  dataset->add_option("--protocol", dprotocol, "full protocol bvec (default: electrostatic)");
  dataset->add_option("--directions", directions, "size of the generated full protocol")->capture_default_str();
  dataset->add_option("--iterations", diters, "descent iterations for the generated protocol")->capture_default_str();
  dataset->add_option("--out", dout, "output directory")->required();

  auto* train = app.add_subcommand("train", "Train one model from a config file");
  std::string train_config;
  train->add_option("--config", train_config, "experiment config")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  EvaluateArgs eval;
  evaluate_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  evaluate_cmd->add_option("--dataset", eval.dataset, "dataset directory")->required();
  evaluate_cmd->add_option("--out", eval.out, "output directory for metrics.csv and table.txt");
  evaluate_cmd->add_option("--split", eval.split, "train, val or test")->capture_default_str();
  evaluate_cmd->add_option("--label", eval.label, "method label (default: sampling mode)");
  evaluate_cmd->add_option("--psnr-cap", eval.psnr_cap, "PSNR for identical images")->capture_default_str();
  evaluate_cmd->add_flag("--identity", eval.identity, "compare ground truth with itself");

  auto* bench = app.add_subcommand("bench", "Run the method x n x seed matrix");
  std::string bench_config;
  bench->add_option("--config", bench_config, "bench config")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*make_random) {
      emit_protocol(random_protocol(pn, pseed), pout, out);
    } else if (*make_uniform) {
      emit_protocol(electrostatic_protocol(pn, piters, pseed), pout, out);
    } else if (*show) {
      print_protocol(read_protocol(pin), out);
    } else if (*dataset) {
      dspec.width = dspec.height = size;
      const auto full = std::make_shared<const Protocol>(
          dprotocol.empty() ? electrostatic_protocol(directions, diters, dspec.seed) : read_protocol(dprotocol));
      const Dataset ds = make_dataset(dspec, full);
      write_dataset(ds, dout);
      out << "wrote " << ds.train.size() << " train / " << ds.val.size() << " val / " << ds.test.size()
          << " test phantoms to " << dout << "\n";
    } else if (*train) {
      return cmd_train(train_config, out, err);
    } else if (*evaluate_cmd) {
      return cmd_evaluate(eval, out);
    } else if (*bench) {
      return cmd_bench(bench_config, out, err);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg, const Dataset& dataset, std::ostream* log) {
  if (cfg.seeds.empty()) throw InvalidArgument("bench: at least one seed is required");
  const double b_train = dataset.training_bvalue();
  const auto train = dataset.images(Split::train, b_train);
  const auto val = dataset.images(Split::val, b_train);
  std::vector<std::pair<double, std::vector<PhantomImage>>> tests;
  for (double b : dataset.spec.bvalues) tests.emplace_back(b, dataset.images(Split::test, b));

  std::vector<BenchRow> rows;
  for (SamplingMode mode : cfg.methods)
    for (std::size_t n : cfg.ns)
      for (std::uint64_t seed : cfg.seeds) {
        TrainConfig tc = cfg.train;
        tc.mode = mode;
        tc.n = n;
        tc.seed = seed;
        tc.init_angles.clear();
        const std::string method(to_string(mode));
        const TrainedModel model = train_joint(tc, train, val, dataset.protocol);
        if (cfg.save_checkpoints) {
          const fs::path dir = cfg.out_dir / "cells";
          ensure_dir(dir);
          write_checkpoint(model, dir / (method + "-n" + std::to_string(n) + "-seed" + std::to_string(seed) + ".ckpt"));
        }
        for (const auto& [b, images] : tests)
          for (const auto& s : evaluate(model, images, MetricsConfig{}, method))
            rows.push_back({std::string(version_string()), method, n, seed, b, model.acceleration_factor(), s});
        if (log) {
          const auto& last = rows.back();
          *log << "bench " << method << " n=" << n << " seed=" << seed << " psnr " << fmt("%.3f", rows[rows.size() - tests.size()].metrics.psnr_mean)
               << " ssim " << fmt("%.4f", rows[rows.size() - tests.size()].metrics.ssim_mean) << " (b=" << fmt("%g", tests.front().first)
               << "), b=" << fmt("%g", last.bvalue) << " ssim " << fmt("%.4f", last.metrics.ssim_mean) << "\n";
        }
      }
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.method, a.n, a.seed, a.bvalue) < std::tie(b.method, b.n, b.seed, b.bvalue);
  });
  return rows;
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
  std::string s = "version,method,n,seed,b,af,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
  char line[320];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%s,%zu,%llu,%g,%g,%.6f,%.6f,%.6f,%.6f\n", r.version.c_str(), r.method.c_str(),
                  r.n, static_cast<unsigned long long>(r.seed), r.bvalue, r.acceleration, r.metrics.psnr_mean,
                  r.metrics.psnr_std, r.metrics.ssim_mean, r.metrics.ssim_std);
    s += line;
  }
  return s;
}

std::string format_metrics_csv(const std::vector<MetricsSummary>& rows) {
  std::string s = "method,n,b,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%zu,%g,%.6f,%.6f,%.6f,%.6f\n", r.method.c_str(), r.n, r.bvalue, r.psnr_mean,
                  r.psnr_std, r.ssim_mean, r.ssim_std);
    s += line;
  }
  return s;
}

std::vector<MetricsSummary> aggregate_seeds(const std::vector<BenchRow>& rows) {
  std::vector<MetricsRecord> per_seed;
  per_seed.reserve(rows.size());
  for (const auto& r : rows) per_seed.push_back({r.method, r.n, r.bvalue, r.metrics.psnr_mean, r.metrics.ssim_mean});
  return summarize(per_seed);
}

}  // namespace qsamp
