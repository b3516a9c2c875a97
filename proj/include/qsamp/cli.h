#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qsamp/config.h"
#include "qsamp/dataset.h"
#include "qsamp/train.h"

namespace qsamp {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitRuntime = 3, kExitIo = 4 };

/// Version stamp of this build (project version plus git describe).
std::string_view version_string();

/// Entry point of the command-line tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct BenchRow {
  std::string version;
  std::string method;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double bvalue = 0.0;
  double acceleration = 0.0;
  MetricsSummary metrics;
};

/// Trains and evaluates every (method, n, seed) cell on `dataset`: training
/// on the train/val splits at the training b-value, testing at every b-value.
/// Rows come back sorted by (method, n, seed, b). `log` may be null.
std::vector<BenchRow> run_bench(const BenchConfig& cfg, const Dataset& dataset, std::ostream* log);

std::string format_bench_csv(const std::vector<BenchRow>& rows);
/// Columns method,n,b,psnr_mean,psnr_std,ssim_mean,ssim_std.
std::string format_metrics_csv(const std::vector<MetricsSummary>& rows);

/// Seed-averaged summary of bench rows, ready for format_table.
std::vector<MetricsSummary> aggregate_seeds(const std::vector<BenchRow>& rows);

}  // namespace qsamp
