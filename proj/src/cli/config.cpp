#include "qsamp/config.h"

#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qsamp/error.h"
#include "qsamp/io.h"

namespace qsamp {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end)
    throw InvalidArgument("config: bad value for " + key + ": '" + text + "'");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(key, item));
  }
  return out;
}

pt::ptree read_tree(const std::string& text,
                    const std::map<std::string, std::set<std::string>>& allowed) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end() || body.empty()) throw InvalidArgument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.contains(key)) throw InvalidArgument("config: unknown key " + section + "." + key);
  }
  return tree;
}

std::optional<std::string> lookup(const pt::ptree& tree, const std::string& key) {
  if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
  return std::nullopt;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

const std::set<std::string> kTrainKeys{"n",          "mode",      "epochs", "lr_sampling",  "lr_recon",
                                       "lambda_tv",  "batch_size", "seed",  "hidden",       "hidden_layers",
                                       "sh_order",   "electrostatic_iterations", "schedule"};

void read_train(const pt::ptree& tree, TrainConfig& cfg) {
  const auto get = [&](const char* key) { return lookup(tree, std::string("train.") + key); };
  if (auto v = get("n")) cfg.n = parse_number<std::size_t>("train.n", *v);
  if (auto v = get("mode")) cfg.mode = parse_sampling_mode(*v);
  if (auto v = get("epochs")) cfg.epochs = parse_number<std::size_t>("train.epochs", *v);
  if (auto v = get("lr_sampling")) cfg.lr_sampling = parse_number<double>("train.lr_sampling", *v);
  if (auto v = get("lr_recon")) cfg.lr_recon = parse_number<double>("train.lr_recon", *v);
  if (auto v = get("lambda_tv")) cfg.lambda_tv = parse_number<double>("train.lambda_tv", *v);
  if (auto v = get("batch_size")) cfg.batch_size = parse_number<std::size_t>("train.batch_size", *v);
  if (auto v = get("seed")) cfg.seed = parse_number<std::uint64_t>("train.seed", *v);
  if (auto v = get("hidden")) cfg.hidden = parse_number<int>("train.hidden", *v);
  if (auto v = get("hidden_layers")) cfg.hidden_layers = parse_number<int>("train.hidden_layers", *v);
  if (auto v = get("sh_order")) cfg.sh_order = parse_number<int>("train.sh_order", *v);
  // Only simultaneous updates exist; the key is reserved for an alternating schedule.
  if (auto v = get("schedule"); v && *v != "simultaneous")
    throw InvalidArgument("config: train.schedule '" + *v + "' is not implemented (only 'simultaneous')");
  if (auto v = get("electrostatic_iterations"))
    cfg.electrostatic_iterations = parse_number<std::size_t>("train.electrostatic_iterations", *v);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config: bad value for " + key + ": '" + v + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base) {
  const auto tree = read_tree(text, {{"train", kTrainKeys},
                                     {"data", {"dataset", "bvalue", "init_protocol"}},
                                     {"output", {"dir", "label"}}});
  ExperimentConfig cfg;
  read_train(tree, cfg.train);
  const auto dataset = lookup(tree, "data.dataset");
  if (!dataset || dataset->empty()) throw InvalidArgument("config: data.dataset is required");
  cfg.dataset = resolve(base, *dataset);
  if (auto v = lookup(tree, "data.bvalue")) cfg.bvalue = parse_number<double>("data.bvalue", *v);
  if (auto v = lookup(tree, "data.init_protocol"); v && !v->empty()) cfg.init_protocol = resolve(base, *v);
  const auto dir = lookup(tree, "output.dir");
  if (!dir || dir->empty()) throw InvalidArgument("config: output.dir is required");
  cfg.out_dir = resolve(base, *dir);
  cfg.label = lookup(tree, "output.label").value_or("");
  if (cfg.label.empty()) cfg.label = std::string(to_string(cfg.train.mode));
  cfg.train.validate();
  return cfg;
}

BenchConfig parse_bench_config(const std::string& text, const std::filesystem::path& base) {
  const auto tree = read_tree(text, {{"train", kTrainKeys},
                                     {"bench", {"methods", "n", "seeds", "dataset", "out", "save_checkpoints"}}});
  BenchConfig cfg;
  read_train(tree, cfg.train);

  std::stringstream methods(lookup(tree, "bench.methods").value_or("learned,random-frozen,uniform-frozen"));
  std::string item;
  while (std::getline(methods, item, ','))
    if (!trim(item).empty()) cfg.methods.push_back(parse_sampling_mode(trim(item)));
  cfg.ns = parse_list<std::size_t>("bench.n", lookup(tree, "bench.n").value_or("3,6,9"));
  cfg.seeds = parse_list<std::uint64_t>("bench.seeds", lookup(tree, "bench.seeds").value_or("1,2,3"));
  if (cfg.methods.empty()) throw InvalidArgument("config: bench.methods is empty");
  if (cfg.ns.empty()) throw InvalidArgument("config: bench.n is empty");
  if (cfg.seeds.empty()) throw InvalidArgument("config: bench.seeds is empty: at least one seed is required");

  const auto dataset = lookup(tree, "bench.dataset");
  if (!dataset || dataset->empty()) throw InvalidArgument("config: bench.dataset is required");
  cfg.dataset = resolve(base, *dataset);
  const auto out = lookup(tree, "bench.out");
  if (!out || out->empty()) throw InvalidArgument("config: bench.out is required");
  cfg.out_dir = resolve(base, *out);
  if (auto v = lookup(tree, "bench.save_checkpoints")) cfg.save_checkpoints = parse_bool("bench.save_checkpoints", *v);

  for (std::size_t n : cfg.ns) {
    TrainConfig probe = cfg.train;
    probe.n = n;
    probe.validate();
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_file(path), path.parent_path());
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  return parse_bench_config(read_file(path), path.parent_path());
}

}  // namespace qsamp
