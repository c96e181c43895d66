#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "secu/checkpoint.hpp"
#include "secu/probes.hpp"
#include "secu/run_config.hpp"
#include "secu/toy.hpp"
#include "secu/trainer.hpp"

namespace fs = std::filesystem;
using namespace secu;

namespace {

// Anything the user can fix: bad flags, files, data. Exit code 1.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

// Fails before any work starts if an output would be clobbered.
std::vector<fs::path> claim_outputs(const std::string& dir, const std::vector<std::string>& names, bool force) {
  if (dir.empty()) throw UserError("no output directory: pass --out or set run.out");
  std::vector<fs::path> paths;
  for (const auto& n : names) {
    fs::path p = fs::path(dir) / n;
    if (fs::exists(p) && !force) throw UserError("refusing to overwrite " + p.string() + " (use --force)");
    paths.push_back(p);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UserError("cannot create " + dir + ": " + ec.message());
  return paths;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw UserError("cannot write " + p.string());
  return f;
}

Dataset load_data_or_fail(const DataSpec& spec, std::uint64_t seed) {
  try {
    return load_dataset(spec, seed);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw UserError(std::string("dataset: ") + e.what());
  }
}

RunConfig read_config(const std::string& path, const Common& common) {
  RunConfig rc = load_run_config(path);
  if (common.seed) rc.seed = *common.seed;
  return rc;
}

int cmd_train(const std::string& config_path, const Common& common) {
  RunConfig rc = read_config(config_path, common);
  const std::string dir = common.out.empty() ? rc.out_dir.value_or("") : common.out;
  const auto paths = claim_outputs(dir, {"checkpoint.secu", "assignments.csv", "metrics.jsonl"}, common.force);
  const Dataset data = load_data_or_fail(rc.data, rc.seed);
  const TrainConfig cfg = resolve_train_config(rc, data);

  Model model = initialize(data, cfg);
  std::vector<EpochLog> logs;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    logs.push_back(train_epoch(model, data, cfg, e));
    std::cerr << epoch_log_json(logs.back()) << '\n';
  }
  save_checkpoint(model, paths[0].string());
  {
    auto f = open_out(paths[1]);
    write_assignments_csv(f, model.heads.front().state.labels());
  }
  {
    auto f = open_out(paths[2]);
    write_epoch_logs(f, logs);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path, const std::string& config_path,
             std::size_t head, const Common& common) {
  Model model = [&] {
    try {
      return load_checkpoint(checkpoint);
    } catch (const ParseError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw UserError(e.what());
    }
  }();
  Dataset data;
  if (!data_path.empty()) {
    DataSpec spec;
    spec.source = data_path;
    data = load_data_or_fail(spec, 0);
  } else {
    const RunConfig rc = read_config(config_path, common);
    data = load_data_or_fail(rc.data, rc.seed);
  }
  const MetricsReport r = evaluate(model, head, data);
  nlohmann::ordered_json j;
  j["acc"] = r.acc;
  j["nmi"] = r.nmi;
  j["ari"] = r.ari;
  j["max_count"] = r.max_count;
  j["min_count"] = r.min_count;
  std::cout << j.dump() << '\n';
  return 0;
}

struct ProbeArgs {
  std::string kind;
  std::size_t clusters = 0;
  std::size_t batch = 0;
  std::size_t trials = 1000;
  std::size_t samples = 100000;
  std::size_t dim = 128;
  double mean_norm = 0.9;
  std::size_t steps = 0;
};

int cmd_probe(const ProbeArgs& a, const Common& common) {
  const auto paths = claim_outputs(common.out, {a.kind + ".csv"}, common.force);
  const SeededRng rng(common.seed.value_or(0));
  auto f = open_out(paths[0]);
  if (a.kind == "coverage") {
    const std::size_t k = a.clusters ? a.clusters : 10000;
    const std::size_t b = a.batch ? a.batch : 1024;
    const CoverageResult r = coverage_probe(k, b, a.trials, rng);
    write_coverage_csv(f, r);
    std::cout << "max_covered " << r.max_covered << " mean_covered " << r.mean_covered << " expected "
              << expected_coverage(k, b) << " mean_uncovered_fraction " << r.mean_uncovered_fraction() << '\n';
  } else if (a.kind == "variance") {
    SeededRng model_rng = rng.split(0);
    SeededRng sample_rng = rng.split(1);
    const auto model = SphereClusterModel::random(a.clusters ? a.clusters : 50, a.dim, a.mean_norm, model_rng);
    const VarianceProbeResult r = variance_ratio_probe(model, a.samples, sample_rng);
    write_variance_csv(f, r);
    std::cout << "predicted_ratio " << r.predicted_ratio << " empirical_ratio " << r.empirical_ratio << '\n';
  } else {
    DriftConfig cfg;
    if (a.clusters) cfg.num_clusters = a.clusters;
    if (a.batch) cfg.batch_size = a.batch;
    if (a.steps) cfg.steps = a.steps;
    cfg.mean_norm = a.mean_norm;
    const DriftResult r = drift_probe(cfg, rng);
    write_drift_csv(f, r);
    std::cout << "ce max/min " << r.ce_max << '/' << r.ce_min << " secu max/min " << r.secu_max << '/'
              << r.secu_min << '\n';
  }
  return 0;
}

int cmd_toy(std::uint64_t max_tries, const Common& common) {
  const auto paths = claim_outputs(common.out, {"toy.csv"}, common.force);
  const auto found = find_toy_seed(common.seed.value_or(0), max_tries);
  if (!found) throw UserError("no separating toy configuration in " + std::to_string(max_tries) + " seeds");
  auto f = open_out(paths[0]);
  write_toy_csv(f, *found);
  std::cout << "seed " << found->seed << " uniform_acc " << found->uniform_acc << " secu_acc "
            << found->weighted_acc << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable cluster discrimination: training, evaluation, probes"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "global seed")->check(CLI::NonNegativeNumber);
  app.add_option("--out", common.out, "output directory");
  app.add_flag("--force", common.force, "overwrite existing outputs");

  std::string config_path;
  auto* train = app.add_subcommand("train", "fit a model from a config file");
  train->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);

  std::string checkpoint, data_path;
  std::size_t head = 0;
  auto* eval = app.add_subcommand("eval", "print metrics of a checkpoint on a dataset as JSON");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  auto* data_opt = eval->add_option("--data", data_path, "feature file")->check(CLI::ExistingFile);
  auto* cfg_opt = eval->add_option("--config", config_path, "config whose [data] section to use")->check(CLI::ExistingFile);
  data_opt->excludes(cfg_opt);
  eval->add_option("--head", head, "head index");

  ProbeArgs probe_args;
  auto* probe = app.add_subcommand("probe", "coverage, variance or drift probe; writes <kind>.csv");
  probe->add_option("--kind", probe_args.kind, "probe kind")->required()->check(CLI::IsMember({"coverage", "variance", "drift"}));
  probe->add_option("--clusters", probe_args.clusters, "K");
  probe->add_option("--batch", probe_args.batch, "mini-batch size");
  probe->add_option("--trials", probe_args.trials, "coverage trials");
  probe->add_option("--samples", probe_args.samples, "variance samples");
  probe->add_option("--dim", probe_args.dim, "sphere dimension (variance)");
  probe->add_option("--mean-norm", probe_args.mean_norm, "cluster mean norm a");
  probe->add_option("--steps", probe_args.steps, "drift steps");

  std::uint64_t max_tries = 1000;
  auto* toy = app.add_subcommand("toy", "two-Gaussian toy; writes toy.csv");
  toy->add_option("--max-tries", max_tries, "seeds to search from --seed");

  // Global flags are accepted after the subcommand as well.
  for (auto* sub : {train, eval, probe, toy}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return cmd_train(config_path, common);
    if (*eval) {
      if (data_path.empty() && config_path.empty()) throw UserError("eval needs --data or --config");
      return cmd_eval(checkpoint, data_path, config_path, head, common);
    }
    if (*probe) return cmd_probe(probe_args, common);
    if (*toy) return cmd_toy(max_tries, common);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
