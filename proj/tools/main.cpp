// kfoldpg: experiment driver for the k-fold baseline policy-gradient library.
//
//   kfoldpg run --config exp.cfg [--mode grad] [--k 4] [--algo trpo]
//               [--env pointmass2d] [--seeds 0,1,2] [--out results] [--workers 4]
//   kfoldpg summarize --dir results
//   kfoldpg curve --dir results

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kpg/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) throw std::runtime_error("--seeds: empty entry");
    seeds.push_back(std::stoull(part));
  }
  if (seeds.empty()) throw std::runtime_error("--seeds: empty list");
  return seeds;
}

void print_summary(const kpg::Summary& s) {
  std::cout << "env=" << s.env_name << " algo=" << s.algo << " mode=" << s.mode
            << " k=" << s.k << " seeds=" << s.seed_count
            << " performance=" << kpg::format_double(s.mean_performance)
            << " +/- " << kpg::format_double(s.std_performance)
            << " (population std)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-fold baseline policy gradient experiments"};
  app.require_subcommand(1);

  std::string config_path, mode_str, algo_str, env_str, seeds_str, out_dir;
  std::size_t k_override = 0;
  std::size_t workers_override = 0;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("--config", config_path, "config file path")->required();
  run_cmd->add_option("--mode", mode_str, "classic|param|param-scaled|grad");
  run_cmd->add_option("--k", k_override, "number of folds");
  run_cmd->add_option("--algo", algo_str, "trpo|tnpg");
  run_cmd->add_option("--env", env_str, "pointmass2d|lqr1d");
  run_cmd->add_option("--seeds", seeds_str, "comma-separated seed list");
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--workers", workers_override,
                      "parallel rollout workers");

  std::string summarize_dir_path;
  auto* summarize_cmd =
      app.add_subcommand("summarize", "recompute summary.csv for a run dir");
  summarize_cmd->add_option("--dir", summarize_dir_path, "experiment directory")
      ->required();

  std::string curve_dir_path;
  auto* curve_cmd =
      app.add_subcommand("curve", "write per-iteration mean/std curve.csv");
  curve_cmd->add_option("--dir", curve_dir_path, "experiment directory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      kpg::ExperimentConfig config = kpg::parse_config(read_file(config_path));
      if (!mode_str.empty()) config.run.mode = kpg::mode_from_string(mode_str);
      if (k_override > 0) config.run.k = k_override;
      if (!algo_str.empty()) config.run.algo = kpg::algo_from_string(algo_str);
      if (!env_str.empty()) config.env_name = env_str;
      if (!seeds_str.empty()) config.seeds = parse_seed_list(seeds_str);
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (workers_override > 0) config.run.workers = workers_override;
      config.validate();
      const kpg::Summary summary = kpg::run_experiment(config);
      print_summary(summary);
    } else if (summarize_cmd->parsed()) {
      print_summary(kpg::summarize_dir(summarize_dir_path));
    } else if (curve_cmd->parsed()) {
      const auto rows = kpg::emit_curve_data(curve_dir_path);
      std::cout << "wrote " << curve_dir_path << "/curve.csv (" << rows.size()
                << " rows)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
