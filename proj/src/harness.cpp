#include "kpg/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kpg/errors.hpp"

namespace fs = std::filesystem;

namespace kpg {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key " + key + ": expected a number, got \"" +
                      value + "\"");
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key " + key + ": expected a nonnegative integer, got \"" +
                      value + "\"");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config key " + key + ": expected true/false, got \"" +
                    value + "\"");
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  const std::string last = trim(current);
  if (!last.empty() || !parts.empty()) parts.push_back(last);
  return parts;
}

}  // namespace

void ExperimentConfig::validate() const {
  run.validate();
  if (seeds.empty()) throw ConfigError("config key seeds: must be nonempty");
  if (env_name != "pointmass2d" && env_name != "lqr1d") {
    throw ConfigError("config key env: unknown environment \"" + env_name +
                      "\"");
  }
  if (output_dir.empty()) throw ConfigError("config key out: must be nonempty");
  for (std::size_t h : policy_hidden) {
    if (h == 0) {
      throw ConfigError("config key policy_hidden: sizes must be >= 1");
    }
  }
}

std::string mode_to_string(Mode mode) {
  switch (mode) {
    case Mode::kClassic: return "classic";
    case Mode::kParamKfold: return "param";
    case Mode::kParamKfoldScaled: return "param-scaled";
    case Mode::kGradKfold: return "grad";
  }
  throw ContractError("mode_to_string: unknown mode");
}

Mode mode_from_string(const std::string& name) {
  if (name == "classic") return Mode::kClassic;
  if (name == "param") return Mode::kParamKfold;
  if (name == "param-scaled") return Mode::kParamKfoldScaled;
  if (name == "grad") return Mode::kGradKfold;
  throw ConfigError("config key mode: expected classic|param|param-scaled|grad, got \"" +
                    name + "\"");
}

std::string algo_to_string(Algo algo) {
  return algo == Algo::kTrpo ? "trpo" : "tnpg";
}

Algo algo_from_string(const std::string& name) {
  if (name == "trpo") return Algo::kTrpo;
  if (name == "tnpg") return Algo::kTnpg;
  throw ConfigError("config key algo: expected trpo|tnpg, got \"" + name +
                    "\"");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    }

    if (key == "env") {
      config.env_name = value;
    } else if (key == "mode") {
      config.run.mode = mode_from_string(value);
    } else if (key == "k") {
      config.run.k = static_cast<std::size_t>(parse_count(key, value));
      if (config.run.k < 1) throw ConfigError("config key k: must be >= 1");
    } else if (key == "algo") {
      config.run.algo = algo_from_string(value);
    } else if (key == "gamma") {
      config.run.gamma = parse_double(key, value);
    } else if (key == "horizon") {
      config.run.horizon = static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "iterations") {
      config.run.iterations = static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "sample_budget") {
      config.run.sample_budget =
          static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "step_size") {
      config.run.trust.delta = parse_double(key, value);
    } else if (key == "cg_iters") {
      config.run.trust.cg_iters =
          static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "cg_damping") {
      config.run.trust.cg_damping = parse_double(key, value);
    } else if (key == "backtrack_ratio") {
      config.run.trust.backtrack_ratio = parse_double(key, value);
    } else if (key == "max_backtracks") {
      config.run.trust.max_backtracks =
          static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "baseline_adam_steps") {
      config.run.baseline_fit.adam_steps =
          static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "baseline_minibatch") {
      config.run.baseline_fit.minibatch =
          static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "baseline_lr") {
      config.run.baseline_fit.learning_rate = parse_double(key, value);
    } else if (key == "normalize_advantages") {
      config.run.normalize_advantages = parse_bool(key, value);
    } else if (key == "workers") {
      config.run.workers = static_cast<std::size_t>(parse_count(key, value));
    } else if (key == "seeds") {
      config.seeds.clear();
      for (const auto& part : split_commas(value)) {
        if (part.empty()) {
          throw ConfigError("config key seeds: empty entry in list");
        }
        config.seeds.push_back(parse_count(key, part));
      }
    } else if (key == "out") {
      config.output_dir = value;
    } else if (key == "policy_hidden") {
      config.policy_hidden.clear();
      for (const auto& part : split_commas(value)) {
        if (part.empty()) {
          throw ConfigError("config key policy_hidden: empty entry in list");
        }
        config.policy_hidden.push_back(
            static_cast<std::size_t>(parse_count(key, part)));
      }
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  try {
    config.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  return config;
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

namespace {

std::string join_counts(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  out += "env = " + config.env_name + "\n";
  out += "mode = " + mode_to_string(config.run.mode) + "\n";
  out += "k = " + std::to_string(config.run.k) + "\n";
  out += "algo = " + algo_to_string(config.run.algo) + "\n";
  out += "gamma = " + format_double(config.run.gamma) + "\n";
  out += "horizon = " + std::to_string(config.run.horizon) + "\n";
  out += "iterations = " + std::to_string(config.run.iterations) + "\n";
  out += "sample_budget = " + std::to_string(config.run.sample_budget) + "\n";
  out += "step_size = " + format_double(config.run.trust.delta) + "\n";
  out += "cg_iters = " + std::to_string(config.run.trust.cg_iters) + "\n";
  out += "cg_damping = " + format_double(config.run.trust.cg_damping) + "\n";
  out += "backtrack_ratio = " + format_double(config.run.trust.backtrack_ratio) + "\n";
  out += "max_backtracks = " + std::to_string(config.run.trust.max_backtracks) + "\n";
  out += "baseline_adam_steps = " + std::to_string(config.run.baseline_fit.adam_steps) + "\n";
  out += "baseline_minibatch = " + std::to_string(config.run.baseline_fit.minibatch) + "\n";
  out += "baseline_lr = " + format_double(config.run.baseline_fit.learning_rate) + "\n";
  out += "normalize_advantages = " +
         std::string(config.run.normalize_advantages ? "true" : "false") + "\n";
  out += "workers = " + std::to_string(config.run.workers) + "\n";
  out += "seeds = " + join_seeds(config.seeds) + "\n";
  out += "out = " + config.output_dir + "\n";
  out += "policy_hidden = " + join_counts(config.policy_hidden) + "\n";
  return out;
}

namespace {

constexpr const char* kMetricsHeader =
    "iteration,avg_return,mean_kl,grad_norm,baseline_loss,wall_seconds";

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<IterationMetrics>& metrics) {
  std::string text = std::string(kMetricsHeader) + "\n";
  for (const auto& m : metrics) {
    text += std::to_string(m.iteration);
    text += "," + format_double(m.avg_return);
    text += "," + format_double(m.mean_kl);
    text += "," + format_double(m.grad_norm);
    text += "," + format_double(m.baseline_loss);
    text += "," + format_double(m.wall_seconds);
    text += "\n";
  }
  write_text_file(path, text);
}

std::vector<IterationMetrics> read_metrics_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMetricsHeader) {
    throw ContractError("metrics file " + path + ": bad or missing header");
  }
  std::vector<IterationMetrics> metrics;
  while (std::getline(in, line)) {
    const std::string row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    if (fields.size() != 6) {
      throw ContractError("metrics file " + path + ": malformed row");
    }
    IterationMetrics m;
    m.iteration = static_cast<std::size_t>(parse_count("iteration", fields[0]));
    m.avg_return = parse_double("avg_return", fields[1]);
    m.mean_kl = parse_double("mean_kl", fields[2]);
    m.grad_norm = parse_double("grad_norm", fields[3]);
    m.baseline_loss = parse_double("baseline_loss", fields[4]);
    m.wall_seconds = parse_double("wall_seconds", fields[5]);
    metrics.push_back(m);
  }
  return metrics;
}

namespace {

// Hidden layers use tanh except the last one, which stays linear; this is the
// architecture both reference networks share.
std::vector<Act> hidden_activations(std::size_t hidden_count) {
  std::vector<Act> acts(hidden_count, Act::kTanh);
  if (!acts.empty()) acts.back() = Act::kIdentity;
  return acts;
}

GaussianPolicy make_policy(const ExperimentConfig& config, const Env& env,
                           std::uint64_t seed) {
  Rng rng(mix_seed(seed, kStreamPolicyInit));
  return GaussianPolicy::init(env.spec().obs_dim, env.spec().action_dim,
                              config.policy_hidden,
                              hidden_activations(config.policy_hidden.size()),
                              rng);
}

std::string metrics_filename(std::uint64_t seed) {
  return "metrics_seed" + std::to_string(seed) + ".csv";
}

double population_std(const std::vector<double>& values, double mean) {
  double var = 0.0;
  for (double v : values) {
    const double d = v - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(values.size()));
}

std::vector<std::string> metrics_files_in(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("metrics_seed", 0) == 0 &&
        name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ContractError("no metrics_seed*.csv files in " + dir);
  }
  return files;
}

Summary make_summary(const ExperimentConfig& config,
                     const std::vector<double>& performances) {
  Summary summary;
  summary.env_name = config.env_name;
  summary.algo = algo_to_string(config.run.algo);
  summary.mode = mode_to_string(config.run.mode);
  summary.k = config.run.k;
  summary.seed_count = performances.size();
  double total = 0.0;
  for (double p : performances) total += p;
  summary.mean_performance = total / static_cast<double>(performances.size());
  summary.std_performance =
      population_std(performances, summary.mean_performance);
  return summary;
}

}  // namespace

std::string summary_csv_text(const Summary& summary) {
  std::string text = "# std convention: population (n divisor) over seeds\n";
  text += "env,algo,mode,k,seeds,mean_performance,std_performance\n";
  text += summary.env_name + "," + summary.algo + "," + summary.mode + ",";
  text += std::to_string(summary.k) + "," + std::to_string(summary.seed_count);
  text += "," + format_double(summary.mean_performance);
  text += "," + format_double(summary.std_performance);
  text += "\n";
  return text;
}

Summary run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  write_text_file((fs::path(config.output_dir) / "config.txt").string(),
                  serialize_config(config));

  std::vector<double> performances;
  performances.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) {
    try {
      const auto env = make_env(config.env_name, config.run.horizon);
      GaussianPolicy policy = make_policy(config, *env, seed);
      RunConfig rc = config.run;
      rc.seed = seed;
      const auto metrics = run(rc, policy, *env);
      write_metrics_csv(
          (fs::path(config.output_dir) / metrics_filename(seed)).string(),
          metrics);
      performances.push_back(performance(metrics));
    } catch (const std::exception& e) {
      throw std::runtime_error("seed " + std::to_string(seed) + ": " +
                               e.what());
    }
  }
  const Summary summary = make_summary(config, performances);
  write_text_file((fs::path(config.output_dir) / "summary.csv").string(),
                  summary_csv_text(summary));
  return summary;
}

Summary summarize_dir(const std::string& dir) {
  const ExperimentConfig config =
      parse_config(read_text_file((fs::path(dir) / "config.txt").string()));
  std::vector<double> performances;
  for (const auto& file : metrics_files_in(dir)) {
    std::vector<IterationMetrics> metrics = read_metrics_csv(file);
    if (metrics.empty()) {
      throw ContractError("metrics file " + file + ": no rows");
    }
    performances.push_back(performance(metrics));
  }
  const Summary summary = make_summary(config, performances);
  write_text_file((fs::path(dir) / "summary.csv").string(),
                  summary_csv_text(summary));
  return summary;
}

std::vector<CurveRow> emit_curve_data(const std::string& dir) {
  std::vector<std::vector<IterationMetrics>> per_seed;
  for (const auto& file : metrics_files_in(dir)) {
    per_seed.push_back(read_metrics_csv(file));
    if (per_seed.back().size() != per_seed.front().size()) {
      throw ContractError("curve: iteration counts differ between seed files");
    }
  }
  const std::size_t iterations = per_seed.front().size();
  const std::size_t n = per_seed.size();
  std::vector<CurveRow> rows(iterations);
  std::vector<double> returns(n), kls(n);
  for (std::size_t i = 0; i < iterations; ++i) {
    for (std::size_t s = 0; s < n; ++s) {
      returns[s] = per_seed[s][i].avg_return;
      kls[s] = per_seed[s][i].mean_kl;
    }
    CurveRow& row = rows[i];
    row.iteration = per_seed.front()[i].iteration;
    double rm = 0.0, km = 0.0;
    for (double v : returns) rm += v;
    for (double v : kls) km += v;
    row.return_mean = rm / static_cast<double>(n);
    row.kl_mean = km / static_cast<double>(n);
    row.return_std = population_std(returns, row.return_mean);
    row.kl_std = population_std(kls, row.kl_mean);
  }

  std::string text = "iteration,return_mean,return_std,kl_mean,kl_std\n";
  for (const auto& row : rows) {
    text += std::to_string(row.iteration);
    text += "," + format_double(row.return_mean);
    text += "," + format_double(row.return_std);
    text += "," + format_double(row.kl_mean);
    text += "," + format_double(row.kl_std);
    text += "\n";
  }
  write_text_file((fs::path(dir) / "curve.csv").string(), text);
  return rows;
}

}  // namespace kpg
