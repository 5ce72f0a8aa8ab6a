// Copyright 2026 The gpclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpc/checkpoint.hpp"
#include "gpc/config.hpp"
#include "gpc/csv.hpp"
#include "gpc/envs.hpp"
#include "gpc/gpc.hpp"
#include "gpc/parallel.hpp"

namespace {

namespace fs = std::filesystem;
using namespace gpc;

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::string Timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << text;
}

int CmdTrain(const std::string& config_path, const std::string& out_dir) {
  cli::RunConfig config = cli::ParseConfigFile(config_path);
  fs::create_directories(out_dir);

  auto env = envs::MakeEnv(config.gpc.env_name);
  std::cout << "training " << config.gpc.env_name << " for "
            << config.gpc.iterations << " iterations..." << std::endl;
  auto [model, stats] = loop::Train(config.gpc, *env);

  cli::Checkpoint cp;
  cp.env_name = config.gpc.env_name;
  cp.spec = env->spec();
  cp.model = model;
  cp.config = config.gpc;
  cp.stats = stats;
  cp.timestamp = Timestamp();
  fs::path checkpoint_path = fs::path(out_dir) / "checkpoint.json";
  cli::SaveCheckpoint(checkpoint_path.string(), cp);

  cli::CsvWriter curves(
      (fs::path(out_dir) / "training_curves.csv").string(),
      {"iteration", "mean_cost", "fit_loss", "policy_best_fraction",
       "wall_time"});
  for (const auto& s : stats) {
    double fit_loss = s.fit_loss.empty() ? 0.0 : s.fit_loss.back();
    curves.WriteRow({std::to_string(s.iteration), cli::CsvNumber(s.mean_cost),
                     cli::CsvNumber(fit_loss),
                     cli::CsvNumber(s.policy_best_fraction),
                     cli::CsvNumber(s.wall_time_s)});
  }
  WriteFile(fs::path(out_dir) / "resolved_config.txt",
            cli::ResolvedConfigText(config));

  std::cout << "checkpoint: " << checkpoint_path.string() << "\n"
            << "hash: " << cli::CheckpointHash(cp) << "\n"
            << "final mean cost per step: "
            << cli::CsvNumber(stats.back().mean_cost) << std::endl;
  return 0;
}

// Resolve the (env, config, model) triple for eval/rollout/bench from
// whichever of --checkpoint / --config / --env was given.
struct Resolved {
  std::unique_ptr<envs::Env> env;
  loop::GpcConfig config;
  std::unique_ptr<flow::FlowModel> model;  // null when no checkpoint
};

Resolved ResolveInputs(const std::string& checkpoint_path,
                       const std::string& config_path,
                       const std::string& env_name) {
  Resolved r;
  if (!checkpoint_path.empty()) {
    cli::Checkpoint cp = cli::LoadCheckpoint(checkpoint_path);
    if (!env_name.empty() && env_name != cp.env_name) {
      throw cli::ConfigError("environment mismatch: checkpoint has '" +
                             cp.env_name + "' but --env requested '" +
                             env_name + "'");
    }
    r.env = envs::MakeEnv(cp.env_name);
    r.config = cp.config;
    r.model = std::make_unique<flow::FlowModel>(std::move(cp.model));
  } else if (!config_path.empty()) {
    cli::RunConfig run = cli::ParseConfigFile(config_path);
    if (!env_name.empty() && env_name != run.gpc.env_name) {
      throw cli::ConfigError("environment mismatch: config has '" +
                             run.gpc.env_name + "' but --env requested '" +
                             env_name + "'");
    }
    r.env = envs::MakeEnv(run.gpc.env_name);
    r.config = run.gpc;
  } else if (!env_name.empty()) {
    r.env = envs::MakeEnv(env_name);
    r.config = loop::GpcConfig::Defaults(env_name);
  } else {
    throw cli::ConfigError("need --checkpoint, --config, or --env");
  }
  return r;
}

int CmdEval(const std::string& checkpoint_path, const std::string& config_path,
            const std::string& env_name, const std::string& mode_name,
            int episodes, double alpha, std::uint64_t seed,
            const std::string& out_dir) {
  loop::DeployMode mode = loop::DeployModeFromName(mode_name);
  Resolved r = ResolveInputs(checkpoint_path, config_path, env_name);
  if (mode != loop::DeployMode::kSpc && r.model == nullptr) {
    throw cli::ConfigError("mode '" + mode_name + "' requires --checkpoint");
  }

  loop::EvalOptions options;
  options.mode = mode;
  options.episodes = episodes;
  options.alpha = alpha;
  options.seed = seed;
  loop::EvalReport report =
      loop::Evaluate(*r.env, r.config, r.model.get(), options);

  fs::create_directories(out_dir);
  cli::CsvWriter csv((fs::path(out_dir) / "eval_report.csv").string(),
                     {"episode", "cost_per_step", "success",
                      "action_roughness"});
  for (int ep = 0; ep < episodes; ++ep) {
    csv.WriteRow({std::to_string(ep), cli::CsvNumber(report.episode_costs[ep]),
                  report.episode_success[ep] ? "1" : "0",
                  cli::CsvNumber(report.episode_roughness[ep])});
  }

  std::cout << "mode: " << loop::DeployModeName(mode) << "\n"
            << "episodes: " << episodes << "\n"
            << "mean cost per step: " << cli::CsvNumber(report.mean_cost)
            << "\n"
            << "std cost per step: " << cli::CsvNumber(report.std_cost) << "\n"
            << "success rate: " << cli::CsvNumber(report.success_rate) << "\n"
            << "action roughness: " << cli::CsvNumber(report.action_roughness)
            << std::endl;
  return 0;
}

int CmdRollout(const std::string& checkpoint_path,
               const std::string& config_path, const std::string& env_name,
               const std::string& mode_name, double alpha, std::uint64_t seed,
               const std::string& out_path) {
  loop::DeployMode mode = loop::DeployModeFromName(mode_name);
  Resolved r = ResolveInputs(checkpoint_path, config_path, env_name);
  if (mode != loop::DeployMode::kSpc && r.model == nullptr) {
    throw cli::ConfigError("mode '" + mode_name + "' requires --checkpoint");
  }
  const envs::EnvSpec& spec = r.env->spec();
  loop::EpisodeTrace trace = loop::RunEpisode(
      *r.env, r.config, r.model.get(), mode, alpha, {}, seed);

  std::vector<std::string> header = {"t"};
  for (int i = 0; i < spec.nq; ++i) header.push_back("q" + std::to_string(i));
  for (int i = 0; i < spec.nv; ++i) header.push_back("v" + std::to_string(i));
  for (int i = 0; i < spec.obs_dim; ++i) {
    header.push_back("obs" + std::to_string(i));
  }
  for (int i = 0; i < spec.action_dim; ++i) {
    header.push_back("action" + std::to_string(i));
  }
  header.push_back("running_cost");

  if (fs::path(out_path).has_parent_path()) {
    fs::create_directories(fs::path(out_path).parent_path());
  }
  cli::CsvWriter csv(out_path, header);
  for (std::size_t k = 0; k < trace.actions.size(); ++k) {
    std::vector<std::string> row = {cli::CsvNumber(k * spec.CtrlDt())};
    for (double x : trace.states[k].q) row.push_back(cli::CsvNumber(x));
    for (double x : trace.states[k].v) row.push_back(cli::CsvNumber(x));
    for (double x : trace.observations[k]) row.push_back(cli::CsvNumber(x));
    for (double x : trace.actions[k]) row.push_back(cli::CsvNumber(x));
    row.push_back(cli::CsvNumber(trace.running_costs[k]));
    csv.WriteRow(row);
  }
  std::cout << "wrote " << trace.actions.size() << " rows to " << out_path
            << (trace.diverged ? " (episode diverged early)" : "")
            << std::endl;
  return 0;
}

struct LatencyStats {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

LatencyStats Summarize(std::vector<double>& samples_ms) {
  LatencyStats out;
  if (samples_ms.empty()) return out;
  double total = 0.0;
  for (double s : samples_ms) total += s;
  out.mean_ms = total / samples_ms.size();
  std::sort(samples_ms.begin(), samples_ms.end());
  out.p95_ms = samples_ms[static_cast<std::size_t>(0.95 * samples_ms.size())];
  return out;
}

int CmdBench(const std::string& config_path, const std::string& env_name,
             int min_steps) {
  Resolved r = ResolveInputs("", config_path, env_name);
  const envs::Env& env = *r.env;
  const envs::EnvSpec& spec = env.spec();
  loop::GpcConfig config = r.config;

  // An untrained model measures the same compute cost as a trained one.
  Rng init_rng(config.seed);
  flow::FlowModel model = flow::MakeFlowModel(spec, init_rng);
  envs::DomainParams nominal = env.NominalParams();

  std::cout << "benchmark: " << spec.name << ", " << min_steps
            << " planning steps per mode\n";
  std::cout << "mode  mean_ms  p95_ms\n";
  for (loop::DeployMode mode :
       {loop::DeployMode::kSpc, loop::DeployMode::kGpc,
        loop::DeployMode::kGpcPlus}) {
    std::vector<double> latencies;
    std::uint64_t episode = 0;
    while (static_cast<int>(latencies.size()) < min_steps) {
      Rng rng(config.seed + 1000 + episode++);
      envs::EnvState state = env.SampleInitialState(rng);
      ActionSequence prev = ActionSequence::Zeros(
          spec.num_knots, spec.action_dim, spec.HorizonSteps());
      spc::SpcContext ctx;
      ctx.env = &env;
      ctx.domains = {nominal};
      ctx.weighting = config.weighting;
      ctx.risk = config.risk;
      ctx.sigma = config.sigma;
      ctx.workers = config.workers;
      int policy_count = 0;
      if (mode == loop::DeployMode::kSpc) {
        ctx.num_gaussian_samples = config.eval_samples;
      } else if (mode == loop::DeployMode::kGpcPlus) {
        ctx.num_gaussian_samples = config.eval_samples / 2;
        policy_count = config.eval_samples - ctx.num_gaussian_samples;
      }
      for (int k = 0; k < config.EpisodeSteps(spec) &&
                      static_cast<int>(latencies.size()) < min_steps;
           ++k) {
        std::vector<double> obs = env.Observe(state);
        auto t0 = std::chrono::steady_clock::now();
        ActionSequence plan;
        if (mode == loop::DeployMode::kGpc) {
          std::vector<double> u0 =
              flow::WarmStartNoise(Shift(prev).knots, 0.0, rng);
          plan = flow::Sample(model, obs, std::move(u0), config.ode_dt);
        } else {
          std::vector<ActionSequence> extras;
          for (int i = 0; i < policy_count; ++i) {
            std::vector<double> u0(model.FlatDim());
            for (double& x : u0) x = rng.Gaussian();
            extras.push_back(
                flow::Sample(model, obs, std::move(u0), config.ode_dt));
          }
          std::tie(plan, std::ignore) =
              spc::SpcStep(ctx, prev, state, extras, rng);
        }
        latencies.push_back(std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count());
        std::vector<double> u = envs::PhysicalAction(spec, plan.AtStep(0));
        state = env.Step(nominal, state, u);
        prev = Shift(plan);
      }
    }
    LatencyStats stats = Summarize(latencies);
    std::printf("%-5s %8.3f %8.3f\n", loop::DeployModeName(mode).c_str(),
                stats.mean_ms, stats.p95_ms);
  }

  // Rollout throughput vs. worker count.
  std::cout << "rollout throughput (rollouts/s):\n";
  for (int workers : {1, 4}) {
    Rng rng(config.seed + 99);
    envs::EnvState state = env.SampleInitialState(rng);
    ActionSequence prev = ActionSequence::Zeros(
        spec.num_knots, spec.action_dim, spec.HorizonSteps());
    std::vector<ActionSequence> plans =
        spc::SampleProposal(prev, config.sigma, 2000, rng);
    std::vector<double> costs(plans.size());
    auto t0 = std::chrono::steady_clock::now();
    ParallelFor(plans.size(), workers, [&](std::size_t i) {
      costs[i] = envs::RolloutCost(env, nominal, state, plans[i]);
    });
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("  workers=%d: %.0f\n", workers, plans.size() / seconds);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative predictive control lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", checkpoint_path, env_name;
  std::string mode_name = "gpc", out_path = "trajectory.csv";
  int episodes = 100, bench_steps = 1000;
  double alpha = 1.0;
  std::uint64_t seed = 0;

  CLI::App* train = app.add_subcommand("train", "Train a flow policy");
  train->add_option("--config", config_path, "run configuration file")
      ->required();
  train->add_option("--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate SPC / GPC / GPC+");
  eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
  eval->add_option("--config", config_path, "run configuration file");
  eval->add_option("--env", env_name, "environment name (SPC-only runs)");
  eval->add_option("--mode", mode_name, "spc, gpc, or gpc+");
  eval->add_option("--episodes", episodes, "number of evaluation episodes");
  eval->add_option("--alpha", alpha, "warm-start level in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--out", out_dir, "output directory");

  CLI::App* rollout = app.add_subcommand("rollout", "Export one trajectory");
  rollout->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
  rollout->add_option("--config", config_path, "run configuration file");
  rollout->add_option("--env", env_name, "environment name (SPC-only runs)");
  rollout->add_option("--mode", mode_name, "spc, gpc, or gpc+");
  rollout->add_option("--alpha", alpha, "warm-start level in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  rollout->add_option("--seed", seed, "episode seed");
  rollout->add_option("--out", out_path, "output CSV path");

  CLI::App* bench = app.add_subcommand("bench", "Planning latency benchmark");
  bench->add_option("--config", config_path, "run configuration file");
  bench->add_option("--env", env_name, "environment name");
  bench->add_option("--steps", bench_steps, "planning steps per mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (train->parsed()) return CmdTrain(config_path, out_dir);
    if (eval->parsed()) {
      return CmdEval(checkpoint_path, config_path, env_name, mode_name,
                     episodes, alpha, seed, out_dir);
    }
    if (rollout->parsed()) {
      return CmdRollout(checkpoint_path, config_path, env_name, mode_name,
                        alpha, seed, out_path);
    }
    if (bench->parsed()) {
      return CmdBench(config_path, env_name.empty() && config_path.empty()
                                       ? "pendulum"
                                       : env_name,
                      bench_steps);
    }
  } catch (const gpc::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitRuntimeError;
  }
  return 0;
}
