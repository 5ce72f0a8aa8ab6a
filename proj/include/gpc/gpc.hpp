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

#ifndef GPCLAB_GPC_HPP_
#define GPCLAB_GPC_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gpc/envs.hpp"
#include "gpc/flow.hpp"
#include "gpc/spc.hpp"

namespace gpc::loop {

struct GpcConfig {
  std::string env_name = "pendulum";
  int iterations = 10;
  int num_envs = 128;         // parallel data-collection environments
  int gaussian_samples = 8;   // proposal samples per SPC step
  int policy_samples = 2;     // flow samples per SPC step
  double episode_seconds = 0.0;  // 0 -> environment default
  double sigma = 0.3;
  spc::WeightingFn weighting = spc::WeightingFn::PredictiveSampling();
  spc::RiskAggregator risk = spc::RiskAggregator::Average();
  int num_domains = 1;
  double domain_scale = 0.2;
  int epochs = 10;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double ode_dt = 0.1;
  int eval_samples = 128;  // total rollouts per step when evaluating
  int workers = 0;         // 0 -> hardware concurrency
  std::uint64_t seed = 0;

  static GpcConfig Defaults(const std::string& env_name);
  double EpisodeSeconds(const envs::EnvSpec& spec) const;
  int EpisodeSteps(const envs::EnvSpec& spec) const;
  void Validate() const;
};

struct IterationStats {
  int iteration = 0;
  // Mean plan cost per horizon step of the policy-drawn proposal samples
  // (the learning-progress curve); falls back to the executed closed-loop
  // cost per step when the iteration drew no policy samples.
  double mean_cost = 0.0;
  std::vector<double> fit_loss;  // per-epoch mean flow loss
  double policy_best_fraction = 0.0;
  long long rollout_count = 0;
  double wall_time_s = 0.0;
};

enum class DeployMode { kSpc, kGpc, kGpcPlus };
std::string DeployModeName(DeployMode mode);
DeployMode DeployModeFromName(const std::string& name);

struct EvalOptions {
  DeployMode mode = DeployMode::kGpc;
  int episodes = 100;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  // Simulation-domain override for robustness studies; empty -> nominal.
  envs::DomainParams sim_params;
};

struct EvalReport {
  DeployMode mode = DeployMode::kGpc;
  std::vector<double> episode_costs;  // cost per step; +inf if diverged
  std::vector<bool> episode_success;
  std::vector<double> episode_roughness;
  double mean_cost = 0.0;  // over non-diverged episodes
  double std_cost = 0.0;
  double success_rate = 0.0;
  double action_roughness = 0.0;  // mean ||u_k - u_{k-1}||
};

// One outer-loop data collection pass (parallel environments running SPC
// with mixed Gaussian/policy samples). `model` may be null only when
// policy_samples == 0.
std::pair<std::vector<flow::TrainRecord>, IterationStats> CollectIteration(
    const GpcConfig& config, const envs::Env& env, const flow::FlowModel* model,
    int iteration);

// Full training: `iterations` cycles of collection and flow fitting.
std::pair<flow::FlowModel, std::vector<IterationStats>> Train(
    const GpcConfig& config, const envs::Env& env);

// Closed-loop evaluation of SPC, the policy alone (GPC), or the policy
// bootstrapping SPC (GPC+, half Gaussian / half policy samples).
EvalReport Evaluate(const envs::Env& env, const GpcConfig& config,
                    const flow::FlowModel* model, const EvalOptions& options);

// Full time series of a single episode, for trajectory export and replay.
struct EpisodeTrace {
  std::vector<envs::EnvState> states;             // length steps + 1
  std::vector<std::vector<double>> observations;  // per pre-step state
  std::vector<std::vector<double>> actions;       // physical units
  std::vector<double> running_costs;
  bool diverged = false;
};

EpisodeTrace RunEpisode(const envs::Env& env, const GpcConfig& config,
                        const flow::FlowModel* model, DeployMode mode,
                        double alpha, const envs::DomainParams& sim_params,
                        std::uint64_t episode_seed);

}  // namespace gpc::loop

#endif  // GPCLAB_GPC_HPP_
