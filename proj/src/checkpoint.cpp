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

#include "gpc/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gpc::cli {

namespace {

using nlohmann::json;

std::string Fnv1aHex(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

json SpecToJson(const envs::EnvSpec& spec) {
  return {{"name", spec.name},
          {"nq", spec.nq},
          {"nv", spec.nv},
          {"action_dim", spec.action_dim},
          {"obs_dim", spec.obs_dim},
          {"action_limit", spec.action_limit},
          {"physics_dt", spec.physics_dt},
          {"ctrl_freq", spec.ctrl_freq},
          {"horizon_seconds", spec.horizon_seconds},
          {"num_knots", spec.num_knots},
          {"episode_seconds", spec.episode_seconds},
          {"success_window_seconds", spec.success_window_seconds}};
}

envs::EnvSpec SpecFromJson(const json& j) {
  envs::EnvSpec spec;
  spec.name = j.at("name");
  spec.nq = j.at("nq");
  spec.nv = j.at("nv");
  spec.action_dim = j.at("action_dim");
  spec.obs_dim = j.at("obs_dim");
  spec.action_limit = j.at("action_limit").get<std::vector<double>>();
  spec.physics_dt = j.at("physics_dt");
  spec.ctrl_freq = j.at("ctrl_freq");
  spec.horizon_seconds = j.at("horizon_seconds");
  spec.num_knots = j.at("num_knots");
  spec.episode_seconds = j.at("episode_seconds");
  spec.success_window_seconds = j.at("success_window_seconds");
  return spec;
}

json ModelToJson(const flow::FlowModel& model) {
  return {{"layer_sizes", model.net.layer_sizes},
          {"activation", net::ActivationName(model.net.activation)},
          {"weights", model.net.weights},
          {"biases", model.net.biases},
          {"obs_mean", model.obs_mean},
          {"obs_std", model.obs_std},
          {"num_knots", model.num_knots},
          {"action_dim", model.action_dim},
          {"obs_dim", model.obs_dim},
          {"horizon_steps", model.horizon_steps}};
}

flow::FlowModel ModelFromJson(const json& j) {
  flow::FlowModel model;
  model.net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  model.net.activation =
      net::ActivationFromName(j.at("activation").get<std::string>());
  model.net.weights =
      j.at("weights").get<std::vector<std::vector<double>>>();
  model.net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  model.obs_mean = j.at("obs_mean").get<std::vector<double>>();
  model.obs_std = j.at("obs_std").get<std::vector<double>>();
  model.num_knots = j.at("num_knots");
  model.action_dim = j.at("action_dim");
  model.obs_dim = j.at("obs_dim");
  model.horizon_steps = j.at("horizon_steps");
  return model;
}

json ConfigToJson(const loop::GpcConfig& c) {
  return {{"env", c.env_name},
          {"seed", c.seed},
          {"iterations", c.iterations},
          {"num_envs", c.num_envs},
          {"gaussian_samples", c.gaussian_samples},
          {"policy_samples", c.policy_samples},
          {"episode_seconds", c.episode_seconds},
          {"sigma", c.sigma},
          {"weighting", c.weighting.Name()},
          {"lambda", c.weighting.lambda},
          {"cem_elites", c.weighting.num_elites},
          {"tsallis_r", c.weighting.r},
          {"risk", c.risk.Name()},
          {"cvar_beta", c.risk.beta},
          {"num_domains", c.num_domains},
          {"domain_scale", c.domain_scale},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"ode_dt", c.ode_dt},
          {"eval_samples", c.eval_samples}};
}

loop::GpcConfig ConfigFromJson(const json& j) {
  loop::GpcConfig c;
  c.env_name = j.at("env");
  c.seed = j.at("seed");
  c.iterations = j.at("iterations");
  c.num_envs = j.at("num_envs");
  c.gaussian_samples = j.at("gaussian_samples");
  c.policy_samples = j.at("policy_samples");
  c.episode_seconds = j.at("episode_seconds");
  c.sigma = j.at("sigma");
  std::string weighting = j.at("weighting");
  if (weighting == "mppi") {
    c.weighting = spc::WeightingFn::Mppi(j.at("lambda"));
  } else if (weighting == "ps") {
    c.weighting = spc::WeightingFn::PredictiveSampling();
  } else if (weighting == "cem") {
    c.weighting = spc::WeightingFn::Cem(j.at("cem_elites"));
  } else if (weighting == "tsallis") {
    c.weighting = spc::WeightingFn::Tsallis(j.at("lambda"), j.at("tsallis_r"));
  } else {
    throw std::runtime_error("checkpoint: unknown weighting " + weighting);
  }
  std::string risk = j.at("risk");
  if (risk == "average") {
    c.risk = spc::RiskAggregator::Average();
  } else if (risk == "worst_case") {
    c.risk = spc::RiskAggregator::WorstCase();
  } else if (risk == "cvar") {
    c.risk = spc::RiskAggregator::Cvar(j.at("cvar_beta"));
  } else {
    throw std::runtime_error("checkpoint: unknown risk aggregator " + risk);
  }
  c.num_domains = j.at("num_domains");
  c.domain_scale = j.at("domain_scale");
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.learning_rate = j.at("learning_rate");
  c.ode_dt = j.at("ode_dt");
  c.eval_samples = j.at("eval_samples");
  // The worker count is an execution detail, not part of the run's
  // identity; checkpoints always load with automatic workers.
  c.workers = 0;
  return c;
}

// Wall times are excluded: the checkpoint (and its hash) is a pure
// function of (config, seed).
json StatsToJson(const std::vector<loop::IterationStats>& stats) {
  json arr = json::array();
  for (const auto& s : stats) {
    arr.push_back({{"iteration", s.iteration},
                   {"mean_cost", s.mean_cost},
                   {"fit_loss", s.fit_loss},
                   {"policy_best_fraction", s.policy_best_fraction},
                   {"rollout_count", s.rollout_count}});
  }
  return arr;
}

std::vector<loop::IterationStats> StatsFromJson(const json& arr) {
  std::vector<loop::IterationStats> stats;
  for (const auto& j : arr) {
    loop::IterationStats s;
    s.iteration = j.at("iteration");
    s.mean_cost = j.at("mean_cost");
    s.fit_loss = j.at("fit_loss").get<std::vector<double>>();
    s.policy_best_fraction = j.at("policy_best_fraction");
    s.rollout_count = j.at("rollout_count");
    stats.push_back(std::move(s));
  }
  return stats;
}

json Payload(const Checkpoint& cp) {
  return {{"format_version", cp.format_version},
          {"env", cp.env_name},
          {"spec", SpecToJson(cp.spec)},
          {"model", ModelToJson(cp.model)},
          {"config", ConfigToJson(cp.config)},
          {"stats", StatsToJson(cp.stats)}};
}

}  // namespace

std::string CheckpointHash(const Checkpoint& checkpoint) {
  return Fnv1aHex(Payload(checkpoint).dump());
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  json doc = Payload(checkpoint);
  doc["timestamp"] = checkpoint.timestamp;
  doc["hash"] = CheckpointHash(checkpoint);
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write checkpoint: " + path);
  file << doc.dump(2) << "\n";
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open checkpoint: " + path);
  json doc;
  try {
    file >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint parse error in " + path + ": " +
                             e.what());
  }
  Checkpoint cp;
  cp.format_version = doc.at("format_version");
  if (cp.format_version != 1) {
    throw std::runtime_error("unsupported checkpoint format_version");
  }
  cp.env_name = doc.at("env");
  cp.spec = SpecFromJson(doc.at("spec"));
  cp.model = ModelFromJson(doc.at("model"));
  cp.config = ConfigFromJson(doc.at("config"));
  cp.stats = StatsFromJson(doc.at("stats"));
  cp.timestamp = doc.value("timestamp", "");
  std::string stored = doc.value("hash", "");
  if (stored != CheckpointHash(cp)) {
    throw std::runtime_error("checkpoint hash mismatch: " + path);
  }
  return cp;
}

}  // namespace gpc::cli
