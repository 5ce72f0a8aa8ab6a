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

#include "gpc/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gpc::cli {

namespace {

const std::set<std::string> kKnownKeys = {
    "env",           "seed",         "iterations",     "num_envs",
    "gaussian_samples", "policy_samples", "episode_seconds", "sigma",
    "weighting",     "lambda",       "cem_elites",     "tsallis_r",
    "risk",          "cvar_beta",    "num_domains",    "domain_scale",
    "epochs",        "batch_size",   "learning_rate",  "ode_dt",
    "eval_samples",  "workers",      "eval_episodes",  "alpha",
};

std::string Trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line;
};

double ToDouble(const std::string& key, const Entry& e) {
  try {
    std::size_t pos = 0;
    double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                      "' expects a number, got '" + e.value + "'");
  }
}

long long ToInt(const std::string& key, const Entry& e) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                      "' expects an integer, got '" + e.value + "'");
  }
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig ParseConfigText(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream stream(text);
  std::string line;
  int lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    std::string stripped = Trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + stripped + "'");
    }
    std::string key = Trim(stripped.substr(0, eq));
    std::string value = Trim(stripped.substr(eq + 1));
    if (!kKnownKeys.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": unknown config key '" + key + "'");
    }
    if (entries.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": duplicate config key '" + key + "' (first on line " +
                        std::to_string(entries[key].line) + ")");
    }
    entries[key] = {value, lineno};
  }

  std::string env = "pendulum";
  if (auto it = entries.find("env"); it != entries.end()) {
    env = it->second.value;
  }
  RunConfig config;
  try {
    config.gpc = loop::GpcConfig::Defaults(env);
  } catch (const std::invalid_argument& e) {
    int line = entries.count("env") ? entries["env"].line : 0;
    throw ConfigError("line " + std::to_string(line) + ": " + e.what());
  }

  // Weighting parameters are gathered first so the weighting key can be
  // applied regardless of key order in the file.
  double lambda = 1.0, tsallis_r = 2.0, cvar_beta = 0.25;
  int cem_elites = 2;
  if (auto it = entries.find("lambda"); it != entries.end()) {
    lambda = ToDouble("lambda", it->second);
  }
  if (auto it = entries.find("tsallis_r"); it != entries.end()) {
    tsallis_r = ToDouble("tsallis_r", it->second);
  }
  if (auto it = entries.find("cem_elites"); it != entries.end()) {
    cem_elites = static_cast<int>(ToInt("cem_elites", it->second));
  }
  if (auto it = entries.find("cvar_beta"); it != entries.end()) {
    cvar_beta = ToDouble("cvar_beta", it->second);
  }

  for (const auto& [key, entry] : entries) {
    try {
      if (key == "env") {
        // applied above
      } else if (key == "seed") {
        config.gpc.seed = static_cast<std::uint64_t>(ToInt(key, entry));
      } else if (key == "iterations") {
        config.gpc.iterations = static_cast<int>(ToInt(key, entry));
      } else if (key == "num_envs") {
        config.gpc.num_envs = static_cast<int>(ToInt(key, entry));
      } else if (key == "gaussian_samples") {
        config.gpc.gaussian_samples = static_cast<int>(ToInt(key, entry));
      } else if (key == "policy_samples") {
        config.gpc.policy_samples = static_cast<int>(ToInt(key, entry));
      } else if (key == "episode_seconds") {
        config.gpc.episode_seconds = ToDouble(key, entry);
      } else if (key == "sigma") {
        config.gpc.sigma = ToDouble(key, entry);
      } else if (key == "weighting") {
        const std::string& v = entry.value;
        if (v == "mppi") {
          config.gpc.weighting = spc::WeightingFn::Mppi(lambda);
        } else if (v == "ps") {
          config.gpc.weighting = spc::WeightingFn::PredictiveSampling();
        } else if (v == "cem") {
          config.gpc.weighting = spc::WeightingFn::Cem(cem_elites);
        } else if (v == "tsallis") {
          config.gpc.weighting = spc::WeightingFn::Tsallis(lambda, tsallis_r);
        } else {
          throw std::invalid_argument("unknown weighting '" + v + "'");
        }
      } else if (key == "risk") {
        const std::string& v = entry.value;
        if (v == "average") {
          config.gpc.risk = spc::RiskAggregator::Average();
        } else if (v == "worst_case") {
          config.gpc.risk = spc::RiskAggregator::WorstCase();
        } else if (v == "cvar") {
          config.gpc.risk = spc::RiskAggregator::Cvar(cvar_beta);
        } else {
          throw std::invalid_argument("unknown risk aggregator '" + v + "'");
        }
      } else if (key == "num_domains") {
        config.gpc.num_domains = static_cast<int>(ToInt(key, entry));
      } else if (key == "domain_scale") {
        config.gpc.domain_scale = ToDouble(key, entry);
      } else if (key == "epochs") {
        config.gpc.epochs = static_cast<int>(ToInt(key, entry));
      } else if (key == "batch_size") {
        config.gpc.batch_size = static_cast<int>(ToInt(key, entry));
      } else if (key == "learning_rate") {
        config.gpc.learning_rate = ToDouble(key, entry);
      } else if (key == "ode_dt") {
        config.gpc.ode_dt = ToDouble(key, entry);
      } else if (key == "eval_samples") {
        config.gpc.eval_samples = static_cast<int>(ToInt(key, entry));
      } else if (key == "workers") {
        config.gpc.workers = static_cast<int>(ToInt(key, entry));
      } else if (key == "eval_episodes") {
        config.eval_episodes = static_cast<int>(ToInt(key, entry));
      } else if (key == "alpha") {
        config.alpha = ToDouble(key, entry);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(entry.line) + ": " + e.what());
    }
  }

  try {
    config.gpc.Validate();
    if (config.eval_episodes < 1) {
      throw std::invalid_argument("invalid config: eval_episodes must be >= 1");
    }
    if (config.alpha < 0.0 || config.alpha > 1.0) {
      throw std::invalid_argument("invalid config: alpha must be in [0, 1]");
    }
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return config;
}

RunConfig ParseConfigFile(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return ParseConfigText(buffer.str());
}

std::string ResolvedConfigText(const RunConfig& config) {
  const loop::GpcConfig& g = config.gpc;
  std::ostringstream out;
  out << "env = " << g.env_name << "\n";
  out << "seed = " << g.seed << "\n";
  out << "iterations = " << g.iterations << "\n";
  out << "num_envs = " << g.num_envs << "\n";
  out << "gaussian_samples = " << g.gaussian_samples << "\n";
  out << "policy_samples = " << g.policy_samples << "\n";
  out << "episode_seconds = " << Num(g.episode_seconds) << "\n";
  out << "sigma = " << Num(g.sigma) << "\n";
  out << "weighting = " << g.weighting.Name() << "\n";
  out << "lambda = " << Num(g.weighting.lambda) << "\n";
  out << "cem_elites = " << g.weighting.num_elites << "\n";
  out << "tsallis_r = " << Num(g.weighting.r) << "\n";
  out << "risk = " << g.risk.Name() << "\n";
  out << "cvar_beta = " << Num(g.risk.beta) << "\n";
  out << "num_domains = " << g.num_domains << "\n";
  out << "domain_scale = " << Num(g.domain_scale) << "\n";
  out << "epochs = " << g.epochs << "\n";
  out << "batch_size = " << g.batch_size << "\n";
  out << "learning_rate = " << Num(g.learning_rate) << "\n";
  out << "ode_dt = " << Num(g.ode_dt) << "\n";
  out << "eval_samples = " << g.eval_samples << "\n";
  out << "workers = " << g.workers << "\n";
  out << "eval_episodes = " << config.eval_episodes << "\n";
  out << "alpha = " << Num(config.alpha) << "\n";
  return out.str();
}

}  // namespace gpc::cli
