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

#ifndef GPCLAB_CHECKPOINT_HPP_
#define GPCLAB_CHECKPOINT_HPP_

#include <string>
#include <vector>

#include "gpc/gpc.hpp"

namespace gpc::cli {

// Self-describing JSON checkpoint: environment spec snapshot, flow model
// parameters (row-major flat arrays), the training configuration, and the
// per-iteration training statistics. The embedded content hash covers
// everything except the timestamp.
struct Checkpoint {
  int format_version = 1;
  std::string env_name;
  envs::EnvSpec spec;
  flow::FlowModel model;
  loop::GpcConfig config;
  std::vector<loop::IterationStats> stats;
  std::string timestamp;  // ISO 8601, informational only
};

// Hex FNV-1a 64 over the canonical payload serialization.
std::string CheckpointHash(const Checkpoint& checkpoint);

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);

// Throws std::runtime_error on parse failure or hash mismatch.
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace gpc::cli

#endif  // GPCLAB_CHECKPOINT_HPP_
