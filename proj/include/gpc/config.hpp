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

#ifndef GPCLAB_CONFIG_HPP_
#define GPCLAB_CONFIG_HPP_

#include <stdexcept>
#include <string>

#include "gpc/gpc.hpp"

namespace gpc::cli {

// Raised for malformed or out-of-range run configurations; the CLI maps it
// to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key-value run configuration: training options plus evaluation
// defaults. Unknown and duplicate keys are rejected with line numbers.
struct RunConfig {
  loop::GpcConfig gpc;
  int eval_episodes = 100;
  double alpha = 1.0;
};

RunConfig ParseConfigText(const std::string& text);
RunConfig ParseConfigFile(const std::string& path);

// Every key with the value actually in effect, parseable by ParseConfigText.
std::string ResolvedConfigText(const RunConfig& config);

}  // namespace gpc::cli

#endif  // GPCLAB_CONFIG_HPP_
