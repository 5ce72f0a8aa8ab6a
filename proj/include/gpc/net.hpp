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

#ifndef GPCLAB_NET_HPP_
#define GPCLAB_NET_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gpc/rng.hpp"

namespace gpc::net {

enum class Activation { kSwish, kTanh, kRelu };

std::string ActivationName(Activation a);
Activation ActivationFromName(const std::string& name);

// Dense multi-layer perceptron. Hidden layers use `activation`, the output
// layer is identity. Weight matrices are row-major (out x in).
struct MlpParams {
  std::vector<int> layer_sizes;                 // input, hidden..., output
  std::vector<std::vector<double>> weights;     // one matrix per layer
  std::vector<std::vector<double>> biases;      // one vector per layer
  Activation activation = Activation::kSwish;

  int InputSize() const { return layer_sizes.front(); }
  int OutputSize() const { return layer_sizes.back(); }
  int NumLayers() const { return static_cast<int>(weights.size()); }
  std::size_t NumParams() const;
};

// Glorot-uniform weights, zero biases.
MlpParams MakeMlp(const std::vector<int>& layer_sizes, Activation activation,
                  Rng& rng);

// Same shapes as `like`, all values zero. Used for gradients and moments.
MlpParams ZerosLike(const MlpParams& like);

// dst += scale * src (parameter-wise).
void Axpy(double scale, const MlpParams& src, MlpParams* dst);

bool AllFinite(const MlpParams& params);

std::vector<double> Forward(const MlpParams& params,
                            std::span<const double> input);

// Reverse-mode gradients of <output, output_gradient> with respect to the
// parameters and the input.
std::pair<MlpParams, std::vector<double>> Backward(
    const MlpParams& params, std::span<const double> input,
    std::span<const double> output_gradient);

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState MakeAdam(const MlpParams& params, double learning_rate);

// Bias-corrected Adam update. Throws on non-finite gradients so a bad
// training step aborts cleanly instead of poisoning the parameters.
void AdamStep(MlpParams* params, const MlpParams& grads, AdamState* state);

}  // namespace gpc::net

#endif  // GPCLAB_NET_HPP_
