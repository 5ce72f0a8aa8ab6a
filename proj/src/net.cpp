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

#include "gpc/net.hpp"

#include <cmath>
#include <stdexcept>

namespace gpc::net {

namespace {

double Activate(Activation a, double x) {
  switch (a) {
    case Activation::kSwish:
      return x / (1.0 + std::exp(-x));
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

// Derivative with respect to the pre-activation value.
double ActivateGrad(Activation a, double x) {
  switch (a) {
    case Activation::kSwish: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return s + x * s * (1.0 - s);
    }
    case Activation::kTanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void CheckShapes(const MlpParams& params, std::size_t input_size) {
  if (params.layer_sizes.size() < 2) {
    throw std::invalid_argument("MlpParams needs at least input and output");
  }
  if (input_size != static_cast<std::size_t>(params.InputSize())) {
    throw std::invalid_argument("MLP input dimension mismatch");
  }
}

}  // namespace

std::string ActivationName(Activation a) {
  switch (a) {
    case Activation::kSwish:
      return "swish";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "swish";
}

Activation ActivationFromName(const std::string& name) {
  if (name == "swish") return Activation::kSwish;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation: " + name);
}

std::size_t MlpParams::NumParams() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + biases[l].size();
  }
  return n;
}

MlpParams MakeMlp(const std::vector<int>& layer_sizes, Activation activation,
                  Rng& rng) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("need at least input and output layer sizes");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
  MlpParams params;
  params.layer_sizes = layer_sizes;
  params.activation = activation;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int fan_in = layer_sizes[l];
    int fan_out = layer_sizes[l + 1];
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
    for (double& x : w) x = rng.Uniform(-bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(fan_out, 0.0);
  }
  return params;
}

MlpParams ZerosLike(const MlpParams& like) {
  MlpParams out;
  out.layer_sizes = like.layer_sizes;
  out.activation = like.activation;
  for (std::size_t l = 0; l < like.weights.size(); ++l) {
    out.weights.emplace_back(like.weights[l].size(), 0.0);
    out.biases.emplace_back(like.biases[l].size(), 0.0);
  }
  return out;
}

void Axpy(double scale, const MlpParams& src, MlpParams* dst) {
  for (std::size_t l = 0; l < src.weights.size(); ++l) {
    for (std::size_t i = 0; i < src.weights[l].size(); ++i) {
      dst->weights[l][i] += scale * src.weights[l][i];
    }
    for (std::size_t i = 0; i < src.biases[l].size(); ++i) {
      dst->biases[l][i] += scale * src.biases[l][i];
    }
  }
}

bool AllFinite(const MlpParams& params) {
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    for (double x : params.weights[l]) {
      if (!std::isfinite(x)) return false;
    }
    for (double x : params.biases[l]) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

std::vector<double> Forward(const MlpParams& params,
                            std::span<const double> input) {
  CheckShapes(params, input.size());
  std::vector<double> act(input.begin(), input.end());
  int num_layers = params.NumLayers();
  for (int l = 0; l < num_layers; ++l) {
    int in = params.layer_sizes[l];
    int out = params.layer_sizes[l + 1];
    const double* w = params.weights[l].data();
    std::vector<double> next(out);
    for (int j = 0; j < out; ++j) {
      double z = params.biases[l][j];
      const double* row = w + static_cast<std::size_t>(j) * in;
      for (int i = 0; i < in; ++i) z += row[i] * act[i];
      next[j] = (l + 1 == num_layers) ? z : Activate(params.activation, z);
    }
    act = std::move(next);
  }
  return act;
}

std::pair<MlpParams, std::vector<double>> Backward(
    const MlpParams& params, std::span<const double> input,
    std::span<const double> output_gradient) {
  CheckShapes(params, input.size());
  if (output_gradient.size() !=
      static_cast<std::size_t>(params.OutputSize())) {
    throw std::invalid_argument("MLP output gradient dimension mismatch");
  }
  int num_layers = params.NumLayers();

  // Forward pass keeping pre-activations and activations per layer.
  std::vector<std::vector<double>> activations;  // activations[0] = input
  std::vector<std::vector<double>> preacts;      // per layer
  activations.emplace_back(input.begin(), input.end());
  for (int l = 0; l < num_layers; ++l) {
    int in = params.layer_sizes[l];
    int out = params.layer_sizes[l + 1];
    const double* w = params.weights[l].data();
    std::vector<double> z(out);
    for (int j = 0; j < out; ++j) {
      double s = params.biases[l][j];
      const double* row = w + static_cast<std::size_t>(j) * in;
      for (int i = 0; i < in; ++i) s += row[i] * activations[l][i];
      z[j] = s;
    }
    std::vector<double> a(out);
    for (int j = 0; j < out; ++j) {
      a[j] = (l + 1 == num_layers) ? z[j] : Activate(params.activation, z[j]);
    }
    preacts.push_back(std::move(z));
    activations.push_back(std::move(a));
  }

  MlpParams grads = ZerosLike(params);
  std::vector<double> delta(output_gradient.begin(), output_gradient.end());
  for (int l = num_layers - 1; l >= 0; --l) {
    int in = params.layer_sizes[l];
    int out = params.layer_sizes[l + 1];
    if (l + 1 < num_layers) {
      for (int j = 0; j < out; ++j) {
        delta[j] *= ActivateGrad(params.activation, preacts[l][j]);
      }
    }
    double* gw = grads.weights[l].data();
    const double* w = params.weights[l].data();
    for (int j = 0; j < out; ++j) {
      grads.biases[l][j] = delta[j];
      double* grow = gw + static_cast<std::size_t>(j) * in;
      for (int i = 0; i < in; ++i) grow[i] = delta[j] * activations[l][i];
    }
    std::vector<double> prev(in, 0.0);
    for (int j = 0; j < out; ++j) {
      const double* row = w + static_cast<std::size_t>(j) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * delta[j];
    }
    delta = std::move(prev);
  }
  return {std::move(grads), std::move(delta)};
}

AdamState MakeAdam(const MlpParams& params, double learning_rate) {
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive");
  }
  AdamState state;
  state.first_moment = ZerosLike(params);
  state.second_moment = ZerosLike(params);
  state.learning_rate = learning_rate;
  return state;
}

void AdamStep(MlpParams* params, const MlpParams& grads, AdamState* state) {
  if (!AllFinite(grads)) {
    throw std::runtime_error("non-finite gradient in Adam update");
  }
  state->step_count += 1;
  double t = static_cast<double>(state->step_count);
  double bc1 = 1.0 - std::pow(state->beta1, t);
  double bc2 = 1.0 - std::pow(state->beta2, t);
  auto update = [&](std::vector<double>& p, std::vector<double>& m,
                    std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state->beta1 * m[i] + (1.0 - state->beta1) * g[i];
      v[i] = state->beta2 * v[i] + (1.0 - state->beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= state->learning_rate * mhat / (std::sqrt(vhat) + state->epsilon);
    }
  };
  for (std::size_t l = 0; l < params->weights.size(); ++l) {
    update(params->weights[l], state->first_moment.weights[l],
           state->second_moment.weights[l], grads.weights[l]);
    update(params->biases[l], state->first_moment.biases[l],
           state->second_moment.biases[l], grads.biases[l]);
  }
}

}  // namespace gpc::net
