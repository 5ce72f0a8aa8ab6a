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

#include "gpc/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gpc/parallel.hpp"

namespace gpc::flow {

namespace {

constexpr double kCosineGamma = 2.0;

std::vector<double> NetInput(const FlowModel& model,
                             std::span<const double> knots_flat,
                             std::span<const double> obs_norm, double t) {
  std::vector<double> input;
  input.reserve(knots_flat.size() + obs_norm.size() + 1);
  input.insert(input.end(), knots_flat.begin(), knots_flat.end());
  input.insert(input.end(), obs_norm.begin(), obs_norm.end());
  input.push_back(t);
  return input;
}

}  // namespace

FlowModel MakeFlowModel(const envs::EnvSpec& spec, Rng& rng) {
  FlowModel model;
  model.num_knots = spec.num_knots;
  model.action_dim = spec.action_dim;
  model.obs_dim = spec.obs_dim;
  model.horizon_steps = spec.HorizonSteps();
  int flat = model.FlatDim();
  model.net = net::MakeMlp({flat + spec.obs_dim + 1, 64, 64, flat},
                           net::Activation::kSwish, rng);
  model.obs_mean.assign(spec.obs_dim, 0.0);
  model.obs_std.assign(spec.obs_dim, 1.0);
  return model;
}

std::vector<double> NormalizeObs(const FlowModel& model,
                                 std::span<const double> obs) {
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out[i] = (obs[i] - model.obs_mean[i]) / model.obs_std[i];
  }
  return out;
}

std::vector<double> DenormalizeObs(const FlowModel& model,
                                   std::span<const double> obs) {
  std::vector<double> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out[i] = obs[i] * model.obs_std[i] + model.obs_mean[i];
  }
  return out;
}

void RecomputeNormalizer(FlowModel* model,
                         const std::vector<TrainRecord>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  int dim = model->obs_dim;
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const TrainRecord& rec : dataset) {
    for (int i = 0; i < dim; ++i) mean[i] += rec.observation[i];
  }
  for (int i = 0; i < dim; ++i) mean[i] /= static_cast<double>(dataset.size());
  for (const TrainRecord& rec : dataset) {
    for (int i = 0; i < dim; ++i) {
      double d = rec.observation[i] - mean[i];
      var[i] += d * d;
    }
  }
  model->obs_mean = mean;
  for (int i = 0; i < dim; ++i) {
    model->obs_std[i] =
        std::max(std::sqrt(var[i] / static_cast<double>(dataset.size())), 1e-6);
  }
}

double CosineWeight(std::span<const double> target,
                    std::span<const double> previous,
                    std::span<const double> noise) {
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    double a = target[i] - previous[i];
    double b = target[i] - noise[i];
    aa += a * a;
    bb += b * b;
    ab += a * b;
  }
  if (aa < 1e-24 || bb < 1e-24) return 1.0;  // no directional information
  double cosine = ab / (std::sqrt(aa) * std::sqrt(bb));
  return std::exp(-kCosineGamma * (1.0 - cosine));
}

LossResult FlowLoss(const FlowModel& model, const TrainRecord& record,
                    std::span<const double> noise, double t) {
  int flat = model.FlatDim();
  if (static_cast<int>(noise.size()) != flat ||
      static_cast<int>(record.target.size()) != flat) {
    throw std::invalid_argument("flow dimension mismatch");
  }
  double w = CosineWeight(record.target, record.previous, noise);

  std::vector<double> point(flat);
  for (int i = 0; i < flat; ++i) {
    point[i] = t * record.target[i] + (1.0 - t) * noise[i];
  }
  std::vector<double> obs_norm = NormalizeObs(model, record.observation);
  std::vector<double> input = NetInput(model, point, obs_norm, t);
  std::vector<double> velocity = net::Forward(model.net, input);

  std::vector<double> residual(flat);
  double sq = 0.0;
  for (int i = 0; i < flat; ++i) {
    residual[i] = velocity[i] - (record.target[i] - noise[i]);
    sq += residual[i] * residual[i];
  }
  std::vector<double> out_grad(flat);
  for (int i = 0; i < flat; ++i) out_grad[i] = 2.0 * w * residual[i];

  LossResult result;
  result.loss = w * sq;
  result.grads = net::Backward(model.net, input, out_grad).first;
  return result;
}

std::vector<double> Fit(FlowModel* model,
                        const std::vector<TrainRecord>& dataset,
                        const FitOptions& options, Rng& rng) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  if (options.epochs == 0) return {};
  RecomputeNormalizer(model, dataset);

  net::AdamState adam = net::MakeAdam(model->net, options.learning_rate);
  int flat = model->FlatDim();
  std::size_t n = dataset.size();
  std::vector<double> epoch_losses;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates shuffle driven by the shared stream.
    for (std::size_t i = n - 1; i > 0; --i) {
      std::size_t j = rng.NextU64() % (i + 1);
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      std::size_t end = std::min(n, start + options.batch_size);
      std::size_t batch = end - start;

      // Draw (t, noise) probes sequentially so the stream position does
      // not depend on worker count.
      std::vector<double> ts(batch);
      std::vector<std::vector<double>> noises(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        ts[b] = rng.Uniform();
        noises[b].resize(flat);
        for (double& x : noises[b]) x = rng.Gaussian();
      }

      std::vector<LossResult> results(batch);
      ParallelFor(batch, options.workers, [&](std::size_t b) {
        results[b] = FlowLoss(*model, dataset[order[start + b]], noises[b],
                              ts[b]);
      });

      net::MlpParams grad = net::ZerosLike(model->net);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {  // fixed reduction order
        net::Axpy(1.0 / static_cast<double>(batch), results[b].grads, &grad);
        batch_loss += results[b].loss;
      }
      epoch_loss += batch_loss;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("non-finite flow loss during fit");
      }
      net::AdamStep(&model->net, grad, &adam);
    }
    epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return epoch_losses;
}

ActionSequence Sample(const FlowModel& model, std::span<const double> obs,
                      std::vector<double> u0, double dt) {
  int flat = model.FlatDim();
  if (static_cast<int>(u0.size()) != flat) {
    throw std::invalid_argument("flow sample dimension mismatch");
  }
  if (static_cast<int>(obs.size()) != model.obs_dim) {
    throw std::invalid_argument("flow observation dimension mismatch");
  }
  double steps_exact = 1.0 / dt;
  int steps = static_cast<int>(std::lround(steps_exact));
  if (steps < 1 || std::abs(steps_exact - steps) > 1e-9) {
    throw std::invalid_argument("ODE step size must evenly divide 1");
  }
  std::vector<double> obs_norm = NormalizeObs(model, obs);
  for (int s = 0; s < steps; ++s) {
    double t = s * dt;
    std::vector<double> input = NetInput(model, u0, obs_norm, t);
    std::vector<double> v = net::Forward(model.net, input);
    for (int i = 0; i < flat; ++i) u0[i] += dt * v[i];
  }
  ActionSequence seq = ActionSequence::Zeros(model.num_knots, model.action_dim,
                                             model.horizon_steps);
  seq.knots = std::move(u0);
  ClampUnit(&seq);
  return seq;
}

std::vector<double> WarmStartNoise(std::span<const double> prev_flat,
                                   double alpha, Rng& rng) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("warm-start level must be in [0, 1]");
  }
  std::vector<double> out(prev_flat.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - alpha) * rng.Gaussian() + alpha * prev_flat[i];
  }
  return out;
}

}  // namespace gpc::flow
