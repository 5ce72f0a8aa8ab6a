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

#ifndef GPCLAB_FLOW_HPP_
#define GPCLAB_FLOW_HPP_

#include <span>
#include <vector>

#include "gpc/action_sequence.hpp"
#include "gpc/envs.hpp"
#include "gpc/net.hpp"
#include "gpc/rng.hpp"

namespace gpc::flow {

// Conditional flow-matching policy. The network maps
// [flat knots, normalized observation, flow time t] -> knot velocity.
struct FlowModel {
  net::MlpParams net;
  std::vector<double> obs_mean;
  std::vector<double> obs_std;  // components >= 1e-6
  int num_knots = 0;
  int action_dim = 0;
  int obs_dim = 0;
  int horizon_steps = 0;

  int FlatDim() const { return num_knots * action_dim; }
};

// Fresh model for an environment: 2 hidden layers of width 64, swish.
FlowModel MakeFlowModel(const envs::EnvSpec& spec, Rng& rng);

// One SPC step's worth of training data.
struct TrainRecord {
  std::vector<double> observation;  // y_{k-1}
  std::vector<double> target;       // flat updated mean U_k
  std::vector<double> previous;     // flat proposal mean U_{k-1}
  int env_id = 0;
  int step_index = 0;
};

std::vector<double> NormalizeObs(const FlowModel& model,
                                 std::span<const double> obs);
std::vector<double> DenormalizeObs(const FlowModel& model,
                                   std::span<const double> obs);
void RecomputeNormalizer(FlowModel* model,
                         const std::vector<TrainRecord>& dataset);

// Cosine-similarity data weight: emphasizes noise draws whose flow target
// direction agrees with the SPC update direction. Degenerate (zero-norm)
// inputs get weight 1. gamma = 2 fixes the decay rate.
double CosineWeight(std::span<const double> target,
                    std::span<const double> previous,
                    std::span<const double> noise);

struct LossResult {
  double loss = 0.0;
  net::MlpParams grads;
};

// Weighted conditional flow-matching loss at one (record, noise, t) probe,
// with parameter gradients.
LossResult FlowLoss(const FlowModel& model, const TrainRecord& record,
                    std::span<const double> noise, double t);

struct FitOptions {
  int epochs = 10;
  int batch_size = 128;
  double learning_rate = 1e-3;
  int workers = 1;
};

// Minimizes the expected flow-matching loss over the dataset with Adam.
// Fresh (t, noise) pairs are drawn per record per epoch. Returns the mean
// loss per epoch. epochs == 0 leaves the model untouched.
std::vector<double> Fit(FlowModel* model,
                        const std::vector<TrainRecord>& dataset,
                        const FitOptions& options, Rng& rng);

// Explicit Euler integration of the learned field from t = 0 to 1 starting
// at u0; dt must evenly divide 1. Output clamped to [-1, 1] knot space.
ActionSequence Sample(const FlowModel& model, std::span<const double> obs,
                      std::vector<double> u0, double dt);

// Warm-started flow initialization: (1 - alpha) * N(0, I) + alpha * prev.
// Callers pass an already time-shifted previous plan.
std::vector<double> WarmStartNoise(std::span<const double> prev_flat,
                                   double alpha, Rng& rng);

}  // namespace gpc::flow

#endif  // GPCLAB_FLOW_HPP_
