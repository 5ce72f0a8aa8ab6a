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

#ifndef GPCLAB_SPC_HPP_
#define GPCLAB_SPC_HPP_

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gpc/action_sequence.hpp"
#include "gpc/envs.hpp"
#include "gpc/rng.hpp"

namespace gpc::spc {

// Per-sample weighting function distinguishing the SPC variants.
struct WeightingFn {
  enum class Kind { kMppi, kPredictiveSampling, kCem, kTsallis };
  Kind kind = Kind::kPredictiveSampling;
  double lambda = 1.0;  // MPPI / Tsallis temperature
  int num_elites = 1;   // CEM
  double r = 2.0;       // Tsallis exponent, > 1

  static WeightingFn Mppi(double lambda);
  static WeightingFn PredictiveSampling();
  static WeightingFn Cem(int num_elites);
  static WeightingFn Tsallis(double lambda, double r);

  std::string Name() const;
};

// Domain-randomization cost aggregation across rollout domains.
struct RiskAggregator {
  enum class Kind { kAverage, kWorstCase, kCvar };
  Kind kind = Kind::kAverage;
  double beta = 0.0;  // CVaR risk level in [0, 1)

  static RiskAggregator Average();
  static RiskAggregator WorstCase();
  static RiskAggregator Cvar(double beta);

  std::string Name() const;
};

enum class SampleSource { kGaussian, kPolicy };

// Everything one SPC step produced: the candidate plans, their per-domain
// and aggregated costs, and where each candidate came from.
struct RolloutBatch {
  std::vector<ActionSequence> sequences;
  std::vector<std::vector<double>> domain_costs;  // [sample][domain]
  std::vector<double> aggregated;
  std::vector<SampleSource> sources;
  int best_index = -1;  // argmin of aggregated costs
};

// Non-negative weights for the mean update; at least one must be positive.
// MPPI and Tsallis subtract the minimum cost before exponentiation, which
// is neutral after normalization. Throws if every cost is infinite.
std::vector<double> Weight(const WeightingFn& fn, std::span<const double> costs);

// Weighted mean update in knot space, clamped to [-1, 1].
ActionSequence UpdateMean(const ActionSequence& prev,
                          const std::vector<ActionSequence>& samples,
                          std::span<const double> weights);

// n i.i.d. draws from N(prev, sigma^2 I) in normalized knot space, clamped.
std::vector<ActionSequence> SampleProposal(const ActionSequence& prev,
                                           double sigma, int n, Rng& rng);

// Aggregate per-domain costs into a single scalar.
double Aggregate(const RiskAggregator& agg, std::span<const double> domain_costs);

struct SpcContext {
  const envs::Env* env = nullptr;
  std::vector<envs::DomainParams> domains;  // at least one
  WeightingFn weighting;
  RiskAggregator risk;
  double sigma = 0.3;
  int num_gaussian_samples = 8;
  int workers = 1;
  envs::RolloutCounter* counter = nullptr;
};

// One full SPC step: propose, roll out across all domains, aggregate,
// reweight, and move the mean. extra_samples (e.g. policy draws) join the
// Gaussian proposals and are tagged accordingly.
std::pair<ActionSequence, RolloutBatch> SpcStep(
    const SpcContext& ctx, const ActionSequence& prev,
    const envs::EnvState& state,
    const std::vector<ActionSequence>& extra_samples, Rng& rng);

// Monte-Carlo score of the noised target density exp-weighted by g, from
// already-drawn samples and weights sharing the proposal N(U, sigma^2 I):
//   (1/sigma^2) * sum_i w_i (U_i - U) / sum_i w_i.
std::vector<double> ScoreFromSamples(std::span<const double> mean,
                                     const std::vector<std::vector<double>>& samples,
                                     std::span<const double> weights,
                                     double sigma);

// Same estimator with fresh Gaussian draws and weights g(U_i).
std::vector<double> EstimateScore(
    const std::function<double(std::span<const double>)>& g,
    std::span<const double> mean, double sigma, int n_samples, Rng& rng);

}  // namespace gpc::spc

#endif  // GPCLAB_SPC_HPP_
