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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gpc/action_sequence.hpp"
#include "gpc/envs.hpp"
#include "gpc/rng.hpp"
#include "gpc/spc.hpp"

namespace {

using namespace gpc;
using namespace gpc::spc;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Brute-force CVaR oracle: minimize z + E[max(c - z, 0)] / (1 - beta) over a
// fine z-grid spanning the cost range.
double CvarGridOracle(const std::vector<double>& costs, double beta) {
  double lo = *std::min_element(costs.begin(), costs.end());
  double hi = *std::max_element(costs.begin(), costs.end());
  double best = kInf;
  const int grid = 200000;
  for (int i = 0; i <= grid; ++i) {
    double z = lo + (hi - lo) * i / grid;
    double tail = 0.0;
    for (double c : costs) tail += std::max(c - z, 0.0);
    tail /= static_cast<double>(costs.size());
    best = std::min(best, z + tail / (1.0 - beta));
  }
  return best;
}

std::vector<double> RandomCosts(int n, Rng& rng) {
  std::vector<double> c(n);
  for (double& x : c) x = rng.Uniform(0.0, 10.0);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Action sequences

TEST_CASE("knot index maps steps to evenly spaced knots") {
  ActionSequence seq = ActionSequence::Zeros(5, 1, 25);
  CHECK(seq.KnotIndex(0) == 0);
  CHECK(seq.KnotIndex(4) == 0);
  CHECK(seq.KnotIndex(5) == 1);
  CHECK(seq.KnotIndex(24) == 4);
  CHECK(seq.KnotIndex(100) == 4);  // clamped past the horizon
  CHECK(seq.KnotStartStep(0) == 0);
  CHECK(seq.KnotStartStep(3) == 15);
  ActionSequence uneven = ActionSequence::Zeros(3, 1, 10);
  // 10 steps over 3 knots: steps 0-3 -> 0, 4-6 -> 1, 7-9 -> 2.
  CHECK(uneven.KnotIndex(3) == 0);
  CHECK(uneven.KnotIndex(4) == 1);
  CHECK(uneven.KnotIndex(7) == 2);
  CHECK(uneven.KnotStartStep(1) == 4);
  CHECK(uneven.KnotStartStep(2) == 7);
}

TEST_CASE("shift advances the plan by one control period") {
  ActionSequence seq = ActionSequence::Zeros(5, 1, 25);
  for (int k = 0; k < 5; ++k) seq.Knot(k)[0] = k;  // 0,1,2,3,4
  ActionSequence shifted = Shift(seq);
  // Each knot picks up the value the old plan held one step later.
  for (int k = 0; k < 5; ++k) {
    int src = std::min(seq.KnotStartStep(k) + 1, 24);
    CHECK(shifted.Knot(k)[0] == seq.AtStep(src)[0]);
  }
  // Shifting by a full knot width moves every value forward one knot.
  ActionSequence by_width = Shift(seq, 5);
  for (int k = 0; k < 4; ++k) CHECK(by_width.Knot(k)[0] == k + 1);
  CHECK(by_width.Knot(4)[0] == 4.0);  // last knot extends
}

TEST_CASE("clamp keeps knots in the unit box") {
  ActionSequence seq = ActionSequence::Zeros(2, 2, 10);
  seq.knots = {-3.0, 0.5, 2.0, -0.25};
  ClampUnit(&seq);
  CHECK(seq.knots == std::vector<double>{-1.0, 0.5, 1.0, -0.25});
}

// ---------------------------------------------------------------------------
// Weighting functions

TEST_CASE("mppi weights are proportional to exp(-cost/lambda)") {
  std::vector<double> w =
      Weight(WeightingFn::Mppi(1.0), std::vector<double>{0.0, std::log(2.0)});
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(0.5));
}

TEST_CASE("predictive sampling selects the argmin") {
  std::vector<double> w = Weight(WeightingFn::PredictiveSampling(),
                                 std::vector<double>{3.0, 1.0, 2.0});
  CHECK(w == std::vector<double>{0.0, 1.0, 0.0});
  // Ties break toward the lowest index.
  w = Weight(WeightingFn::PredictiveSampling(),
             std::vector<double>{2.0, 1.0, 1.0});
  CHECK(w == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("cem weights are elite indicators") {
  std::vector<double> w =
      Weight(WeightingFn::Cem(2), std::vector<double>{5.0, 1.0, 3.0, 4.0});
  CHECK(w == std::vector<double>{0.0, 1.0, 1.0, 0.0});
}

TEST_CASE("tsallis approaches mppi as r approaches 1") {
  Rng rng(30);
  WeightingFn tsallis = WeightingFn::Tsallis(1.0, 1.001);
  WeightingFn mppi = WeightingFn::Mppi(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> costs(8);
    for (double& c : costs) c = rng.Uniform(0.0, 3.0);
    std::vector<double> a = Weight(tsallis, costs);
    std::vector<double> b = Weight(mppi, costs);
    for (std::size_t i = 0; i < costs.size(); ++i) {
      CHECK(std::abs(a[i] - b[i]) < 1e-3);
    }
  }
}

TEST_CASE("weighting handles infinite costs") {
  std::vector<double> costs = {2.0, kInf, 1.0};
  for (const WeightingFn& fn :
       {WeightingFn::Mppi(1.0), WeightingFn::PredictiveSampling(),
        WeightingFn::Cem(3), WeightingFn::Tsallis(1.0, 2.0)}) {
    std::vector<double> w = Weight(fn, costs);
    CHECK(w[1] == 0.0);
    CHECK(w[2] > 0.0);
  }
  CHECK_THROWS(Weight(WeightingFn::PredictiveSampling(),
                      std::vector<double>{kInf, kInf}));
}

TEST_CASE("weighting factories validate parameters") {
  CHECK_THROWS(WeightingFn::Mppi(0.0));
  CHECK_THROWS(WeightingFn::Cem(0));
  CHECK_THROWS(WeightingFn::Tsallis(1.0, 1.0));
  CHECK_THROWS(RiskAggregator::Cvar(1.0));
  CHECK_THROWS(RiskAggregator::Cvar(-0.1));
}

// ---------------------------------------------------------------------------
// Mean update

TEST_CASE("update mean returns the sample carrying all weight") {
  ActionSequence prev = ActionSequence::Zeros(2, 1, 10);
  std::vector<ActionSequence> samples(3, prev);
  samples[0].knots = {0.1, 0.2};
  samples[1].knots = {0.5, -0.5};
  samples[2].knots = {-0.9, 0.9};
  ActionSequence mean =
      UpdateMean(prev, samples, std::vector<double>{0.0, 1.0, 0.0});
  CHECK(mean.knots == samples[1].knots);
}

TEST_CASE("update mean with equal weights is the arithmetic mean") {
  ActionSequence prev = ActionSequence::Zeros(2, 1, 10);
  prev.knots = {0.2, -0.4};
  std::vector<ActionSequence> samples(2, prev);
  samples[0].knots = {0.4, 0.0};
  samples[1].knots = {0.0, -0.2};
  ActionSequence mean =
      UpdateMean(prev, samples, std::vector<double>{0.5, 0.5});
  CHECK(mean.knots[0] == doctest::Approx(0.2));
  CHECK(mean.knots[1] == doctest::Approx(-0.1));
}

TEST_CASE("update mean matches the direct formula") {
  Rng rng(31);
  ActionSequence prev = ActionSequence::Zeros(3, 2, 12);
  for (double& x : prev.knots) x = rng.Uniform(-0.5, 0.5);
  std::vector<ActionSequence> samples;
  std::vector<double> weights;
  for (int i = 0; i < 6; ++i) {
    ActionSequence s = prev;
    for (double& x : s.knots) x = rng.Uniform(-0.8, 0.8);
    samples.push_back(s);
    weights.push_back(rng.Uniform(0.0, 1.0));
  }
  ActionSequence mean = UpdateMean(prev, samples, weights);
  double total = 0.0;
  for (double w : weights) total += w;
  for (std::size_t k = 0; k < prev.knots.size(); ++k) {
    double want = prev.knots[k];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      want += weights[i] * (samples[i].knots[k] - prev.knots[k]) / total;
    }
    CHECK(mean.knots[k] == doctest::Approx(std::clamp(want, -1.0, 1.0))
                               .epsilon(1e-12));
  }
}

// ---------------------------------------------------------------------------
// Proposal sampling

TEST_CASE("proposal collapses onto the mean as sigma vanishes") {
  Rng rng(32);
  ActionSequence prev = ActionSequence::Zeros(4, 1, 20);
  prev.knots = {0.1, -0.2, 0.3, -0.4};
  for (const ActionSequence& s : SampleProposal(prev, 1e-12, 5, rng)) {
    for (std::size_t k = 0; k < prev.knots.size(); ++k) {
      CHECK(s.knots[k] == doctest::Approx(prev.knots[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("proposal is reproducible by seed") {
  ActionSequence prev = ActionSequence::Zeros(4, 1, 20);
  Rng rng_a(33), rng_b(33);
  auto a = SampleProposal(prev, 0.3, 7, rng_a);
  auto b = SampleProposal(prev, 0.3, 7, rng_b);
  for (int i = 0; i < 7; ++i) CHECK(a[i].knots == b[i].knots);
}

TEST_CASE("proposal moments match the gaussian") {
  ActionSequence prev = ActionSequence::Zeros(1, 1, 5);
  Rng rng(34);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (const ActionSequence& s : SampleProposal(prev, 0.3, n, rng)) {
    sum += s.knots[0];
    sum2 += s.knots[0] * s.knots[0];
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 * 0.3 / std::sqrt(static_cast<double>(n)));
  CHECK(var == doctest::Approx(0.09).epsilon(0.05));
}

// ---------------------------------------------------------------------------
// Risk aggregation

TEST_CASE("risk aggregation landmarks") {
  std::vector<double> costs = {1.0, 2.0, 3.0, 4.0};
  CHECK(Aggregate(RiskAggregator::Average(), costs) == doctest::Approx(2.5));
  CHECK(Aggregate(RiskAggregator::WorstCase(), costs) == 4.0);
  CHECK(Aggregate(RiskAggregator::Cvar(0.0), costs) == doctest::Approx(2.5));
  CHECK(Aggregate(RiskAggregator::Cvar(0.5), costs) == doctest::Approx(3.5));
  CHECK(Aggregate(RiskAggregator::Cvar(0.75), costs) == doctest::Approx(4.0));
}

TEST_CASE("cvar matches the variational grid oracle") {
  Rng rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> costs = RandomCosts(4 + trial % 9, rng);
    for (double beta : {0.1, 0.25, 0.5, 0.8}) {
      double got = Aggregate(RiskAggregator::Cvar(beta), costs);
      CHECK(got == doctest::Approx(CvarGridOracle(costs, beta)).epsilon(1e-3));
    }
  }
}

TEST_CASE("cvar is monotone and bracketed by average and worst case") {
  Rng rng(36);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> costs = RandomCosts(2 + trial % 7, rng);
    double avg = Aggregate(RiskAggregator::Average(), costs);
    double worst = Aggregate(RiskAggregator::WorstCase(), costs);
    double last = avg;
    for (double beta : {0.0, 0.2, 0.4, 0.6, 0.8, 0.95}) {
      double c = Aggregate(RiskAggregator::Cvar(beta), costs);
      CHECK(c >= last - 1e-12);
      CHECK(c >= avg - 1e-12);
      CHECK(c <= worst + 1e-12);
      last = c;
    }
  }
}

// ---------------------------------------------------------------------------
// Full SPC step

TEST_CASE("spc step with one tight sample keeps the mean") {
  auto env = envs::MakeEnv("pendulum");
  SpcContext ctx;
  ctx.env = env.get();
  ctx.domains = {env->NominalParams()};
  ctx.sigma = 1e-12;
  ctx.num_gaussian_samples = 1;
  ActionSequence prev = ActionSequence::Zeros(5, 1, 25);
  prev.knots = {0.3, -0.1, 0.2, 0.0, -0.3};
  Rng rng(37);
  envs::EnvState state{{1.0}, {0.0}, 0};
  auto [mean, batch] = SpcStep(ctx, prev, state, {}, rng);
  for (std::size_t k = 0; k < prev.knots.size(); ++k) {
    CHECK(mean.knots[k] == doctest::Approx(prev.knots[k]).epsilon(1e-9));
  }
  CHECK(batch.sequences.size() == 1);
  CHECK(batch.best_index == 0);
}

TEST_CASE("predictive sampling step returns the lowest-cost sample") {
  auto env = envs::MakeEnv("pendulum");
  SpcContext ctx;
  ctx.env = env.get();
  ctx.domains = {env->NominalParams()};
  ctx.weighting = WeightingFn::PredictiveSampling();
  ctx.sigma = 0.3;
  ctx.num_gaussian_samples = 8;
  ActionSequence prev = ActionSequence::Zeros(5, 1, 25);
  Rng rng(38);
  envs::EnvState state{{2.0}, {0.0}, 0};
  auto [mean, batch] = SpcStep(ctx, prev, state, {}, rng);
  CHECK(mean.knots == batch.sequences[batch.best_index].knots);
  CHECK(batch.aggregated[batch.best_index] ==
        *std::min_element(batch.aggregated.begin(), batch.aggregated.end()));
}

TEST_CASE("mppi step equals prev plus sigma^2 times the score estimate") {
  auto env = envs::MakeEnv("pendulum");
  SpcContext ctx;
  ctx.env = env.get();
  ctx.domains = {env->NominalParams()};
  ctx.weighting = WeightingFn::Mppi(5.0);
  ctx.sigma = 0.2;
  ctx.num_gaussian_samples = 16;
  ActionSequence prev = ActionSequence::Zeros(5, 1, 25);
  Rng rng(39);
  envs::EnvState state{{2.5}, {0.5}, 0};
  auto [mean, batch] = SpcStep(ctx, prev, state, {}, rng);

  std::vector<double> weights = Weight(ctx.weighting, batch.aggregated);
  std::vector<std::vector<double>> flat;
  for (const ActionSequence& s : batch.sequences) flat.push_back(s.knots);
  std::vector<double> score =
      ScoreFromSamples(prev.knots, flat, weights, ctx.sigma);
  for (std::size_t k = 0; k < prev.knots.size(); ++k) {
    double stepped = prev.knots[k] + ctx.sigma * ctx.sigma * score[k];
    CHECK(mean.knots[k] == doctest::Approx(stepped).epsilon(1e-12));
  }
}

TEST_CASE("spc step counts every rollout") {
  auto env = envs::MakeEnv("pendulum");
  envs::RolloutCounter counter{0};
  SpcContext ctx;
  ctx.env = env.get();
  ctx.domains = {env->NominalParams(), env->NominalParams(),
                 env->NominalParams()};
  ctx.num_gaussian_samples = 4;
  ctx.counter = &counter;
  ActionSequence prev = ActionSequence::Zeros(5, 1, 25);
  std::vector<ActionSequence> extras(2, prev);
  Rng rng(40);
  envs::EnvState state{{1.0}, {0.0}, 0};
  auto [mean, batch] = SpcStep(ctx, prev, state, extras, rng);
  CHECK(counter.load() == (4 + 2) * 3);
  CHECK(batch.sources[0] == SampleSource::kGaussian);
  CHECK(batch.sources[4] == SampleSource::kPolicy);
  CHECK(batch.sources[5] == SampleSource::kPolicy);
}

// ---------------------------------------------------------------------------
// Score estimation

TEST_CASE("score of a constant weight function vanishes") {
  Rng rng(41);
  std::vector<double> mean = {0.4};
  std::vector<double> score = EstimateScore(
      [](std::span<const double>) { return 1.0; }, mean, 1.0, 100000, rng);
  CHECK(std::abs(score[0]) < 4.0 / std::sqrt(100000.0));
}

TEST_CASE("score matches the analytic gaussian convolution") {
  // g(U) = N(U; mu0, s^2). The noised density is N(U; mu0, s^2 + sigma^2),
  // whose score at U is -(U - mu0) / (s^2 + sigma^2).
  Rng rng(42);
  const double mu0 = 0.7, s = 0.5, sigma = 0.3;
  auto g = [&](std::span<const double> u) {
    double d = u[0] - mu0;
    return std::exp(-0.5 * d * d / (s * s));
  };
  const double u_eval = 0.2;
  std::vector<double> mean = {u_eval};
  std::vector<double> score = EstimateScore(g, mean, sigma, 300000, rng);
  double analytic = -(u_eval - mu0) / (s * s + sigma * sigma);
  CHECK(score[0] == doctest::Approx(analytic).epsilon(0.05));

  // At the mode the score is zero up to Monte-Carlo error.
  std::vector<double> at_mode = {mu0};
  score = EstimateScore(g, at_mode, sigma, 300000, rng);
  CHECK(std::abs(score[0]) < 0.05);
}

TEST_CASE("score estimator validates inputs") {
  Rng rng(43);
  std::vector<double> mean = {0.0};
  CHECK_THROWS(EstimateScore([](std::span<const double>) { return 1.0; },
                             mean, 0.3, 1, rng));
  CHECK_THROWS(ScoreFromSamples(mean, {{0.1}, {0.2}},
                                std::vector<double>{0.0, 0.0}, 0.3));
}
