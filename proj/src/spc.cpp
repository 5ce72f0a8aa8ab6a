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

#include "gpc/spc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gpc/parallel.hpp"

namespace gpc::spc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

WeightingFn WeightingFn::Mppi(double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("MPPI lambda must be > 0");
  return {Kind::kMppi, lambda, 1, 2.0};
}
WeightingFn WeightingFn::PredictiveSampling() {
  return {Kind::kPredictiveSampling, 1.0, 1, 2.0};
}
WeightingFn WeightingFn::Cem(int num_elites) {
  if (num_elites < 1) throw std::invalid_argument("CEM needs >= 1 elite");
  return {Kind::kCem, 1.0, num_elites, 2.0};
}
WeightingFn WeightingFn::Tsallis(double lambda, double r) {
  if (lambda <= 0.0 || r <= 1.0) {
    throw std::invalid_argument("Tsallis requires lambda > 0 and r > 1");
  }
  return {Kind::kTsallis, lambda, 1, r};
}

std::string WeightingFn::Name() const {
  switch (kind) {
    case Kind::kMppi:
      return "mppi";
    case Kind::kPredictiveSampling:
      return "ps";
    case Kind::kCem:
      return "cem";
    case Kind::kTsallis:
      return "tsallis";
  }
  return "ps";
}

RiskAggregator RiskAggregator::Average() { return {Kind::kAverage, 0.0}; }
RiskAggregator RiskAggregator::WorstCase() { return {Kind::kWorstCase, 0.0}; }
RiskAggregator RiskAggregator::Cvar(double beta) {
  if (beta < 0.0 || beta >= 1.0) {
    throw std::invalid_argument("CVaR beta must be in [0, 1)");
  }
  return {Kind::kCvar, beta};
}

std::string RiskAggregator::Name() const {
  switch (kind) {
    case Kind::kAverage:
      return "average";
    case Kind::kWorstCase:
      return "worst_case";
    case Kind::kCvar:
      return "cvar";
  }
  return "average";
}

std::vector<double> Weight(const WeightingFn& fn,
                           std::span<const double> costs) {
  std::size_t n = costs.size();
  if (n == 0) throw std::invalid_argument("empty cost vector");
  double min_cost = kInf;
  for (double c : costs) min_cost = std::min(min_cost, c);
  if (!std::isfinite(min_cost)) {
    throw std::runtime_error("no valid rollout: all costs infinite");
  }

  std::vector<double> w(n, 0.0);
  switch (fn.kind) {
    case WeightingFn::Kind::kMppi:
      for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::isfinite(costs[i])
                   ? std::exp(-(costs[i] - min_cost) / fn.lambda)
                   : 0.0;
      }
      break;
    case WeightingFn::Kind::kPredictiveSampling: {
      // Ties broken by lowest index.
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (costs[i] < costs[best]) best = i;
      }
      w[best] = 1.0;
      break;
    }
    case WeightingFn::Kind::kCem: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                       std::size_t b) {
        return costs[a] < costs[b];
      });
      int elites = std::min<int>(fn.num_elites, static_cast<int>(n));
      for (int e = 0; e < elites; ++e) {
        if (!std::isfinite(costs[order[e]])) break;  // skip diverged samples
        w[order[e]] = 1.0;
      }
      break;
    }
    case WeightingFn::Kind::kTsallis:
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(costs[i])) continue;
        double base = 1.0 - (fn.r - 1.0) * (costs[i] - min_cost) / fn.lambda;
        w[i] = base > 0.0 ? std::pow(base, 1.0 / (fn.r - 1.0)) : 0.0;
      }
      break;
  }
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) {
    throw std::runtime_error("no valid rollout: all weights zero");
  }
  return w;
}

ActionSequence UpdateMean(const ActionSequence& prev,
                          const std::vector<ActionSequence>& samples,
                          std::span<const double> weights) {
  if (samples.size() != weights.size()) {
    throw std::invalid_argument("samples/weights size mismatch");
  }
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::runtime_error("zero total weight");
  ActionSequence out = prev;
  for (std::size_t k = 0; k < out.knots.size(); ++k) {
    double delta = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      delta += weights[i] * (samples[i].knots[k] - prev.knots[k]);
    }
    out.knots[k] = prev.knots[k] + delta / total;
  }
  ClampUnit(&out);
  return out;
}

std::vector<ActionSequence> SampleProposal(const ActionSequence& prev,
                                           double sigma, int n, Rng& rng) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
  std::vector<ActionSequence> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    ActionSequence seq = prev;
    for (double& x : seq.knots) x += sigma * rng.Gaussian();
    ClampUnit(&seq);
    out.push_back(std::move(seq));
  }
  return out;
}

double Aggregate(const RiskAggregator& agg,
                 std::span<const double> domain_costs) {
  std::size_t n = domain_costs.size();
  if (n == 0) throw std::invalid_argument("empty domain cost vector");
  switch (agg.kind) {
    case RiskAggregator::Kind::kAverage:
      return std::accumulate(domain_costs.begin(), domain_costs.end(), 0.0) /
             static_cast<double>(n);
    case RiskAggregator::Kind::kWorstCase:
      return *std::max_element(domain_costs.begin(), domain_costs.end());
    case RiskAggregator::Kind::kCvar: {
      // Exact CVaR of the empirical distribution: mean of the worst
      // (1 - beta) probability mass, with the boundary atom taken
      // fractionally.
      std::vector<double> sorted(domain_costs.begin(), domain_costs.end());
      std::sort(sorted.begin(), sorted.end(), std::greater<double>());
      double tail = 1.0 - agg.beta;
      double atom = 1.0 / static_cast<double>(n);
      double remaining = tail;
      double acc = 0.0;
      for (double c : sorted) {
        double take = std::min(atom, remaining);
        acc += take * c;
        remaining -= take;
        if (remaining <= 0.0) break;
      }
      return acc / tail;
    }
  }
  return 0.0;
}

std::pair<ActionSequence, RolloutBatch> SpcStep(
    const SpcContext& ctx, const ActionSequence& prev,
    const envs::EnvState& state,
    const std::vector<ActionSequence>& extra_samples, Rng& rng) {
  RolloutBatch batch;
  batch.sequences = SampleProposal(prev, ctx.sigma, ctx.num_gaussian_samples,
                                   rng);
  batch.sources.assign(batch.sequences.size(), SampleSource::kGaussian);
  for (const ActionSequence& seq : extra_samples) {
    batch.sequences.push_back(seq);
    batch.sources.push_back(SampleSource::kPolicy);
  }

  std::size_t num_samples = batch.sequences.size();
  std::size_t num_domains = ctx.domains.size();
  batch.domain_costs.assign(num_samples, std::vector<double>(num_domains));
  ParallelFor(num_samples * num_domains, ctx.workers, [&](std::size_t idx) {
    std::size_t i = idx / num_domains;
    std::size_t d = idx % num_domains;
    batch.domain_costs[i][d] = envs::RolloutCost(
        *ctx.env, ctx.domains[d], state, batch.sequences[i], ctx.counter);
  });

  batch.aggregated.resize(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    bool all_finite = true;
    for (double c : batch.domain_costs[i]) {
      if (!std::isfinite(c)) all_finite = false;
    }
    batch.aggregated[i] =
        all_finite ? Aggregate(ctx.risk, batch.domain_costs[i]) : kInf;
  }
  batch.best_index = static_cast<int>(std::distance(
      batch.aggregated.begin(),
      std::min_element(batch.aggregated.begin(), batch.aggregated.end())));

  std::vector<double> weights = Weight(ctx.weighting, batch.aggregated);
  ActionSequence mean = UpdateMean(prev, batch.sequences, weights);
  return {std::move(mean), std::move(batch)};
}

std::vector<double> ScoreFromSamples(
    std::span<const double> mean,
    const std::vector<std::vector<double>>& samples,
    std::span<const double> weights, double sigma) {
  if (samples.size() != weights.size()) {
    throw std::invalid_argument("samples/weights size mismatch");
  }
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::runtime_error("all score weights zero");
  std::vector<double> score(mean.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < score.size(); ++k) {
      score[k] += weights[i] * (samples[i][k] - mean[k]);
    }
  }
  for (double& s : score) s /= total * sigma * sigma;
  return score;
}

std::vector<double> EstimateScore(
    const std::function<double(std::span<const double>)>& g,
    std::span<const double> mean, double sigma, int n_samples, Rng& rng) {
  if (n_samples < 2) throw std::invalid_argument("need >= 2 samples");
  std::vector<std::vector<double>> samples(n_samples);
  std::vector<double> weights(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    samples[i].resize(mean.size());
    for (std::size_t k = 0; k < mean.size(); ++k) {
      samples[i][k] = mean[k] + sigma * rng.Gaussian();
    }
    weights[i] = g(samples[i]);
  }
  return ScoreFromSamples(mean, samples, weights, sigma);
}

}  // namespace gpc::spc
