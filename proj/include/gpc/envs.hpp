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

#ifndef GPCLAB_ENVS_HPP_
#define GPCLAB_ENVS_HPP_

#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gpc/action_sequence.hpp"
#include "gpc/rng.hpp"

namespace gpc::envs {

inline constexpr double kGravity = 9.81;

struct EnvState {
  std::vector<double> q;  // generalized positions
  std::vector<double> v;  // generalized velocities
  int time_index = 0;
};

// Named scalar physical parameters; names come from Env::ParamNames().
using DomainParams = std::vector<double>;

struct EnvSpec {
  std::string name;
  int nq = 0;
  int nv = 0;
  int action_dim = 0;
  int obs_dim = 0;
  std::vector<double> action_limit;  // symmetric bound per actuator
  double physics_dt = 0.01;
  int ctrl_freq = 50;
  double horizon_seconds = 0.0;
  int num_knots = 0;
  double episode_seconds = 0.0;
  // Seconds the goal predicate must hold at the end of an episode for
  // success; 0 means only the final state is checked.
  double success_window_seconds = 1.0;

  double CtrlDt() const { return 1.0 / ctrl_freq; }
  int SubstepsPerCtrl() const;
  int HorizonSteps() const;  // control steps spanned by the plan
  int EpisodeSteps() const;
};

class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  virtual std::vector<std::string> ParamNames() const = 0;
  virtual DomainParams NominalParams() const = 0;

  // Multiplicative randomization: each parameter scaled by a factor in
  // [1 - scale, 1 + scale]. Parameters with nominal value 0 stay 0.
  DomainParams SampleParams(Rng& rng, double scale) const;

  // One control period: clamp action to actuator limits, then integrate
  // SubstepsPerCtrl() substeps of semi-implicit Euler. Throws if the
  // resulting state is non-finite.
  EnvState Step(const DomainParams& params, const EnvState& state,
                std::span<const double> action) const;

  virtual double RunningCost(const EnvState& state,
                             std::span<const double> action) const = 0;
  virtual double TerminalCost(const EnvState& state) const = 0;
  virtual std::vector<double> Observe(const EnvState& state) const = 0;
  virtual EnvState SampleInitialState(Rng& rng) const = 0;
  // Instantaneous task-success predicate (e.g. pole within 0.2 rad of
  // upright). Episode-level success is aggregated by the evaluator.
  virtual bool AtGoal(const EnvState& state) const = 0;

 protected:
  // Acceleration given clamped physical action; integration is shared.
  virtual void Accel(const DomainParams& params, const EnvState& state,
                     std::span<const double> u,
                     std::span<double> accel) const = 0;

  EnvSpec spec_;
};

std::unique_ptr<Env> MakeEnv(const std::string& name);
std::vector<std::string> EnvNames();

// De-normalize a [-1, 1] knot value to physical actuator units.
std::vector<double> PhysicalAction(const EnvSpec& spec,
                                   std::span<const double> normalized);

using RolloutCounter = std::atomic<long long>;

// Total plan cost J = sum of running costs at control-step resolution plus
// the terminal cost. A diverged rollout yields +infinity.
double RolloutCost(const Env& env, const DomainParams& params, EnvState state,
                   const ActionSequence& plan,
                   RolloutCounter* counter = nullptr);

// Side of the nav2d obstacle a trajectory passes on: +1 above, -1 below,
// 0 if it never enters the obstacle's x-band. Used to label homotopy
// classes on the navigation task.
int Nav2dHomotopyClass(const std::vector<EnvState>& trajectory);

}  // namespace gpc::envs

#endif  // GPCLAB_ENVS_HPP_
