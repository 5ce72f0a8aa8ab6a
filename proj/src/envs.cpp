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

#include "gpc/envs.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gpc::envs {

namespace {

constexpr double kPi = std::numbers::pi;

// Wrap an angle to [-pi, pi].
double WrapAngle(double theta) {
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w - kPi;
}

bool Finite(const EnvState& state) {
  for (double x : state.q) {
    if (!std::isfinite(x)) return false;
  }
  for (double x : state.v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Solve a symmetric 3x3 linear system by Gaussian elimination with
// partial pivoting. a is row-major, overwritten.
void Solve3(double a[9], double b[3], double x[3]) {
  int piv[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int best = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[piv[r] * 3 + col]) > std::abs(a[piv[best] * 3 + col])) {
        best = r;
      }
    }
    std::swap(piv[col], piv[best]);
    double d = a[piv[col] * 3 + col];
    for (int r = col + 1; r < 3; ++r) {
      double f = a[piv[r] * 3 + col] / d;
      for (int c = col; c < 3; ++c) a[piv[r] * 3 + c] -= f * a[piv[col] * 3 + c];
      b[piv[r]] -= f * b[piv[col]];
    }
  }
  for (int col = 2; col >= 0; --col) {
    double s = b[piv[col]];
    for (int c = col + 1; c < 3; ++c) s -= a[piv[col] * 3 + c] * x[c];
    x[col] = s / a[piv[col] * 3 + col];
  }
}

// ---------------------------------------------------------------------------
// Pendulum: single torque-limited link, theta = 0 upright. The torque limit
// makes a direct swing-up infeasible, so the controller must pump energy.

class Pendulum : public Env {
 public:
  enum { kMass, kLength, kDamping, kGain };

  Pendulum() {
    spec_.name = "pendulum";
    spec_.nq = 1;
    spec_.nv = 1;
    spec_.action_dim = 1;
    spec_.obs_dim = 3;
    spec_.action_limit = {2.0};
    spec_.horizon_seconds = 0.5;
    spec_.num_knots = 5;
    spec_.episode_seconds = 4.0;
  }

  std::vector<std::string> ParamNames() const override {
    return {"mass", "length", "damping", "gain"};
  }
  DomainParams NominalParams() const override { return {1.0, 0.5, 0.1, 1.0}; }

  double RunningCost(const EnvState& s,
                     std::span<const double> u) const override {
    double e = WrapAngle(s.q[0]);
    return e * e + 0.1 * s.v[0] * s.v[0] + 0.001 * u[0] * u[0];
  }
  double TerminalCost(const EnvState& s) const override {
    double e = WrapAngle(s.q[0]);
    return 10.0 * (e * e + 0.1 * s.v[0] * s.v[0]);
  }
  std::vector<double> Observe(const EnvState& s) const override {
    return {std::sin(s.q[0]), std::cos(s.q[0]), s.v[0]};
  }
  EnvState SampleInitialState(Rng& rng) const override {
    EnvState s;
    s.q = {rng.Uniform(-kPi, kPi)};
    s.v = {rng.Uniform(-1.0, 1.0)};
    return s;
  }
  bool AtGoal(const EnvState& s) const override {
    return std::abs(WrapAngle(s.q[0])) < 0.2;
  }

 protected:
  void Accel(const DomainParams& p, const EnvState& s,
             std::span<const double> u, std::span<double> a) const override {
    double m = p[kMass], l = p[kLength];
    a[0] = (kGravity / l) * std::sin(s.q[0]) +
           (p[kGain] * u[0] - p[kDamping] * s.v[0]) / (m * l * l);
  }
};

// ---------------------------------------------------------------------------
// Cart-pole: force-actuated cart with an unactuated point-mass pole,
// theta = 0 upright.

class CartPole : public Env {
 public:
  enum { kCartMass, kPoleMass, kPoleLength, kDamping, kGain };

  CartPole() {
    spec_.name = "cartpole";
    spec_.nq = 2;  // cart position, pole angle
    spec_.nv = 2;
    spec_.action_dim = 1;
    spec_.obs_dim = 5;
    spec_.action_limit = {20.0};
    spec_.horizon_seconds = 1.0;
    spec_.num_knots = 10;
    spec_.episode_seconds = 2.0;
  }

  std::vector<std::string> ParamNames() const override {
    return {"cart_mass", "pole_mass", "pole_length", "damping", "gain"};
  }
  DomainParams NominalParams() const override {
    return {1.0, 0.1, 0.5, 0.0, 1.0};
  }

  double RunningCost(const EnvState& s,
                     std::span<const double> u) const override {
    double e = WrapAngle(s.q[1]);
    return e * e + 0.1 * s.q[0] * s.q[0] + 0.1 * s.v[0] * s.v[0] +
           0.1 * s.v[1] * s.v[1] + 0.001 * u[0] * u[0];
  }
  double TerminalCost(const EnvState& s) const override {
    double e = WrapAngle(s.q[1]);
    return 10.0 * (e * e + 0.1 * s.q[0] * s.q[0] + 0.1 * s.v[0] * s.v[0] +
                   0.1 * s.v[1] * s.v[1]);
  }
  std::vector<double> Observe(const EnvState& s) const override {
    return {std::sin(s.q[1]), std::cos(s.q[1]), s.q[0], s.v[0], s.v[1]};
  }
  EnvState SampleInitialState(Rng& rng) const override {
    EnvState s;
    s.q = {rng.Uniform(-0.1, 0.1), kPi + rng.Uniform(-0.1, 0.1)};
    s.v = {rng.Uniform(-0.1, 0.1), rng.Uniform(-0.1, 0.1)};
    return s;
  }
  bool AtGoal(const EnvState& s) const override {
    return std::abs(WrapAngle(s.q[1])) < 0.2;
  }

 protected:
  void Accel(const DomainParams& p, const EnvState& s,
             std::span<const double> u, std::span<double> a) const override {
    double mc = p[kCartMass], mp = p[kPoleMass], l = p[kPoleLength];
    double c = std::cos(s.q[1]), sn = std::sin(s.q[1]);
    double thdot = s.v[1];
    // Manipulator form in (x, theta) with the pole mass at the link end.
    double a11 = mc + mp, a12 = mp * l * c, a22 = mp * l * l;
    double b1 = p[kGain] * u[0] + mp * l * sn * thdot * thdot;
    double b2 = mp * kGravity * l * sn - p[kDamping] * thdot;
    double det = a11 * a22 - a12 * a12;
    a[0] = (a22 * b1 - a12 * b2) / det;
    a[1] = (a11 * b2 - a12 * b1) / det;
  }
};

// ---------------------------------------------------------------------------
// Double cart-pole: two serial unactuated point-mass links on the cart.
// Angles are absolute (measured from upright), which keeps the closed-form
// manipulator equations compact.

class DoubleCartPole : public Env {
 public:
  enum { kCartMass, kMass1, kMass2, kLength1, kLength2, kDamping, kGain };

  DoubleCartPole() {
    spec_.name = "double_cartpole";
    spec_.nq = 3;  // cart position, link angles
    spec_.nv = 3;
    spec_.action_dim = 1;
    spec_.obs_dim = 8;
    spec_.action_limit = {10.0};
    spec_.horizon_seconds = 0.8;
    spec_.num_knots = 10;
    spec_.episode_seconds = 4.0;
  }

  std::vector<std::string> ParamNames() const override {
    return {"cart_mass", "mass1",   "mass2", "length1",
            "length2",   "damping", "gain"};
  }
  DomainParams NominalParams() const override {
    return {1.0, 0.1, 0.1, 0.5, 0.5, 0.0, 1.0};
  }

  double RunningCost(const EnvState& s,
                     std::span<const double> u) const override {
    double e1 = WrapAngle(s.q[1]), e2 = WrapAngle(s.q[2]);
    return e1 * e1 + e2 * e2 + 0.1 * s.q[0] * s.q[0] +
           0.1 * (s.v[0] * s.v[0] + s.v[1] * s.v[1] + s.v[2] * s.v[2]) +
           0.001 * u[0] * u[0];
  }
  double TerminalCost(const EnvState& s) const override {
    double e1 = WrapAngle(s.q[1]), e2 = WrapAngle(s.q[2]);
    return 10.0 *
           (e1 * e1 + e2 * e2 + 0.1 * s.q[0] * s.q[0] +
            0.1 * (s.v[0] * s.v[0] + s.v[1] * s.v[1] + s.v[2] * s.v[2]));
  }
  std::vector<double> Observe(const EnvState& s) const override {
    return {std::sin(s.q[1]), std::cos(s.q[1]), std::sin(s.q[2]),
            std::cos(s.q[2]), s.q[0],           s.v[0],
            s.v[1],           s.v[2]};
  }
  EnvState SampleInitialState(Rng& rng) const override {
    EnvState s;
    s.q = {rng.Uniform(-0.1, 0.1), kPi + rng.Uniform(-0.1, 0.1),
           kPi + rng.Uniform(-0.1, 0.1)};
    s.v = {rng.Uniform(-0.1, 0.1), rng.Uniform(-0.1, 0.1),
           rng.Uniform(-0.1, 0.1)};
    return s;
  }
  bool AtGoal(const EnvState& s) const override {
    return std::abs(WrapAngle(s.q[1])) < 0.2 &&
           std::abs(WrapAngle(s.q[2])) < 0.2;
  }

 protected:
  void Accel(const DomainParams& p, const EnvState& s,
             std::span<const double> u, std::span<double> a) const override {
    double mc = p[kCartMass], m1 = p[kMass1], m2 = p[kMass2];
    double l1 = p[kLength1], l2 = p[kLength2];
    double t1 = s.q[1], t2 = s.q[2];
    double w1 = s.v[1], w2 = s.v[2];
    double c1 = std::cos(t1), s1 = std::sin(t1);
    double c2 = std::cos(t2), s2 = std::sin(t2);
    double c12 = std::cos(t1 - t2), s12 = std::sin(t1 - t2);

    double m12 = m1 + m2;
    double M[9] = {mc + m12,       m12 * l1 * c1,  m2 * l2 * c2,
                   m12 * l1 * c1,  m12 * l1 * l1,  m2 * l1 * l2 * c12,
                   m2 * l2 * c2,   m2 * l1 * l2 * c12, m2 * l2 * l2};
    double rhs[3] = {
        p[kGain] * u[0] + m12 * l1 * s1 * w1 * w1 + m2 * l2 * s2 * w2 * w2,
        -m2 * l1 * l2 * s12 * w2 * w2 + m12 * kGravity * l1 * s1 -
            p[kDamping] * w1,
        m2 * l1 * l2 * s12 * w1 * w1 + m2 * kGravity * l2 * s2 -
            p[kDamping] * w2};
    double acc[3];
    Solve3(M, rhs, acc);
    a[0] = acc[0];
    a[1] = acc[1];
    a[2] = acc[2];
  }
};

// ---------------------------------------------------------------------------
// nav2d: planar double integrator steering around a circular obstacle to a
// goal directly behind it. The symmetric scene admits two homotopy classes
// (pass above or below), exercising multi-modal policies.

class Nav2d : public Env {
 public:
  enum { kMass, kGain };

  static constexpr double kObstacleX = 0.6;
  static constexpr double kObstacleY = 0.0;
  static constexpr double kObstacleRadius = 0.2;
  static constexpr double kGoalX = 1.2;
  static constexpr double kGoalY = 0.0;

  Nav2d() {
    spec_.name = "nav2d";
    spec_.nq = 2;
    spec_.nv = 2;
    spec_.action_dim = 2;
    spec_.obs_dim = 4;
    spec_.action_limit = {2.0, 2.0};
    spec_.horizon_seconds = 1.5;
    spec_.num_knots = 5;
    spec_.episode_seconds = 3.0;
    spec_.success_window_seconds = 0.0;  // only the final state counts
  }

  std::vector<std::string> ParamNames() const override {
    return {"mass", "gain"};
  }
  DomainParams NominalParams() const override { return {1.0, 1.0}; }

  double RunningCost(const EnvState& s,
                     std::span<const double> u) const override {
    double dx = s.q[0] - kGoalX, dy = s.q[1] - kGoalY;
    double v2 = s.v[0] * s.v[0] + s.v[1] * s.v[1];
    double u2 = u[0] * u[0] + u[1] * u[1];
    return dx * dx + dy * dy + 0.1 * v2 + 0.001 * u2 + ObstaclePenalty(s);
  }
  double TerminalCost(const EnvState& s) const override {
    double dx = s.q[0] - kGoalX, dy = s.q[1] - kGoalY;
    double v2 = s.v[0] * s.v[0] + s.v[1] * s.v[1];
    return 10.0 * (dx * dx + dy * dy + 0.1 * v2);
  }
  std::vector<double> Observe(const EnvState& s) const override {
    return {s.q[0] - kGoalX, s.q[1] - kGoalY, s.v[0], s.v[1]};
  }
  EnvState SampleInitialState(Rng& rng) const override {
    EnvState s;
    s.q = {rng.Uniform(-0.02, 0.02), rng.Uniform(-0.02, 0.02)};
    s.v = {0.0, 0.0};
    return s;
  }
  bool AtGoal(const EnvState& s) const override {
    double dx = s.q[0] - kGoalX, dy = s.q[1] - kGoalY;
    return std::sqrt(dx * dx + dy * dy) < 0.1;
  }

 protected:
  void Accel(const DomainParams& p, const EnvState& s,
             std::span<const double> u, std::span<double> a) const override {
    a[0] = p[kGain] * u[0] / p[kMass];
    a[1] = p[kGain] * u[1] / p[kMass];
  }

 private:
  static double ObstaclePenalty(const EnvState& s) {
    double dx = s.q[0] - kObstacleX, dy = s.q[1] - kObstacleY;
    double d = std::sqrt(dx * dx + dy * dy);
    return 5.0 * std::exp(-(d - kObstacleRadius) / 0.05);
  }
};

}  // namespace

int EnvSpec::SubstepsPerCtrl() const {
  double sub = CtrlDt() / physics_dt;
  int n = static_cast<int>(std::lround(sub));
  if (n < 1 || std::abs(sub - n) > 1e-9) {
    throw std::logic_error("control period must be a multiple of physics_dt");
  }
  return n;
}

int EnvSpec::HorizonSteps() const {
  return static_cast<int>(std::lround(horizon_seconds * ctrl_freq));
}

int EnvSpec::EpisodeSteps() const {
  return static_cast<int>(std::lround(episode_seconds * ctrl_freq));
}

DomainParams Env::SampleParams(Rng& rng, double scale) const {
  DomainParams nominal = NominalParams();
  DomainParams out(nominal.size());
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    out[i] = nominal[i] * (1.0 + scale * rng.Uniform(-1.0, 1.0));
  }
  return out;
}

EnvState Env::Step(const DomainParams& params, const EnvState& state,
                   std::span<const double> action) const {
  if (static_cast<int>(action.size()) != spec_.action_dim) {
    throw std::invalid_argument("action dimension mismatch");
  }
  std::vector<double> u(action.begin(), action.end());
  for (int j = 0; j < spec_.action_dim; ++j) {
    u[j] = std::clamp(u[j], -spec_.action_limit[j], spec_.action_limit[j]);
  }
  EnvState next = state;
  int substeps = spec_.SubstepsPerCtrl();
  std::vector<double> accel(spec_.nv);
  for (int s = 0; s < substeps; ++s) {
    Accel(params, next, u, accel);
    for (int i = 0; i < spec_.nv; ++i) next.v[i] += spec_.physics_dt * accel[i];
    for (int i = 0; i < spec_.nq; ++i) next.q[i] += spec_.physics_dt * next.v[i];
  }
  next.time_index = state.time_index + 1;
  if (!Finite(next)) {
    throw std::runtime_error("environment diverged: non-finite state");
  }
  return next;
}

std::unique_ptr<Env> MakeEnv(const std::string& name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "cartpole") return std::make_unique<CartPole>();
  if (name == "double_cartpole") return std::make_unique<DoubleCartPole>();
  if (name == "nav2d") return std::make_unique<Nav2d>();
  throw std::invalid_argument("unknown environment: " + name);
}

std::vector<std::string> EnvNames() {
  return {"pendulum", "cartpole", "double_cartpole", "nav2d"};
}

std::vector<double> PhysicalAction(const EnvSpec& spec,
                                   std::span<const double> normalized) {
  std::vector<double> u(normalized.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] = normalized[j] * spec.action_limit[j];
  }
  return u;
}

double RolloutCost(const Env& env, const DomainParams& params, EnvState state,
                   const ActionSequence& plan, RolloutCounter* counter) {
  static std::atomic<bool> warned{false};
  if (counter != nullptr) counter->fetch_add(1, std::memory_order_relaxed);
  double cost = 0.0;
  try {
    for (int step = 0; step < plan.horizon_steps; ++step) {
      std::vector<double> u = PhysicalAction(env.spec(), plan.AtStep(step));
      cost += env.RunningCost(state, u);
      state = env.Step(params, state, u);
    }
    cost += env.TerminalCost(state);
  } catch (const std::runtime_error&) {
    if (!warned.exchange(true)) {
      std::cerr << "warning: rollout diverged, recording infinite cost\n";
    }
    return std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(cost)) return std::numeric_limits<double>::infinity();
  return cost;
}

int Nav2dHomotopyClass(const std::vector<EnvState>& trajectory) {
  double best = std::numeric_limits<double>::infinity();
  double side = 0.0;
  for (const EnvState& s : trajectory) {
    double dx = s.q[0] - Nav2d::kObstacleX;
    double dy = s.q[1] - Nav2d::kObstacleY;
    double d = std::sqrt(dx * dx + dy * dy);
    if (d < best) {
      best = d;
      side = dy;
    }
  }
  if (best > 0.55) return 0;  // never approached the obstacle
  return side >= 0.0 ? 1 : -1;
}

}  // namespace gpc::envs
