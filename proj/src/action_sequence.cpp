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

#include "gpc/action_sequence.hpp"

#include <algorithm>
#include <stdexcept>

namespace gpc {

ActionSequence ActionSequence::Zeros(int num_knots, int action_dim,
                                     int horizon_steps) {
  if (num_knots < 1 || action_dim < 1 || horizon_steps < 1) {
    throw std::invalid_argument("ActionSequence dimensions must be positive");
  }
  ActionSequence seq;
  seq.num_knots = num_knots;
  seq.action_dim = action_dim;
  seq.horizon_steps = horizon_steps;
  seq.knots.assign(static_cast<std::size_t>(num_knots) * action_dim, 0.0);
  return seq;
}

int ActionSequence::KnotIndex(int step) const {
  step = std::clamp(step, 0, horizon_steps - 1);
  return static_cast<int>(static_cast<long long>(step) * num_knots /
                          horizon_steps);
}

std::span<double> ActionSequence::Knot(int k) {
  return {knots.data() + static_cast<std::size_t>(k) * action_dim,
          static_cast<std::size_t>(action_dim)};
}

std::span<const double> ActionSequence::Knot(int k) const {
  return {knots.data() + static_cast<std::size_t>(k) * action_dim,
          static_cast<std::size_t>(action_dim)};
}

std::span<const double> ActionSequence::AtStep(int step) const {
  return Knot(KnotIndex(step));
}

int ActionSequence::KnotStartStep(int k) const {
  // Smallest step s with KnotIndex(s) == k, i.e. ceil(k * H / K).
  long long h = horizon_steps, kk = num_knots;
  return static_cast<int>((k * h + kk - 1) / kk);
}

void ClampUnit(ActionSequence* seq) {
  for (double& x : seq->knots) x = std::clamp(x, -1.0, 1.0);
}

ActionSequence Shift(const ActionSequence& seq, int steps) {
  ActionSequence out = seq;
  for (int k = 0; k < seq.num_knots; ++k) {
    int src_step = std::min(seq.KnotStartStep(k) + steps,
                            seq.horizon_steps - 1);
    auto src = seq.AtStep(src_step);
    std::copy(src.begin(), src.end(), out.Knot(k).begin());
  }
  return out;
}

}  // namespace gpc
