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

#ifndef GPCLAB_ACTION_SEQUENCE_HPP_
#define GPCLAB_ACTION_SEQUENCE_HPP_

#include <span>
#include <vector>

namespace gpc {

// Zero-order-hold action plan over the planning horizon. Knot values live in
// normalized [-1, 1] actuator units; each control step maps to exactly one
// knot, with knot boundaries at evenly spaced fractions of the horizon.
struct ActionSequence {
  int num_knots = 0;
  int action_dim = 0;
  int horizon_steps = 0;
  std::vector<double> knots;  // row-major (num_knots x action_dim)

  static ActionSequence Zeros(int num_knots, int action_dim,
                              int horizon_steps);

  int KnotIndex(int step) const;
  std::span<double> Knot(int k);
  std::span<const double> Knot(int k) const;
  // Knot value governing control step `step`.
  std::span<const double> AtStep(int step) const;
  // First control step covered by knot k.
  int KnotStartStep(int k) const;
};

// Clamp all knot values into [-1, 1] in place.
void ClampUnit(ActionSequence* seq);

// Time-shift by `steps` control periods: each knot takes the value the old
// plan held `steps` later, with the final knot value extended past the end.
ActionSequence Shift(const ActionSequence& seq, int steps = 1);

}  // namespace gpc

#endif  // GPCLAB_ACTION_SEQUENCE_HPP_
