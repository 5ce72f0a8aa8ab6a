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

#ifndef GPCLAB_RNG_HPP_
#define GPCLAB_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gpc {

// Counter-style pseudo-random stream built on splitmix64. Substreams are
// derived by hashing identifier tuples, so results do not depend on the
// order in which parallel workers touch them.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(Mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  // Derives an independent stream keyed by (a, b, c) on top of this
  // stream's seed. Does not advance this stream.
  Rng Substream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    std::uint64_t s = state_;
    s = Mix(s ^ Mix(a + 0x100000001b3ULL));
    s = Mix(s ^ Mix(b + 0x27d4eb2f165667c5ULL));
    s = Mix(s ^ Mix(c + 0x165667b19e3779f9ULL));
    Rng out(0);
    out.state_ = s;
    return out;
  }

  std::uint64_t NextU64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return Mix(state_);
  }

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via Box-Muller, one draw per call (no cached pair, so
  // the stream position is a pure function of the call count).
  double Gaussian() {
    // u1 in (0, 1]: shift avoids log(0).
    double u1 = (static_cast<double>(NextU64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  int UniformInt(int n) {  // [0, n)
    return static_cast<int>(NextU64() % static_cast<std::uint64_t>(n));
  }

 private:
  static std::uint64_t Mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace gpc

#endif  // GPCLAB_RNG_HPP_
