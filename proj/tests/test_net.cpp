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

#include <cmath>
#include <vector>

#include "gpc/net.hpp"
#include "gpc/rng.hpp"

namespace {

using namespace gpc;
using namespace gpc::net;

std::vector<double> RandomInput(int n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.Uniform(-2.0, 2.0);
  return x;
}

// Independent scalar re-implementation of the forward pass: plain loops,
// no shared code with net.cpp beyond the parameter layout contract.
double OracleAct(Activation a, double x) {
  switch (a) {
    case Activation::kSwish:
      return x / (1.0 + std::exp(-x));
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

std::vector<double> OracleForward(const MlpParams& p,
                                  const std::vector<double>& input) {
  std::vector<double> h = input;
  for (int layer = 0; layer < p.NumLayers(); ++layer) {
    int in = p.layer_sizes[layer];
    int out = p.layer_sizes[layer + 1];
    std::vector<double> next(out);
    for (int i = 0; i < out; ++i) {
      double acc = p.biases[layer][i];
      for (int j = 0; j < in; ++j) acc += p.weights[layer][i * in + j] * h[j];
      next[i] = acc;
    }
    if (layer + 1 < p.NumLayers()) {
      for (double& v : next) v = OracleAct(p.activation, v);
    }
    h = std::move(next);
  }
  return h;
}

double Objective(const MlpParams& p, const std::vector<double>& input,
                 const std::vector<double>& out_grad) {
  std::vector<double> y = Forward(p, input);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * out_grad[i];
  return s;
}

}  // namespace

TEST_CASE("make_mlp shapes and finiteness") {
  Rng rng(1);
  MlpParams p = MakeMlp({4, 8, 8, 3}, Activation::kSwish, rng);
  CHECK(p.NumLayers() == 3);
  CHECK(p.weights[0].size() == 8 * 4);
  CHECK(p.weights[1].size() == 8 * 8);
  CHECK(p.weights[2].size() == 3 * 8);
  CHECK(p.biases[0].size() == 8);
  CHECK(p.biases[2].size() == 3);
  CHECK(p.NumParams() == 8 * 4 + 8 + 8 * 8 + 8 + 3 * 8 + 3);
  CHECK(AllFinite(p));
  for (double b : p.biases[0]) CHECK(b == 0.0);
  // Glorot bound for the first layer.
  double bound = std::sqrt(6.0 / (4 + 8));
  for (double w : p.weights[0]) CHECK(std::abs(w) <= bound);
}

TEST_CASE("forward zero params gives zero output") {
  Rng rng(2);
  MlpParams p = MakeMlp({3, 5, 2}, Activation::kTanh, rng);
  for (auto& w : p.weights) std::fill(w.begin(), w.end(), 0.0);
  std::vector<double> y = Forward(p, std::vector<double>{1.0, -2.0, 3.0});
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("forward single identity layer is identity") {
  MlpParams p;
  p.layer_sizes = {3, 3};
  p.weights = {{1, 0, 0, 0, 1, 0, 0, 0, 1}};
  p.biases = {{0, 0, 0}};
  std::vector<double> x = {0.5, -1.25, 2.0};
  std::vector<double> y = Forward(p, x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("forward matches scalar oracle") {
  Rng rng(3);
  for (Activation a :
       {Activation::kSwish, Activation::kTanh, Activation::kRelu}) {
    for (int trial = 0; trial < 10; ++trial) {
      MlpParams p = MakeMlp({5, 7, 6, 4}, a, rng);
      for (auto& b : p.biases) {
        for (double& v : b) v = rng.Uniform(-0.5, 0.5);
      }
      std::vector<double> x = RandomInput(5, rng);
      std::vector<double> got = Forward(p, x);
      std::vector<double> want = OracleForward(p, x);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("forward is pure") {
  Rng rng(4);
  MlpParams p = MakeMlp({3, 4, 2}, Activation::kSwish, rng);
  MlpParams copy = p;
  std::vector<double> x = RandomInput(3, rng);
  std::vector<double> y1 = Forward(p, x);
  std::vector<double> y2 = Forward(p, x);
  CHECK(p.weights == copy.weights);
  CHECK(p.biases == copy.biases);
  CHECK(y1 == y2);
}

TEST_CASE("backward linear layer gives outer-product weight gradient") {
  MlpParams p;
  p.layer_sizes = {3, 2};
  p.weights = {{0.1, -0.2, 0.3, 0.4, 0.5, -0.6}};
  p.biases = {{0.0, 0.0}};
  std::vector<double> x = {1.0, 2.0, -1.0};
  std::vector<double> g = {0.5, -1.5};
  auto [grads, input_grad] = Backward(p, x, g);
  // dL/dW[i][j] = g[i] * x[j]
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(grads.weights[0][i * 3 + j] == doctest::Approx(g[i] * x[j]));
    }
    CHECK(grads.biases[0][i] == doctest::Approx(g[i]));
  }
  // dL/dx[j] = sum_i g[i] W[i][j]
  for (int j = 0; j < 3; ++j) {
    double want = g[0] * p.weights[0][j] + g[1] * p.weights[0][3 + j];
    CHECK(input_grad[j] == doctest::Approx(want));
  }
}

TEST_CASE("backward zero output gradient gives zero everywhere") {
  Rng rng(5);
  MlpParams p = MakeMlp({4, 6, 3}, Activation::kSwish, rng);
  std::vector<double> x = RandomInput(4, rng);
  auto [grads, input_grad] = Backward(p, x, std::vector<double>(3, 0.0));
  for (const auto& w : grads.weights) {
    for (double v : w) CHECK(v == 0.0);
  }
  for (double v : input_grad) CHECK(v == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(6);
  const double h = 1e-5;
  const std::vector<std::vector<int>> shapes = {
      {2, 3, 1}, {4, 8, 8, 3}, {1, 5, 1}, {6, 4, 4, 4, 2}};
  for (Activation a :
       {Activation::kSwish, Activation::kTanh, Activation::kRelu}) {
    for (const auto& shape : shapes) {
      MlpParams p = MakeMlp(shape, a, rng);
      for (auto& b : p.biases) {
        for (double& v : b) v = rng.Uniform(-0.3, 0.3);
      }
      std::vector<double> x = RandomInput(shape.front(), rng);
      std::vector<double> g = RandomInput(shape.back(), rng);
      auto [grads, input_grad] = Backward(p, x, g);

      auto check = [&](double* slot, double analytic) {
        double orig = *slot;
        *slot = orig + h;
        double up = Objective(p, x, g);
        *slot = orig - h;
        double down = Objective(p, x, g);
        *slot = orig;
        double fd = (up - down) / (2.0 * h);
        CHECK(std::abs(fd - analytic) <=
              1e-4 * std::max({1.0, std::abs(fd), std::abs(analytic)}));
      };
      for (int layer = 0; layer < p.NumLayers(); ++layer) {
        for (std::size_t i = 0; i < p.weights[layer].size(); ++i) {
          check(&p.weights[layer][i], grads.weights[layer][i]);
        }
        for (std::size_t i = 0; i < p.biases[layer].size(); ++i) {
          check(&p.biases[layer][i], grads.biases[layer][i]);
        }
      }
      for (std::size_t i = 0; i < x.size(); ++i) {
        check(&x[i], input_grad[i]);
      }
    }
  }
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  Rng rng(7);
  MlpParams p = MakeMlp({2, 4, 1}, Activation::kSwish, rng);
  MlpParams before = p;
  AdamState adam = MakeAdam(p, 1e-3);
  AdamStep(&p, ZerosLike(p), &adam);
  CHECK(p.weights == before.weights);
  CHECK(p.biases == before.biases);
  CHECK(adam.step_count == 1);
}

TEST_CASE("adam first step magnitude is about lr times sign") {
  Rng rng(8);
  MlpParams p = MakeMlp({2, 3, 1}, Activation::kSwish, rng);
  MlpParams before = p;
  MlpParams grad = ZerosLike(p);
  for (auto& w : grad.weights) {
    for (double& v : w) v = rng.Uniform(-1.0, 1.0);
  }
  AdamState adam = MakeAdam(p, 1e-3);
  AdamStep(&p, grad, &adam);
  for (int layer = 0; layer < p.NumLayers(); ++layer) {
    for (std::size_t i = 0; i < p.weights[layer].size(); ++i) {
      double g = grad.weights[layer][i];
      if (std::abs(g) < 1e-3) continue;  // epsilon regime
      double delta = p.weights[layer][i] - before.weights[layer][i];
      CHECK(delta ==
            doctest::Approx(-1e-3 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-2));
    }
  }
}

TEST_CASE("adam descends against a constant gradient") {
  Rng rng(9);
  MlpParams p = MakeMlp({1, 2, 1}, Activation::kSwish, rng);
  MlpParams before = p;
  MlpParams grad = ZerosLike(p);
  grad.weights[0][0] = 1.0;
  grad.weights[0][1] = -2.0;
  AdamState adam = MakeAdam(p, 1e-3);
  for (int i = 0; i < 100; ++i) AdamStep(&p, grad, &adam);
  CHECK(p.weights[0][0] < before.weights[0][0]);
  CHECK(p.weights[0][1] > before.weights[0][1]);
  CHECK(adam.step_count == 100);
}

TEST_CASE("adam rejects non-finite gradients") {
  Rng rng(10);
  MlpParams p = MakeMlp({1, 2, 1}, Activation::kSwish, rng);
  MlpParams grad = ZerosLike(p);
  grad.weights[0][0] = std::nan("");
  AdamState adam = MakeAdam(p, 1e-3);
  CHECK_THROWS(AdamStep(&p, grad, &adam));
}

TEST_CASE("axpy accumulates scaled parameters") {
  Rng rng(11);
  MlpParams a = MakeMlp({2, 3, 1}, Activation::kSwish, rng);
  MlpParams acc = ZerosLike(a);
  Axpy(2.0, a, &acc);
  Axpy(-0.5, a, &acc);
  for (int layer = 0; layer < a.NumLayers(); ++layer) {
    for (std::size_t i = 0; i < a.weights[layer].size(); ++i) {
      CHECK(acc.weights[layer][i] ==
            doctest::Approx(1.5 * a.weights[layer][i]));
    }
  }
}
