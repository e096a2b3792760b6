// Copyright 2026 The TSIC Authors. All Rights Reserved.
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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tsic/transforms.hpp"

using tsic::LatentCode;
using tsic::LatentState;
using tsic::QuantizeMode;
using tsic::Tensor;
using tsic::test::dot;
using tsic::test::grad_close;
using tsic::test::numeric_derivative;
using tsic::test::random_tensor;

namespace {

tsic::GeneratorConfig tiny_generator() {
  return {4, 4, 1, {4, 4, 4, 4}};
}

}  // namespace

TEST_CASE("eval rounding is half away from zero and idempotent") {
  CHECK(tsic::round_half_away(1.4) == 1.0);
  CHECK(tsic::round_half_away(2.5) == 3.0);
  CHECK(tsic::round_half_away(-2.5) == -3.0);
  CHECK(tsic::round_half_away(-0.4) == 0.0);

  std::mt19937_64 rng(1);
  const Tensor v = random_tensor({1, 2, 3, 3}, rng, -9, 9);
  const Tensor once = tsic::quantize_values(v, QuantizeMode::kEvalRound, nullptr);
  const Tensor twice =
      tsic::quantize_values(once, QuantizeMode::kEvalRound, nullptr);
  CHECK(tsic::max_abs_diff(once, twice) == 0.0);
  for (double x : once.values()) CHECK(x == std::round(x));
}

TEST_CASE("quantize state machine") {
  std::mt19937_64 rng(2);
  LatentCode y{random_tensor({1, 2, 2, 2}, rng), LatentState::kContinuous};
  const LatentCode q = tsic::quantize(y, QuantizeMode::kEvalRound);
  CHECK(q.quantized());
  CHECK_THROWS_AS(tsic::quantize(q, QuantizeMode::kEvalRound), std::logic_error);
  tsic::nn::Rng nrng(3);
  const LatentCode n = tsic::quantize(y, QuantizeMode::kTrainNoise, &nrng);
  CHECK(n.state == LatentState::kNoisy);
  CHECK_THROWS_AS(tsic::quantize(n, QuantizeMode::kTrainSte), std::logic_error);
  CHECK(tsic::quantize(y, QuantizeMode::kTrainSte).quantized());
  CHECK_THROWS(tsic::quantize(y, QuantizeMode::kTrainNoise, nullptr));
  tsic::HyperLatent z{random_tensor({1, 2, 1, 1}, rng)};
  CHECK(tsic::quantize(z, QuantizeMode::kEvalRound).quantized());
}

TEST_CASE("training noise is uniform on [-0.5, 0.5)") {
  std::mt19937_64 rng(4);
  const Tensor v = random_tensor({1, 1, 1, 100000}, rng, -50, 50);
  tsic::nn::Rng nrng(5);
  const Tensor out = tsic::quantize_values(v, QuantizeMode::kTrainNoise, &nrng);
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    u[i] = out[i] - v[i];
    REQUIRE(u[i] >= -0.5 - 1e-12);
    REQUIRE(u[i] < 0.5 + 1e-12);
  }
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double cdf = std::clamp(u[i] + 0.5, 0.0, 1.0);
    d = std::max({d, (i + 1) / n - cdf, cdf - i / n});
  }
  // Kolmogorov critical value at p = 0.01.
  CHECK(d < 1.6276 / std::sqrt(n));
}

TEST_CASE("straight-through sensitivity is the identity") {
  std::mt19937_64 rng(6);
  const Tensor g = random_tensor({1, 3, 2, 2}, rng);
  CHECK(tsic::max_abs_diff(tsic::quantize_backward(g, QuantizeMode::kTrainSte),
                           g) == 0.0);
  CHECK(tsic::max_abs_diff(
            tsic::quantize_backward(g, QuantizeMode::kTrainNoise), g) == 0.0);
  CHECK_THROWS(tsic::quantize_backward(g, QuantizeMode::kEvalRound));
}

TEST_CASE("encoder shapes") {
  tsic::nn::Rng rng(7);
  tsic::Encoder enc(tsic::EncoderConfig{}, rng);
  std::mt19937_64 data(8);
  const tsic::ImageTensor img(random_tensor({1, 3, 64, 64}, data));
  const LatentCode y = tsic::encode(img, enc);
  CHECK(y.values.shape() == tsic::Shape{1, 64, 4, 4});
  CHECK(y.state == LatentState::kContinuous);
  const tsic::ImageTensor odd(random_tensor({1, 3, 40, 48}, data));
  CHECK_THROWS_AS(tsic::encode(odd, enc), std::invalid_argument);
}

TEST_CASE("256 by 256 input gives a 16 by 16 latent") {
  tsic::nn::Rng rng(9);
  tsic::Encoder enc(tsic::EncoderConfig{4, 4, 8}, rng);
  const tsic::ImageTensor img(Tensor({1, 3, 256, 256}, 0.1));
  CHECK(tsic::encode(img, enc).values.shape() == tsic::Shape{1, 8, 16, 16});
}

TEST_CASE("zero image with zero biases encodes to zero") {
  tsic::nn::Rng rng(10);
  tsic::Encoder enc(tsic::EncoderConfig{}, rng);
  const tsic::ImageTensor img(Tensor({1, 3, 32, 32}));
  const LatentCode y = tsic::encode(img, enc);
  for (double v : y.values.values()) CHECK(v == 0.0);
}

TEST_CASE("encoder gradients match finite differences") {
  tsic::nn::Rng rng(11);
  tsic::Encoder enc(tsic::EncoderConfig{4, 4, 4}, rng);
  std::mt19937_64 data(12);
  Tensor x = random_tensor({1, 3, 16, 16}, data);
  const Tensor probe = random_tensor(enc.forward(x).shape(), data);
  auto f = [&] { return dot(enc.forward(x), probe); };
  f();
  const Tensor gx = enc.backward(probe);
  for (std::size_t i = 0; i < x.size(); i += 13) {
    CHECK(grad_close(gx[i], numeric_derivative(f, &x[i])));
  }
}

TEST_CASE("generator shapes, range and determinism") {
  tsic::nn::Rng rng(13);
  tsic::Generator gen(tsic::GeneratorConfig{}, rng);
  CHECK(gen.insertion_points() == 5);
  std::mt19937_64 data(14);
  LatentCode y{tsic::quantize_values(random_tensor({1, 64, 4, 4}, data, -3, 3),
                                     QuantizeMode::kEvalRound, nullptr),
               LatentState::kQuantized};
  const tsic::TextEmbedding zero = tsic::TextEmbedding::zero();
  const tsic::ImageTensor a = tsic::generate(y, zero, gen);
  CHECK(a.dims() == tsic::ImageDims{64, 64});
  for (double v : a.pixels().values()) CHECK((v >= -1.0 && v <= 1.0));
  const tsic::ImageTensor b = tsic::generate(y, zero, gen);
  CHECK(tsic::max_abs_diff(a.pixels(), b.pixels()) == 0.0);
  CHECK(gen.masks().size() == 5);
  CHECK(gen.masks()[4].shape() == tsic::Shape{1, 1, 64, 64});

  LatentCode cont = y;
  cont.state = LatentState::kContinuous;
  CHECK_THROWS(tsic::generate(cont, zero, gen));
  LatentCode wrong{Tensor({1, 8, 4, 4}), LatentState::kQuantized};
  CHECK_THROWS(tsic::generate(wrong, zero, gen));
}

TEST_CASE("generator 16x16 latent gives 256x256 image") {
  tsic::nn::Rng rng(15);
  tsic::Generator gen(tiny_generator(), rng);
  LatentCode y{Tensor({1, 4, 16, 16}, 1.0), LatentState::kQuantized};
  const tsic::ImageTensor img =
      tsic::generate(y, tsic::TextEmbedding::zero(), gen);
  CHECK(img.dims() == tsic::ImageDims{256, 256});
}

TEST_CASE("encode/generate shape duality") {
  tsic::nn::Rng rng(16);
  tsic::Encoder enc(tsic::EncoderConfig{4, 4, 4}, rng);
  tsic::Generator gen(tiny_generator(), rng);
  for (auto [h, w] : {std::pair{16, 16}, std::pair{32, 48}, std::pair{80, 16}}) {
    const tsic::ImageTensor img(Tensor({1, 3, h, w}, 0.2));
    const LatentCode y = tsic::quantize(tsic::encode(img, enc),
                                        QuantizeMode::kEvalRound);
    const tsic::ImageTensor out =
        tsic::generate(y, tsic::TextEmbedding::zero(), gen);
    CHECK(out.dims() == img.dims());
  }
}

TEST_CASE("generator sensitivity to a latent element matches finite differences") {
  tsic::nn::Rng rng(17);
  tsic::Generator gen(tiny_generator(), rng);
  std::mt19937_64 data(18);
  Tensor latent = random_tensor({1, 4, 4, 4}, data, -2, 2);
  Tensor text = random_tensor({1, 512, 1, 1}, data);
  const Tensor probe = random_tensor({1, 3, 64, 64}, data);
  for (bool training : {false, true}) {
    CAPTURE(training);
    auto f = [&] { return dot(gen.forward(latent, text, training), probe); };
    f();
    const auto g = gen.backward(probe);
    for (std::size_t i : {std::size_t{0}, std::size_t{21}, std::size_t{63}}) {
      CHECK(grad_close(g.latent[i], numeric_derivative(f, &latent[i])));
    }
    for (std::size_t i : {std::size_t{5}, std::size_t{400}}) {
      CHECK(grad_close(g.text[i], numeric_derivative(f, &text[i])));
    }
  }
}
