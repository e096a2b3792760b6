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

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tsic/container.hpp"
#include "tsic/ssa.hpp"
#include "tsic/text.hpp"

using tsic::SsaBlock;
using tsic::Tensor;
using tsic::TextEmbedding;
using tsic::test::dot;
using tsic::test::grad_close;
using tsic::test::numeric_derivative;
using tsic::test::random_tensor;

namespace {

void set_mask_bias(SsaBlock& b, double v) {
  b.mask_head().weight().value.zero();
  b.mask_head().bias().value.fill(v);
}

}  // namespace

TEST_CASE("stub embeddings are deterministic, 512-d and caption-specific") {
  const auto a = tsic::TextEncoderAdapter::deterministic_stub(3);
  std::set<std::vector<double>> seen;
  for (int i = 0; i < 100; ++i) {
    const std::string cap = "a red circle number " + std::to_string(i) +
                            " on grassy field w" + std::to_string(i * 31);
    const TextEmbedding e = tsic::embed_text(cap, a);
    CHECK(e.vector().size() == 512);
    CHECK(e.kind() == tsic::TextKind::kMatched);
    const TextEmbedding again = tsic::embed_text(cap, a);
    CHECK(std::equal(e.vector().begin(), e.vector().end(),
                     again.vector().begin()));
    for (double v : e.vector()) CHECK((v >= -1.0 && v <= 1.0));
    seen.emplace(e.vector().begin(), e.vector().end());
  }
  CHECK(seen.size() == 100);

  const auto b = tsic::TextEncoderAdapter::deterministic_stub(4);
  const TextEmbedding x = tsic::embed_text("blue square", a);
  const TextEmbedding y = tsic::embed_text("blue square", b);
  CHECK_FALSE(std::equal(x.vector().begin(), x.vector().end(),
                         y.vector().begin()));
  CHECK_THROWS(tsic::embed_text("  ,. ", a));
}

TEST_CASE("zero embeddings") {
  const TextEmbedding z = TextEmbedding::zero();
  CHECK(z.kind() == tsic::TextKind::kZero);
  CHECK(z.vector().size() == 512);
  for (double v : z.vector()) CHECK(v == 0.0);
  std::vector<double> v(512, 0.0);
  v[3] = 1.0;
  CHECK_THROWS(TextEmbedding(v, tsic::TextKind::kZero));
  CHECK_THROWS(TextEmbedding(std::vector<double>(511), tsic::TextKind::kMatched));
  const TextEmbedding m(v, tsic::TextKind::kMatched);
  const TextEmbedding cleared = m.relabeled(tsic::TextKind::kZero);
  for (double c : cleared.vector()) CHECK(c == 0.0);
  CHECK(m.relabeled(tsic::TextKind::kMismatched).vector()[3] == 1.0);
}

TEST_CASE("pretrained backend loads frozen tables or explains the fallback") {
  try {
    tsic::TextEncoderAdapter::pretrained_frozen("/nonexistent/text.bin");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("deterministic_stub") !=
          std::string::npos);
  }
  tsic::test::TempDir dir("textenc");
  std::mt19937_64 rng(1);
  tsic::ArrayContainer c;
  c.put("token_embedding", random_tensor({3, 8, 1, 1}, rng));
  c.put("projection", random_tensor({512, 8, 1, 1}, rng));
  c.meta()["vocab"] = {"red", "circle", "grass"};
  c.save(dir.path() / "enc.bin");
  const auto a =
      tsic::TextEncoderAdapter::pretrained_frozen(dir.path() / "enc.bin");
  CHECK(a.backend() == tsic::TextBackend::kPretrainedFrozen);
  const std::uint32_t digest = a.parameter_digest();
  const TextEmbedding e = tsic::embed_text("Red circle!", a);
  const double expect0 = [&] {
    const Tensor& t = c.get("token_embedding");
    const Tensor& p = c.get("projection");
    double acc = 0.0;
    for (int d = 0; d < 8; ++d) acc += p.at(0, d, 0, 0) * 0.5 *
                                       (t.at(0, d, 0, 0) + t.at(1, d, 0, 0));
    return acc;
  }();
  CHECK(e.vector()[0] == doctest::Approx(expect0).epsilon(1e-12));
  CHECK(a.parameter_digest() == digest);
}

TEST_CASE("mask predictions are bounded and shaped") {
  tsic::nn::Rng rng(5);
  SsaBlock block("ssa", 6, rng);
  std::mt19937_64 data(9);
  std::size_t checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double scale = std::pow(10.0, trial % 5);
    const Tensor x = random_tensor({2, 6, 8, 8}, data, -scale, scale);
    const auto m = block.predict_mask(x);
    CHECK(m.values.shape() == tsic::Shape{2, 1, 8, 8});
    for (double v : m.values.values()) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      ++checked;
    }
  }
  CHECK(checked >= 5000);
  CHECK_THROWS(block.predict_mask(Tensor({1, 5, 8, 8})));

  set_mask_bias(block, 0.0);
  const auto half = block.predict_mask(random_tensor({1, 6, 8, 8}, data));
  for (double v : half.values.values()) CHECK(v == 0.5);
}

TEST_CASE("affine parameters from text") {
  tsic::nn::Rng rng(6);
  SsaBlock block("ssa", 5, rng);
  const Tensor zero({1, 512, 1, 1});
  const auto p = block.affine_from_text(zero);
  CHECK(p.gamma.shape() == tsic::Shape{1, 5, 1, 1});
  for (double v : p.gamma.values()) CHECK(v == 0.0);
  for (double v : p.beta.values()) CHECK(v == 0.0);
  CHECK_THROWS(block.affine_from_text(Tensor({1, 511, 1, 1})));

  std::mt19937_64 data(2);
  Tensor t = random_tensor({1, 512, 1, 1}, data);
  const auto p1 = block.affine_from_text(t);
  const auto p2 = block.affine_from_text(t);
  CHECK(tsic::max_abs_diff(p1.gamma, p2.gamma) == 0.0);

  // Sensitivity through the full transform with the mask held at one.
  set_mask_bias(block, 1e4);
  const Tensor x = random_tensor({1, 5, 3, 3}, data);
  const Tensor probe = random_tensor(x.shape(), data);
  auto f = [&] { return dot(block.transform(x, t, false), probe); };
  f();
  const auto g = block.backward(probe);
  for (int i : {0, 17, 300, 511}) {
    CHECK(grad_close(g.text[i], numeric_derivative(f, &t[i]), 1e-4, 1e-9));
  }
}

TEST_CASE("SSA transform special cases") {
  tsic::nn::Rng rng(7);
  SsaBlock block("ssa", 4, rng);
  std::mt19937_64 data(3);
  const Tensor x = random_tensor({2, 4, 4, 4}, data);
  const Tensor text = random_tensor({2, 512, 1, 1}, data);

  SUBCASE("mask of zero is the identity") {
    set_mask_bias(block, -1e4);
    const Tensor y = block.transform(x, text, true);
    for (double m : block.last_mask().values.values()) REQUIRE(m == 0.0);
    CHECK(tsic::max_abs_diff(y, x) == 0.0);
  }
  SUBCASE("unit gamma, zero beta, unit mask adds the normalized input") {
    set_mask_bias(block, 1e4);
    block.gamma_layer(1).weight().value.zero();
    block.gamma_layer(1).bias().value.fill(1.0);
    block.beta_layer(1).weight().value.zero();
    block.beta_layer(1).bias().value.zero();
    const Tensor y = block.transform(x, text, true);
    for (int c = 0; c < 4; ++c) {
      double mean = 0.0, var = 0.0;
      for (int n = 0; n < 2; ++n) {
        for (int i = 0; i < 16; ++i) mean += x.plane(n, c)[i];
      }
      mean /= 32.0;
      for (int n = 0; n < 2; ++n) {
        for (int i = 0; i < 16; ++i) {
          var += std::pow(x.plane(n, c)[i] - mean, 2);
        }
      }
      var /= 32.0;
      for (int n = 0; n < 2; ++n) {
        for (int i = 0; i < 16; ++i) {
          const double v = x.plane(n, c)[i];
          CHECK(y.plane(n, c)[i] ==
                doctest::Approx(v + (v - mean) / std::sqrt(var + 1e-5))
                    .epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("zero text leaves features unchanged") {
    const Tensor y = block.transform(x, Tensor({2, 512, 1, 1}), true);
    CHECK(tsic::max_abs_diff(y, x) == 0.0);
    const Tensor y_eval = block.transform(x, Tensor({2, 512, 1, 1}), false);
    CHECK(tsic::max_abs_diff(y_eval, x) == 0.0);
  }
  SUBCASE("shape preserved, mismatched batch rejected") {
    CHECK(block.transform(x, text, false).shape() == x.shape());
    CHECK_THROWS(block.transform(x, Tensor({1, 512, 1, 1}), true));
  }
}

TEST_CASE("SSA gradients match finite differences") {
  tsic::nn::Rng rng(8);
  SsaBlock block("ssa", 4, rng);
  std::mt19937_64 data(4);
  // Non-trivial biases so every path carries signal.
  for (int i = 0; i < 2; ++i) {
    for (double& v : block.gamma_layer(i).bias().value.values()) {
      v = 0.3 * (static_cast<double>(data() % 1000) / 500.0 - 1.0);
    }
  }
  Tensor x = random_tensor({2, 4, 4, 4}, data);
  Tensor text = random_tensor({2, 512, 1, 1}, data);
  for (bool training : {true, false}) {
    CAPTURE(training);
    const Tensor probe = random_tensor(x.shape(), data);
    auto f = [&] { return dot(block.transform(x, text, training), probe); };
    tsic::nn::ParameterList params;
    block.collect(params);
    params.zero_grad();
    f();
    const auto g = block.backward(probe);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(grad_close(g.features[i], numeric_derivative(f, &x[i])));
    }
    for (std::size_t i = 0; i < text.size(); i += 11) {
      CHECK(grad_close(g.text[i], numeric_derivative(f, &text[i])));
    }
    for (auto* p : params.params) {
      const std::size_t step = std::max<std::size_t>(1, p->value.size() / 23);
      for (std::size_t i = 0; i < p->value.size(); i += step) {
        CAPTURE(p->name);
        CHECK(grad_close(p->grad[i], numeric_derivative(f, &p->value[i])));
      }
    }
  }
}

TEST_CASE("SSA stack sizes") {
  tsic::nn::Rng rng(1);
  tsic::SsaStack stack("g.ssa", {32, 32, 32, 16, 16}, rng);
  CHECK(stack.size() == 5);
  CHECK(stack[3].channels() == 16);
}
