#include <doctest.h>

#include <cmath>
#include <set>

#include "qe/layers.hpp"
#include "qe/ops.hpp"
#include "qe/optim.hpp"
#include "support/gradcases.hpp"
#include "support/oracles.hpp"

using namespace qe;
using oracle::random_tensor;

namespace {

const std::optional<Var<double>> kNoBias;

constexpr double kGradTol = 1e-4;

Tensor<double> t4(Shape s, std::vector<double> v) { return Tensor<double>(std::move(s), std::move(v)); }

}  // namespace

TEST_SUITE("tensor-autograd") {

TEST_CASE("tensor construction checks data length and reshape size") {
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 3}, std::vector<float>(5)), DimensionError);
  Tensor<float> t(Shape{2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.reshaped(Shape{3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped(Shape{4, 2}), DimensionError);
}

TEST_CASE("conv2d identity, zero kernel and hand example") {
  Graph<double> g;
  const Tensor<double> x = random_tensor({2, 1, 5, 4}, 1);
  const Tensor<double> one = t4({1, 1, 1, 1}, {1.0});
  const auto y = conv2d(g.view(x), g.view(one), kNoBias);
  CHECK(y.value() == x);

  const Tensor<double> zero(Shape{3, 1, 3, 3}, 0.0);
  const Tensor<double> bias = t4({3}, {0.5, -2.0, 7.0});
  const auto z = conv2d(g.view(x), g.view(zero), std::optional(g.view(bias)), 1, 1);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(z.value().at(n, c, i, j) == bias[c]);

  const Tensor<double> img = t4({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor<double> diag = t4({1, 1, 2, 2}, {1, 0, 0, 1});
  const auto out = conv2d(g.view(img), g.view(diag), kNoBias);
  CHECK(out.value() == t4({1, 1, 2, 2}, {6, 8, 12, 14}));
}

TEST_CASE("conv2d matches the sliding-window oracle with stride and padding") {
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t pad : {0u, 1u, 2u}) {
      const Tensor<double> x = random_tensor({2, 3, 7, 7}, 10 + stride + pad);
      const Tensor<double> w = random_tensor({4, 3, 3, 3}, 20 + pad);
      const Tensor<double> b = random_tensor({4}, 30);
      Graph<double> g;
      const auto y = conv2d(g.view(x), g.view(w), std::optional(g.view(b)), stride, pad);
      const Tensor<double> ref = oracle::conv2d(x, w, &b, stride, pad);
      REQUIRE(y.shape() == ref.shape());
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv2d rejects bad shapes") {
  Graph<double> g;
  const auto x = g.leaf(Tensor<double>(Shape{1, 2, 6, 6}));
  CHECK_THROWS_AS(conv2d(x, g.leaf(Tensor<double>(Shape{1, 3, 3, 3})), kNoBias), DimensionError);
  CHECK_THROWS_AS(conv2d(x, g.leaf(Tensor<double>(Shape{1, 2, 3, 3})), std::optional(g.leaf(Tensor<double>(Shape{2})))),
                  DimensionError);
  // (6 + 0 - 3) / 2 is not integral.
  CHECK_THROWS_AS(conv2d(x, g.leaf(Tensor<double>(Shape{1, 2, 3, 3})), kNoBias, 2, 0), ConfigError);
}

TEST_CASE("pixel shuffle layout, shape law and inverse pair") {
  const Tensor<double> abcd = t4({1, 4, 1, 1}, {1, 2, 3, 4});
  CHECK(pixel_shuffle(abcd, 2) == t4({1, 1, 2, 2}, {1, 2, 3, 4}));
  CHECK(pixel_shuffle(Tensor<double>(Shape{1, 4, 2, 2}), 2).shape() == Shape{1, 1, 4, 4});

  const Tensor<double> x = random_tensor({2, 8, 3, 5}, 3);
  CHECK(pixel_unshuffle(pixel_shuffle(x, 2), 2) == x);
  CHECK(pixel_shuffle(x, 2) == oracle::depth_to_space(x, 2));
  const Tensor<double> y = random_tensor({2, 2, 6, 9}, 4);
  CHECK(pixel_shuffle(pixel_unshuffle(y, 3), 3) == y);

  CHECK_THROWS_AS(pixel_shuffle(Tensor<double>(Shape{1, 3, 2, 2}), 2), DimensionError);
  CHECK_THROWS_AS(pixel_unshuffle(Tensor<double>(Shape{1, 1, 3, 4}), 2), DimensionError);
}

TEST_CASE("channel attention gate and scalar oracle") {
  Graph<double> g;
  const Tensor<double> x = random_tensor({1, 4, 2, 2}, 5);
  const Tensor<double> z1(Shape{1, 4, 1, 1}), zb1(Shape{1}), z2(Shape{4, 1, 1, 1}), zb2(Shape{4});
  const auto half = channel_attention(g.view(x), g.view(z1), g.view(zb1), g.view(z2), g.view(zb2));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(half.value()[i] == 0.5 * x[i]);

  const Tensor<double> w1 = random_tensor({2, 4, 1, 1}, 6), b1 = random_tensor({2}, 7);
  const Tensor<double> w2 = random_tensor({4, 2, 1, 1}, 8), b2 = random_tensor({4}, 9);
  const auto y = channel_attention(g.view(x), g.view(w1), g.view(b1), g.view(w2), g.view(b2));
  const Tensor<double> ref = oracle::channel_attention(x, w1, b1, w2, b2);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));

  CHECK_THROWS_AS(attention_width(6, 4), ConfigError);
  CHECK(attention_width(32, 4) == 8);
}

TEST_CASE("elementwise ops and losses") {
  Graph<double> g;
  const auto a = g.leaf(t4({2}, {0, 2})), b = g.leaf(t4({2}, {1, 0}));
  CHECK(l2_loss(a, b).value()[0] == 2.5);
  CHECK(l1_loss(a, b).value()[0] == 1.5);
  CHECK(l1_loss(a, a).value()[0] == 0.0);
  const auto r = relu(g.leaf(t4({2}, {-1, 3})));
  CHECK(r.value() == t4({2}, {0, 3}));
  CHECK_THROWS_AS(add(a, g.leaf(Tensor<double>(Shape{3}))), DimensionError);
  CHECK_THROWS_AS(l1_loss(a, g.leaf(Tensor<double>(Shape{3}))), DimensionError);
  const auto cat = concat_channels<double>({g.leaf(Tensor<double>(Shape{1, 2, 2, 2}, 1.0)), g.leaf(Tensor<double>(Shape{1, 1, 2, 2}, 2.0))});
  CHECK(cat.shape() == Shape{1, 3, 2, 2});
  CHECK(cat.value().at(0, 2, 1, 1) == 2.0);
}

TEST_CASE("backward basics: linear map, accumulation, scalar requirement") {
  Graph<double> g;
  const auto x = g.leaf(random_tensor({2, 3}, 1), true);
  g.backward(sum(x));
  for (double v : g.grad(x)->data()) CHECK(v == 1.0);

  Graph<double> g2;
  const auto y = g2.leaf(random_tensor({4}, 2), true);
  g2.backward(sum(add(y, y)));
  for (double v : g2.grad(y)->data()) CHECK(v == 2.0);

  CHECK_THROWS_AS(g2.backward(add(y, y)), UsageError);

  Graph<double> g3;
  const auto z = g3.leaf(random_tensor({4}, 3), true);
  g3.backward(l1_loss(z, z));
  for (double v : g3.grad(z)->data()) CHECK(v == 0.0);
}

TEST_CASE("every primitive passes the finite-difference gradient check") {
  for (const auto& c : oracle::primitive_gradchecks()) {
    CAPTURE(c.name);
    CHECK(c.rel_error < kGradTol);
  }
}

TEST_CASE("adam: zero gradient is a fixed point") {
  ParamStore<double> p{{"w", random_tensor({3}, 1)}};
  const auto before = p;
  AdamState<double> st;
  adam_step(p, ParamStore<double>{{"w", Tensor<double>(Shape{3})}}, st, 1e-3);
  CHECK(p == before);
  for (double v : st.m.at("w").data()) CHECK(v == 0.0);
  for (double v : st.v.at("w").data()) CHECK(v == 0.0);
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step magnitude and monotone descent") {
  ParamStore<double> p{{"w", t4({1}, {0.0})}};
  const ParamStore<double> g{{"w", t4({1}, {1.0})}};
  AdamState<double> st;
  adam_step(p, g, st, 1e-4);
  CHECK(p.at("w")[0] == doctest::Approx(-1e-4 / (1.0 + 1e-8)).epsilon(1e-12));
  const double after_one = p.at("w")[0];
  adam_step(p, g, st, 1e-4);
  CHECK(p.at("w")[0] < after_one);
  CHECK_THROWS_AS(adam_step(p, ParamStore<double>{{"w", Tensor<double>(Shape{2})}}, st, 1e-4), DimensionError);
}

TEST_CASE("learning-rate schedule") {
  const LrSchedule s{1e-4, 1000};
  CHECK(lr_at(s, 500) == 1e-4);
  CHECK(lr_at(s, 700) == 5e-5);
  CHECK(lr_at(s, 950) == 2.5e-5);
  CHECK(lr_at(s, 599) == 1e-4);
  CHECK(lr_at(s, 600) == 5e-5);
  CHECK(lr_at(s, 900) == 2.5e-5);
  CHECK_THROWS_AS(lr_at(s, 1000), UsageError);
  CHECK_THROWS_AS(lr_at(s, -1), UsageError);

  for (std::int64_t total : {1, 2, 3, 7, 10, 99, 1001}) {
    const LrSchedule sc{1e-4, total};
    std::set<double> seen;
    double prev = 1.0;
    for (std::int64_t i = 0; i < total; ++i) {
      const double lr = lr_at(sc, i);
      CHECK(lr <= prev);
      prev = lr;
      seen.insert(lr);
      const bool past_first = static_cast<double>(i) >= 0.6 * static_cast<double>(total) - 1e-9;
      const bool past_second = static_cast<double>(i) >= 0.9 * static_cast<double>(total) - 1e-9;
      CHECK(lr == (past_second ? 2.5e-5 : past_first ? 5e-5 : 1e-4));
    }
    for (double v : seen) CHECK((v == 1e-4 || v == 5e-5 || v == 2.5e-5));
  }
}

}  // TEST_SUITE
