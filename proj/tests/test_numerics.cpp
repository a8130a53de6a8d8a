#include <cmath>
#include <random>

#include "doctest.h"
#include "mog/numerics/grad_check.hpp"
#include "mog/numerics/ops.hpp"

using namespace mog::num;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

// Weighted sum keeps every output component in the loss with an O(1) coefficient.
Var weighted_sum(Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Var w = out.tape().constant(random_tensor(out.shape(), rng));
  return sum(mul(out, w));
}

}  // namespace

TEST_CASE("matmul examples") {
  Tape tape;
  Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var ones = tape.constant(Tensor::matrix(2, 1, {1, 1}));
  CHECK(matmul(a, ones).value() == Tensor::matrix(2, 1, {3, 7}));

  Var eye = tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  CHECK(matmul(eye, a).value() == a.value());

  Var bad = tape.constant(Tensor::matrix(3, 1, {1, 1, 1}));
  CHECK_THROWS_AS(matmul(a, bad), DimensionError);
}

TEST_CASE("matmul is bilinear over random decompositions") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    Tape tape;
    const std::size_t n = 2 + seed % 3, m = 1 + seed % 4;
    std::vector<Tensor> s, t;
    Tensor ra({3, 3}), rb({3, 3});
    for (std::size_t i = 0; i < n; ++i) ra += s.emplace_back(random_tensor({3, 3}, rng));
    for (std::size_t j = 0; j < m; ++j) rb += t.emplace_back(random_tensor({3, 3}, rng));
    Tensor lhs = matmul(ra, transpose(rb));
    Tensor rhs({3, 3});
    for (const auto& si : s)
      for (const auto& tj : t) rhs += matmul(si, transpose(tj));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-10 * std::max(1.0, max_abs(lhs)));
  }
}

TEST_CASE("softmax examples") {
  Tape tape;
  auto sm = [&](Tensor x) { return softmax(tape.constant(std::move(x))).value(); };
  Tensor half = sm(Tensor::vector({0, 0}));
  CHECK(half[0] == doctest::Approx(0.5));
  CHECK(half[1] == doctest::Approx(0.5));
  CHECK(sm(Tensor::vector({42.0}))[0] == 1.0);
  Tensor q = sm(Tensor::vector({std::log(1.0), std::log(3.0)}));
  CHECK(std::abs(q[0] - 0.25) < 1e-15);
  CHECK(std::abs(q[1] - 0.75) < 1e-15);
  // large inputs stay finite thanks to max subtraction
  CHECK(sm(Tensor::vector({1000.0, 1001.0})).all_finite());
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(7);
  Tape tape;
  for (int axis : {0, 1}) {
    Tensor x = random_tensor({5, 7}, rng, -20, 20);
    Tensor y = softmax(tape.constant(x), axis).value();
    const std::size_t outer = axis == 1 ? 5 : 7, inner = axis == 1 ? 7 : 5;
    for (std::size_t o = 0; o < outer; ++o) {
      double total = 0.0;
      for (std::size_t i = 0; i < inner; ++i) {
        double v = axis == 1 ? y.at(o, i) : y.at(i, o);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("pointwise and normalisation examples") {
  Tape tape;
  CHECK(sigmoid(tape.constant(Tensor::vector({0.0}))).value()[0] == 0.5);
  CHECK(tanh(tape.constant(Tensor::vector({0.0}))).value()[0] == 0.0);

  Var x = tape.constant(Tensor::matrix(1, 4, {3, 3, 3, 3}));
  Var gain = tape.constant(Tensor::vector({1, 1, 1, 1}));
  Var bias = tape.constant(Tensor::vector({0, 0, 0, 0}));
  Tensor y = layer_norm(x, gain, bias).value();
  CHECK(y.all_finite());
  CHECK(max_abs(y) == 0.0);
}

TEST_CASE("dropout is identity when disabled") {
  std::mt19937_64 rng(3);
  Tape tape;
  Var x = tape.constant(random_tensor({4, 4}, rng));
  CHECK(dropout(x, 0.3, false, rng).value() == x.value());
  Tensor d = dropout(x, 0.5, true, rng).value();
  for (std::size_t i = 0; i < d.size(); ++i) CHECK((d[i] == 0.0 || std::abs(d[i] - 2 * x.value()[i]) < 1e-15));
}

TEST_CASE("grad_check closed-form example") {
  Tape tape;
  Var x = tape.variable(Tensor::vector({1, 2}));
  Var f = sum(mul(x, x));
  tape.backward(f);
  CHECK(tape.grad(x) == Tensor::vector({2, 4}));
  double err = grad_check([](Tape&, Var v) { return sum(mul(v, v)); }, Tensor::vector({1, 2}));
  CHECK(err < 1e-7);
}

TEST_CASE("sum of softmax has zero gradient") {
  Tape tape;
  Var x = tape.variable(Tensor::vector({0.3, -1.2, 2.0}));
  tape.backward(sum(softmax(x)));
  CHECK(max_abs(tape.grad(x)) < 1e-15);
}

TEST_CASE("grad_check rejects non-scalar output") {
  CHECK_THROWS_AS(grad_check([](Tape&, Var v) { return v; }, Tensor::vector({1, 2})), DimensionError);
}

TEST_CASE("every differentiable op passes grad_check on 10 seeds") {
  struct Case {
    const char* name;
    std::vector<Shape> shapes;
    ScalarFn fn;
  };
  std::vector<Case> cases = {
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, std::span<const Var> v) { return weighted_sum(matmul(v[0], v[1]), 1); }},
      {"transpose", {{3, 4}}, [](Tape&, std::span<const Var> v) { return weighted_sum(transpose(v[0]), 2); }},
      {"add/sub/mul", {{3, 3}, {3, 3}},
       [](Tape&, std::span<const Var> v) { return weighted_sum(mul(add(v[0], v[1]), sub(v[0], v[1])), 3); }},
      {"affine", {{2, 5}}, [](Tape&, std::span<const Var> v) { return weighted_sum(affine(v[0], -1.5, 0.25), 4); }},
      {"linear", {{4, 3}, {3, 5}, {5}},
       [](Tape&, std::span<const Var> v) { return weighted_sum(linear(v[0], v[1], v[2]), 5); }},
      {"sigmoid", {{3, 4}}, [](Tape&, std::span<const Var> v) { return weighted_sum(sigmoid(v[0]), 6); }},
      {"tanh", {{3, 4}}, [](Tape&, std::span<const Var> v) { return weighted_sum(tanh(v[0]), 7); }},
      {"softmax rows", {{3, 5}}, [](Tape&, std::span<const Var> v) { return weighted_sum(softmax(v[0], 1), 8); }},
      {"softmax cols", {{3, 5}}, [](Tape&, std::span<const Var> v) { return weighted_sum(softmax(v[0], 0), 9); }},
      {"layer_norm", {{3, 6}, {6}, {6}},
       [](Tape&, std::span<const Var> v) { return weighted_sum(layer_norm(v[0], v[1], v[2]), 10); }},
      {"concat", {{2, 3}, {2, 2}},
       [](Tape&, std::span<const Var> v) {
         std::vector<Var> parts{v[0], v[1]};
         std::vector<Var> rows{v[0], v[0]};
         return add(weighted_sum(concat_cols(parts), 11), weighted_sum(concat_rows(rows), 12));
       }},
      {"slice_cols", {{3, 6}}, [](Tape&, std::span<const Var> v) { return weighted_sum(slice_cols(v[0], 2, 3), 13); }},
      {"interleave/group_sum", {{3, 4}, {3, 4}},
       [](Tape&, std::span<const Var> v) {
         std::vector<Var> parts{v[0], v[1]};
         Var stacked = interleave_rows(parts);
         return add(weighted_sum(stacked, 14), weighted_sum(group_sum_rows(tanh(stacked), 2), 15));
       }},
      {"embedding", {{5, 3}},
       [](Tape&, std::span<const Var> v) {
         std::vector<int> ids{4, 0, 4, 2};
         return weighted_sum(embedding(v[0], ids), 16);
       }},
      {"cross_entropy", {{4, 5}},
       [](Tape&, std::span<const Var> v) {
         std::vector<int> targets{1, -1, 4, 0};
         return cross_entropy(v[0], targets, -1);
       }},
      {"mean", {{2, 3}}, [](Tape&, std::span<const Var> v) { return mean(mul(v[0], v[0])); }},
      {"relu", {{3, 3}}, [](Tape&, std::span<const Var> v) { return weighted_sum(relu(v[0]), 17); }},
  };
  for (const auto& c : cases) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed * 31 + 1);
      std::vector<Tensor> inputs;
      for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng));
      auto result = grad_check(c.fn, inputs);
      INFO(c.name << " seed " << seed);
      CHECK(result.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("attention_core gradients with padding and causal masks") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 100);
    AttentionLayout layout;
    layout.batch = 2;
    layout.query_len = 3;
    layout.key_len = 4;
    layout.heads = 2;
    layout.key_lengths = {4, 2};
    layout.causal = seed % 2 == 1;
    if (layout.causal) layout.query_len = layout.key_len = 4;
    std::vector<Tensor> inputs{random_tensor({layout.batch * layout.query_len, 6}, rng),
                               random_tensor({layout.batch * layout.key_len, 6}, rng),
                               random_tensor({layout.batch * layout.key_len, 6}, rng)};
    ScalarFn fn = [layout](Tape&, std::span<const Var> v) {
      return weighted_sum(attention_core(v[0], v[1], v[2], layout), 21);
    };
    auto result = grad_check(fn, inputs);
    CHECK(result.max_relative_error < 1e-4);
  }
}

TEST_CASE("attention_core masks padded keys") {
  Tape tape;
  AttentionLayout layout;
  layout.batch = 1;
  layout.query_len = 1;
  layout.key_len = 3;
  layout.key_lengths = {2};
  Var q = tape.constant(Tensor::matrix(1, 2, {0, 0}));
  Var k = tape.constant(Tensor::matrix(3, 2, {1, 0, 0, 1, 5, 5}));
  Var v = tape.constant(Tensor::matrix(3, 2, {2, 0, 0, 4, 100, 100}));
  Tensor out = attention_core(q, k, v, layout).value();
  CHECK(out == Tensor::matrix(1, 2, {1, 2}));
}

TEST_CASE("tape replays backward into matching gradient shapes") {
  std::mt19937_64 rng(5);
  Tape tape;
  Var a = tape.variable(random_tensor({3, 4}, rng));
  Var b = tape.variable(random_tensor({4}, rng));
  Var out = sum(tanh(add_row(a, b)));
  tape.backward(out);
  CHECK(tape.grad(a).shape() == a.shape());
  CHECK(tape.grad(b).shape() == b.shape());
  CHECK(tape.op_name(out.id()) == "sum");
}

TEST_CASE("shape errors are reported") {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({3, 2}));
  CHECK_THROWS_AS(add(a, b), DimensionError);
  CHECK_THROWS_AS(mul(a, b), DimensionError);
  CHECK_THROWS_AS(add_row(a, tape.constant(Tensor({2}))), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}
