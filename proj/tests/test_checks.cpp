#include <cmath>
#include <random>

#include "doctest.h"
#include "mog/checks/decomposition.hpp"
#include "mog/numerics/ops.hpp"

using namespace mog::checks;
namespace num = mog::num;

namespace {

Tensor random_tensor(num::Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& x : t.data()) x = u(rng);
  return t;
}

}  // namespace

TEST_CASE("gate linearity") {
  std::mt19937_64 rng(1);
  const std::size_t d = 8;
  Tensor w = random_tensor({d, d}, rng), u = random_tensor({d, d}, rng), b = random_tensor({d}, rng);
  auto one = check_gate_linearity(w, u, b, {random_tensor({d}, rng)}, {random_tensor({d}, rng)});
  CHECK(one.pass);
  CHECK(one.max_rel_error < 1e-15);
  auto r = check_gate_linearity(w, u, b, {random_tensor({d}, rng), random_tensor({d}, rng)},
                                {random_tensor({d}, rng), random_tensor({d}, rng), random_tensor({d}, rng)});
  CHECK(r.pass);
  CHECK(r.max_rel_error < 1e-12);
  auto zero = check_gate_linearity(w, u, Tensor({d}), {Tensor({d})}, {Tensor({d}), Tensor({d})});
  CHECK(zero.pass);
  CHECK(zero.max_abs_error == 0.0);
  CHECK_THROWS(check_gate_linearity(w, u, b, {}, {Tensor({d})}));
}

TEST_CASE("bilinear expansion") {
  std::mt19937_64 rng(2);
  auto r = check_bilinear_expansion({random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
                                    {random_tensor({5, 4}, rng)});
  CHECK(r.pass);
  CHECK_THROWS_AS(check_bilinear_expansion({random_tensor({3, 4}, rng)}, {random_tensor({3, 5}, rng)}),
                  num::DimensionError);
}

TEST_CASE("four-part score decomposition") {
  std::mt19937_64 rng(3);
  Tensor prev = random_tensor({5, 16}, rng), incr = random_tensor({5, 16}, rng);
  Tensor wq = random_tensor({16, 16}, rng), wk = random_tensor({16, 16}, rng);
  CHECK(check_four_part(prev, incr, wq, wk).max_rel_error < 1e-10);
  // prev = 0: full scores are exactly the incr block
  auto z = check_four_part(Tensor({5, 16}), incr, wq, wk);
  CHECK(z.max_abs_error == 0.0);
  CHECK(check_four_part(prev, Tensor({5, 16})).max_abs_error == 0.0);
  CHECK_THROWS_AS(check_four_part(prev, random_tensor({4, 16}, rng)), num::DimensionError);
  // the identity is on scores: softmax does not split the same way
  Tensor full = prev;
  full += incr;
  Tensor lhs = num::matmul(full, num::transpose(full));
  Tensor p1 = num::matmul(prev, num::transpose(prev)), p2 = num::matmul(incr, num::transpose(incr));
  auto sm = [](Tensor t) {
    Tensor l = num::log_softmax_rows(t);
    for (double& x : l.data()) x = std::exp(x);
    return l;
  };
  Tensor parts = sm(p1);
  parts += sm(p2);
  CHECK(num::max_abs_diff(sm(lhs), parts) > 1e-3);
}

TEST_CASE("distribution law separates linear from nonlinear relations") {
  std::mt19937_64 rng(4);
  const std::size_t d = 6;
  Tensor w = random_tensor({d, d}, rng), u = random_tensor({d, d}, rng);
  auto matvec = [](const Tensor& m, const Tensor& v) { return num::matmul(m, v.reshaped({v.size(), 1})).reshaped({v.size()}); };
  RelationFn gate = [&](const Tensor& x, const Tensor& y) {
    Tensor r = matvec(w, x);
    r += matvec(u, y);
    return r;
  };
  RelationFn dot = [](const Tensor& x, const Tensor& y) { return num::matmul(x.reshaped({1, x.size()}), y.reshaped({y.size(), 1})); };
  RelationFn squash = [](const Tensor& x, const Tensor& y) {
    Tensor r = x;
    r += y;
    for (double& v : r.data()) v = std::tanh(v);
    return r;
  };
  std::vector<Tensor> a{random_tensor({d}, rng), random_tensor({d}, rng)};
  std::vector<Tensor> b{random_tensor({d}, rng), random_tensor({d}, rng), random_tensor({d}, rng)};

  auto g = check_distribution_law(gate, a, b, {}, true, 9);
  CHECK(g.pass);
  CHECK(*g.non_commutative);
  CHECK_FALSE(check_distribution_law(gate, a, b, {}, false, 9).pass);  // needs the 1/m, 1/n scaling
  auto dp = check_distribution_law(dot, a, b);
  CHECK(dp.pass);
  CHECK_FALSE(*dp.non_commutative);
  auto t = check_distribution_law(squash, a, b);
  CHECK_FALSE(t.pass);
  CHECK(t.max_rel_error > 1e-3);
  CHECK_FALSE(*t.non_commutative);

  // explicit weights: halving every w_ij halves the right side
  Tensor half({2, 3}, 0.5);
  CHECK_FALSE(check_distribution_law(dot, a, b, half).pass);
  Tensor ones({2, 3}, 1.0);
  CHECK(check_distribution_law(dot, a, b, ones).pass);
  CHECK_THROWS(check_distribution_law(dot, a, b, Tensor({3, 2}, 1.0)));
}

TEST_CASE("suites") {
  for (const char* s : {"gate", "bilinear", "four-part", "distlaw"}) {
    auto reports = run_suite(s, 10);
    CHECK_FALSE(reports.empty());
    for (const auto& r : reports) {
      CAPTURE(r.claim);
      CAPTURE(r.instance);
      CHECK(r.pass == r.expect_pass);
      CHECK(r.pass == (r.max_rel_error <= r.tolerance));
    }
  }
  auto all = run_suite("all", 3);
  CHECK(all.front().to_json()["claim"] == "gate");
  CHECK_THROWS(run_suite("eq99", 1));
}
