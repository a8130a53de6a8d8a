#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "mog/core/expr.hpp"

using namespace mog::core;

namespace {

const char* kFiveLeaves = "((({a})->a U ({b})->b)->b U ({c})->c)->a U (({d})->d U ({e})->e)->d";
const char* kRomans =
    "((({Do})->Do U ({do})->do)->do U (({Romans})->Romans U ({the})->the)->Romans)->do U ({as})->as";

ExtensionExpr random_tree(std::mt19937_64& rng, std::size_t& next, std::size_t leaves) {
  if (leaves == 1) return ExtensionExpr::leaf("w" + std::to_string(next++));
  std::uniform_int_distribution<std::size_t> split(1, leaves - 1);
  const std::size_t k = split(rng);
  ExtensionExpr l = random_tree(rng, next, k);
  ExtensionExpr r = random_tree(rng, next, leaves - k);
  auto pick = [&rng](const ExtensionExpr& e) {
    std::vector<std::string> toks;
    std::vector<const ExtensionExpr*> stack{&e};
    while (!stack.empty()) {
      const ExtensionExpr* x = stack.back();
      stack.pop_back();
      if (x->is_leaf()) {
        toks.push_back(x->token());
      } else {
        stack.push_back(&x->left());
        stack.push_back(&x->right());
      }
    }
    std::sort(toks.begin(), toks.end());
    return toks[std::uniform_int_distribution<std::size_t>(0, toks.size() - 1)(rng)];
  };
  std::string s = pick(l), t = pick(r);
  return ExtensionExpr::join(std::move(l), s, std::move(r), t);
}

}  // namespace

TEST_CASE("extend two singletons") {
  MoGraph g({"a", "b"});
  Extension x = g.extend(g.singleton(0), 0, g.singleton(1), 1);
  CHECK(g.edge(x.edge).order == 2);
  CHECK(g.subgraph(x.subgraph).order == 2);
  CHECK(g.max_subgraph_order() == 2);
  const OrderedEdge& e = g.edge(x.edge);
  CHECK(e.source == 0);
  CHECK(e.target == 1);
  CHECK(e.source_subgraph == g.singleton(0));
  CHECK(e.target_subgraph == g.singleton(1));
  CHECK(e.related_subgraph == x.subgraph);
}

TEST_CASE("extend rejects bad attach nodes and unknown ids") {
  MoGraph g({"a", "b", "c"});
  CHECK_THROWS_AS(g.extend(g.singleton(0), 1, g.singleton(1), 1), GraphError);
  CHECK_THROWS_AS(g.extend(g.singleton(0), 0, 99, 1), GraphError);
  Extension ab = g.extend(g.singleton(0), 0, g.singleton(1), 1);
  // overlapping node sets need the explicit flag
  CHECK_THROWS_AS(g.extend(ab.subgraph, 0, g.singleton(1), 1), GraphError);
  Extension loop = g.extend(ab.subgraph, 1, ab.subgraph, 0, ExtendMode::allow_overlap);
  CHECK(g.subgraph(loop.subgraph).order == 2);
  CHECK(g.edge(loop.edge).order == 2);
  CHECK(g.subgraph(loop.subgraph).edges.size() == 2);
}

TEST_CASE("repeated generation is interned and counted") {
  MoGraph g({"a", "b"});
  Extension first = g.extend(g.singleton(0), 0, g.singleton(1), 1);
  Extension again = g.extend(g.singleton(0), 0, g.singleton(1), 1);
  CHECK_FALSE(first.repeated);
  CHECK(again.repeated);
  CHECK(first.edge == again.edge);
  CHECK(g.edges().size() == 1);
  CHECK(g.edge(first.edge).generated == 2);
  CHECK(g.subgraph(first.subgraph).generated == 2);
  CHECK(g.generation_sequence().size() == 2);
}

TEST_CASE("max_subgraph_order of an edgeless graph") {
  MoGraph g({"x", "y", "z"});
  CHECK(g.max_subgraph_order() == 1);
}

TEST_CASE("five leaf expression") {
  auto r = eval_expr(parse_expr(kFiveLeaves));
  CHECK(r.edge_orders == std::vector<std::size_t>{2, 3, 2, 5});
  CHECK(r.graph.subgraph(r.root).order == 5);
  CHECK(r.graph.max_subgraph_order() == 5);
  // a->b, b->c, d->e, a->d
  std::vector<std::pair<std::string, std::string>> pairs;
  for (EdgeId id : r.graph.generation_sequence()) {
    const auto& e = r.graph.edge(id);
    pairs.emplace_back(r.graph.nodes()[e.source].token, r.graph.nodes()[e.target].token);
  }
  CHECK(pairs == std::vector<std::pair<std::string, std::string>>{{"a", "b"}, {"b", "c"}, {"d", "e"}, {"a", "d"}});
}

TEST_CASE("syntax tree example") {
  auto r = eval_expr(parse_expr(kRomans));
  CHECK(r.graph.subgraph(r.root).order == 5);
  CHECK(r.graph.subgraph(r.root).edges.size() == 4);
  CHECK(r.edge_orders == std::vector<std::size_t>{2, 2, 4, 5});
}

TEST_CASE("single leaf and left-linear chains") {
  auto single = eval_expr(ExtensionExpr::leaf("solo"));
  CHECK(single.graph.subgraph(single.root).order == 1);
  CHECK(single.edge_orders.empty());

  for (std::size_t n = 2; n <= 9; ++n) {
    ExtensionExpr chain = ExtensionExpr::leaf("t0");
    for (std::size_t i = 1; i < n; ++i) {
      const std::string prev = "t" + std::to_string(i - 1), cur = "t" + std::to_string(i);
      chain = ExtensionExpr::join(std::move(chain), prev, ExtensionExpr::leaf(cur), cur);
    }
    auto r = eval_expr(chain);
    std::vector<std::size_t> expected;
    for (std::size_t k = 2; k <= n; ++k) expected.push_back(k);
    CHECK(r.edge_orders == expected);
  }
}

TEST_CASE("regrouping three leaves changes the edge multiset") {
  // ((a U b) U c) vs (a U (b U c)), both ending on a single order-3 subgraph
  auto left = eval_expr(parse_expr("(({a})->a U ({b})->b)->b U ({c})->c"));
  auto right = eval_expr(parse_expr("({a})->a U (({b})->b U ({c})->c)->b"));
  auto edge_set = [](const EvalResult& r) {
    std::multiset<std::tuple<std::string, std::string, std::size_t>> out;
    for (const auto& e : r.graph.edges())
      out.emplace(r.graph.nodes()[e.source].token, r.graph.nodes()[e.target].token, e.order);
    return out;
  };
  CHECK(edge_set(left) != edge_set(right));
  CHECK(parse_expr("(({a})->a U ({b})->b)->b U ({c})->c") != parse_expr("({a})->a U (({b})->b U ({c})->c)->b"));
}

TEST_CASE("swapping children flips the generated edge") {
  auto ab = eval_expr(parse_expr("({a})->a U ({b})->b"));
  auto ba = eval_expr(parse_expr("({b})->b U ({a})->a"));
  const auto& e1 = ab.graph.edges().front();
  const auto& e2 = ba.graph.edges().front();
  CHECK(ab.graph.nodes()[e1.source].token == "a");
  CHECK(ba.graph.nodes()[e2.source].token == "b");
}

TEST_CASE("parse and print") {
  auto one = parse_expr("({a})->a U ({b})->b");
  CHECK_FALSE(one.is_leaf());
  CHECK(one.left().is_leaf());
  CHECK(one.right().is_leaf());

  auto fig = parse_expr(kFiveLeaves);
  CHECK(parse_expr(print_expr(fig)) == fig);
  CHECK(print_expr(fig) == kFiveLeaves);

  try {
    parse_expr("({a})->");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.column() == 8);
  }
  CHECK_THROWS_AS(parse_expr("{a"), ParseError);
  CHECK_THROWS_AS(parse_expr("({a})->a ({b})->b"), ParseError);
  CHECK_THROWS_AS(parse_expr("{a} extra"), ParseError);
}

TEST_CASE("eval rejects attach tokens outside the subgraph") {
  CHECK_THROWS_AS(eval_expr(parse_expr("({a})->b U ({b})->b")), GraphError);
  CHECK_THROWS_AS(eval_expr(parse_expr("(({a})->a U ({a})->a)->a U ({c})->c")), GraphError);
}

TEST_CASE("random trees satisfy the extension invariants") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::size_t next = 0;
    ExtensionExpr e = random_tree(rng, next, n);
    CHECK(parse_expr(print_expr(e)) == e);
    auto r = eval_expr(e);
    CHECK(r.graph.edges().size() == n - 1);
    CHECK(r.graph.subgraph(r.root).order == n);
    for (std::size_t i = 0; i < r.graph.edges().size(); ++i) {
      const auto& edge = r.graph.edges()[i];
      const auto& src = r.graph.subgraph(edge.source_subgraph);
      const auto& tgt = r.graph.subgraph(edge.target_subgraph);
      CHECK(edge.order == src.order + tgt.order);
      CHECK(edge.order == r.graph.subgraph(edge.related_subgraph).order);
      // edge i is generated i-th and its related subgraph is registered after every earlier one
      CHECK(r.graph.generation_sequence()[i] == i);
      if (i > 0) CHECK(edge.related_subgraph > r.graph.edges()[i - 1].related_subgraph);
      for (EdgeId inner : src.edges) CHECK(inner < i);
    }
    for (const auto& s : r.graph.subgraphs()) {
      CHECK(s.order == s.nodes.size());
      for (EdgeId id : s.edges) {
        CHECK(s.contains(r.graph.edge(id).source));
        CHECK(s.contains(r.graph.edge(id).target));
      }
    }
  }
}

TEST_CASE("json dump carries 6-tuples") {
  auto r = eval_expr(parse_expr("({a})->a U ({b})->b"));
  auto j = r.graph.to_json();
  CHECK(j["nodes"].size() == 2);
  CHECK(j["edges"][0]["tuple"] == nlohmann::json::array({0, 1, 0, 1, 2, 2}));
  CHECK(j["max_subgraph_order"] == 2);
}
