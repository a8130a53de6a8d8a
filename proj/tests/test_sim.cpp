#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "mog/sim/order_sim.hpp"

using namespace mog::sim;

namespace {

// Subgraphs as node bitmasks; a join is any pair of disjoint members.
using MaskSet = std::vector<bool>;

MaskSet join_disjoint(const MaskSet& a, const MaskSet& b, std::size_t len) {
  const std::uint32_t full = (1u << len) - 1;
  MaskSet out(a.size(), false);
  for (std::uint32_t x = 1; x <= full; ++x) {
    if (!a[x]) continue;
    const std::uint32_t rest = full & ~x;
    for (std::uint32_t y = rest; y; y = (y - 1) & rest)
      if (b[y]) out[x | y] = true;
  }
  return out;
}

MaskSet mask_union(MaskSet a, const MaskSet& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = a[i] || b[i];
  return a;
}

MaskSet singletons(std::size_t len) {
  MaskSet s(std::size_t{1} << len, false);
  for (std::size_t i = 0; i < len; ++i) s[std::size_t{1} << i] = true;
  return s;
}

OrderSet orders_of(const MaskSet& s) {
  std::set<std::size_t> o;
  for (std::uint32_t m = 1; m < s.size(); ++m)
    if (s[m]) o.insert(std::popcount(m));
  return {o.begin(), o.end()};
}

std::size_t max_popcount(const MaskSet& s) {
  const OrderSet o = orders_of(s);
  return o.empty() ? 0 : o.back();
}

std::vector<std::size_t> brute_san(std::size_t layers, std::size_t len) {
  std::vector<std::size_t> out;
  MaskSet s = singletons(len);
  bool fixed = false;
  for (std::size_t i = 1; i <= layers; ++i) {
    if (!fixed) {
      MaskSet next = mask_union(s, join_disjoint(s, s, len));
      fixed = next == s;
      s = std::move(next);
    }
    out.push_back(max_popcount(s));
  }
  return out;
}

std::vector<std::size_t> pow_law(std::size_t layers, std::size_t len) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i <= layers; ++i) out.push_back(std::min<std::size_t>(std::size_t{1} << i, len));
  return out;
}

// Derivations are named strings; the layer tag keeps pairings from different
// layers distinct. Only orders ≤ len are formed.
using Derivs = std::map<std::string, std::size_t>;  // name -> order

void pair_into(Derivs& out, const Derivs& a, const Derivs& b, const std::string& tag, std::size_t cap) {
  for (const auto& [na, oa] : a)
    for (const auto& [nb, ob] : b)
      if (oa + ob <= cap) out.emplace(tag + "(" + na + "," + nb + ")", oa + ob);
}

std::map<std::size_t, std::size_t> histogram(const Derivs& d) {
  std::map<std::size_t, std::size_t> h;
  for (const auto& [_, o] : d) ++h[o];
  return h;
}

std::vector<std::map<std::size_t, std::size_t>> enumerate_baseline(std::size_t layers, std::size_t len) {
  Derivs full{{"w", 1}};
  std::vector<std::map<std::size_t, std::size_t>> out{histogram(full)};
  for (std::size_t i = 1; i <= layers; ++i) {
    Derivs next = full;
    pair_into(next, full, full, "L" + std::to_string(i), len);
    full = std::move(next);
    out.push_back(histogram(full));
  }
  return out;
}

std::vector<std::map<std::size_t, std::size_t>> enumerate_split(std::size_t layers, std::size_t len) {
  Derivs prev, incr{{"w", 1}};
  std::vector<std::map<std::size_t, std::size_t>> out{histogram(incr)};
  for (std::size_t i = 1; i <= layers; ++i) {
    const std::string tag = "L" + std::to_string(i);
    Derivs fresh;
    pair_into(fresh, incr, incr, tag + "hi", len);
    pair_into(fresh, prev, incr, tag + "mid", len);
    pair_into(fresh, incr, prev, tag + "mid", len);
    Derivs low = prev;  // linear pass: same derivations, nothing paired
    Derivs next_prev = low;
    next_prev.insert(incr.begin(), incr.end());
    prev = std::move(next_prev);
    incr = std::move(fresh);
    Derivs all = prev;
    all.insert(incr.begin(), incr.end());
    out.push_back(histogram(all));
  }
  return out;
}

std::size_t at(const std::map<std::size_t, std::size_t>& h, std::size_t o) {
  auto it = h.find(o);
  return it == h.end() ? 0 : it->second;
}

}  // namespace

TEST_CASE("interval arithmetic") {
  OrderInterval a(1, 2), b(2, 4);
  CHECK(OrderInterval::sum(a, b, 100) == OrderInterval(3, 6));
  CHECK(OrderInterval::sum(a, b, 5) == OrderInterval(3, 5));
  CHECK(OrderInterval::sum(b, b, 3).empty());
  CHECK(OrderInterval::sum(OrderInterval::none(), a, 10).empty());
  CHECK(OrderInterval::hull(a, OrderInterval(5, 7)) == OrderInterval(1, 7));
  CHECK(OrderInterval::hull(OrderInterval::none(), a) == a);
  CHECK_THROWS(OrderInterval(0, 1));
  CHECK_THROWS(OrderInterval(3, 2));
  CHECK(to_string(b) == "[2,4]");
}

TEST_CASE("san examples") {
  CHECK(simulate_san(3, 100).max_orders() == std::vector<std::size_t>{2, 4, 8});
  auto empty = simulate_san(0, 7);
  CHECK(empty.rows.empty());
  CHECK(empty.embedding_order == 1);
  CHECK(simulate_san(6, 10).max_orders() == std::vector<std::size_t>{2, 4, 8, 10, 10, 10});
  CHECK(brute_san(6, 10) == std::vector<std::size_t>{2, 4, 8, 10, 10, 10});
  CHECK_THROWS(simulate_san(2, 0));
}

TEST_CASE("san power law against bitmask enumeration") {
  for (std::size_t len : {1, 2, 3, 4, 5, 7, 10, 13, 16}) {
    CAPTURE(len);
    auto trace = simulate_san(10, len);
    CHECK(trace.max_orders() == pow_law(10, len));
    CHECK(trace.max_orders() == brute_san(10, len));
  }
  for (std::size_t len : {4, 10, 16, 33, 64}) CHECK(simulate_san(10, len).max_orders() == pow_law(10, len));
}

TEST_CASE("san exact sets match the bitmask oracle and never shrink") {
  const std::size_t len = 12;
  auto trace = simulate_san(5, len);
  MaskSet s = singletons(len);
  OrderSet last{1};
  for (const auto& row : trace.rows) {
    s = mask_union(s, join_disjoint(s, s, len));
    const auto& exact = *row.slot("full").exact;
    CHECK(exact == orders_of(s));
    CHECK(std::includes(exact.begin(), exact.end(), last.begin(), last.end()));
    CHECK(exact.back() <= len);
    last = exact;
  }
  CHECK_FALSE(simulate_san(2, 17).rows[0].slot("full").exact.has_value());
}

TEST_CASE("rnn examples and oracle") {
  auto one = simulate_rnn(1, 5);
  CHECK(one.max_orders() == std::vector<std::size_t>{1, 2, 3, 4, 5});
  CHECK(simulate_rnn(1, 1).max_orders() == std::vector<std::size_t>{1});

  for (std::size_t len = 1; len <= 8; ++len) {
    for (std::size_t layers = 1; layers <= 3; ++layers) {
      auto trace = simulate_rnn(layers, len);
      REQUIRE(trace.rows.size() == layers * len);
      // bitmask composition of the two iteration rules
      std::vector<MaskSet> below;
      for (std::size_t k = 1; k <= layers; ++k) {
        std::vector<MaskSet> cur(len + 1, MaskSet(std::size_t{1} << len, false));
        for (std::size_t t = 1; t <= len; ++t) {
          MaskSet in(std::size_t{1} << len, false);
          if (k == 1) {
            in[std::size_t{1} << (t - 1)] = true;
          } else {
            in = below[t];
          }
          cur[t] = mask_union(mask_union(in, cur[t - 1]), join_disjoint(in, cur[t - 1], len));
          const auto& row = trace.rows[(k - 1) * len + (t - 1)];
          CHECK(row.layer == k);
          CHECK(row.step == t);
          CHECK(row.max_order == t);
          CHECK(max_popcount(cur[t]) == t);
          CHECK(*row.slot("state").exact == orders_of(cur[t]));
        }
        below = std::move(cur);
      }
    }
  }
  for (std::size_t len : {4, 10, 16, 64}) CHECK(simulate_rnn(1, len).max_orders().back() == len);
}

TEST_CASE("split: first layer and the stated intervals") {
  auto trace = simulate_split(3, 100);
  const auto& r1 = trace.rows[0];
  CHECK(r1.slot("prev_in").interval.empty());
  CHECK(r1.slot("high").interval == OrderInterval(2, 2));
  CHECK(r1.slot("middle").interval.empty());
  CHECK(r1.slot("low").interval.empty());
  CHECK(*r1.stated_high == OrderInterval(1, 2));
  CHECK_FALSE(r1.stated_middle.has_value());

  const auto& r3 = trace.rows[2];
  CHECK(*r3.stated_high == OrderInterval(4, 8));
  CHECK(*r3.stated_middle == OrderInterval(2, 4));
  CHECK(*r3.stated_low == OrderInterval(1, 2));
  CHECK(r3.slot("high").interval == OrderInterval(6, 8));
  CHECK(r3.slot("middle").interval == OrderInterval(4, 6));
  CHECK(r3.slot("low").interval == OrderInterval(1, 2));
  CHECK(r3.slot("full").interval == OrderInterval(1, 8));
}

TEST_CASE("split exact sets against bitmask enumeration on 16 nodes") {
  const std::size_t len = 16;
  auto trace = simulate_split(5, len);
  auto san = simulate_san(5, len);
  MaskSet prev(std::size_t{1} << len, false), incr = singletons(len);
  for (std::size_t i = 1; i <= 5; ++i) {
    CAPTURE(i);
    const auto& row = trace.rows[i - 1];
    MaskSet high = join_disjoint(incr, incr, len);
    MaskSet middle = join_disjoint(prev, incr, len);
    CHECK(*row.slot("high").exact == orders_of(high));
    CHECK(*row.slot("middle").exact == orders_of(middle));
    CHECK(*row.slot("low").exact == orders_of(prev));
    MaskSet next_prev = mask_union(prev, incr);
    MaskSet next_incr = mask_union(high, middle);
    const OrderSet full = orders_of(mask_union(next_prev, next_incr));
    CHECK(*row.slot("full").exact == full);
    // the split re-partitions the orders a plain layer would reach
    CHECK(full == *san.rows[i - 1].slot("full").exact);
    CHECK(row.max_order == san.rows[i - 1].max_order);
    // intervals are the hull of the exact sets here (no gaps appear)
    for (const char* name : {"high", "middle", "low", "full"}) {
      const auto& slot = row.slot(name);
      if (slot.exact->empty()) {
        CHECK(slot.interval.empty());
      } else {
        CHECK(slot.interval == OrderInterval(slot.exact->front(), slot.exact->back()));
      }
    }
    prev = std::move(next_prev);
    incr = std::move(next_incr);
  }
}

TEST_CASE("all traces respect the length cap") {
  for (Regime r : {Regime::san, Regime::rnn, Regime::split}) {
    for (std::size_t len : {1, 3, 9, 40}) {
      auto trace = simulate(r, 7, len);
      for (const auto& row : trace.rows) {
        CHECK(row.max_order <= len);
        for (const auto& s : row.slots)
          if (!s.interval.empty()) CHECK(s.interval.hi() <= len);
      }
    }
  }
  CHECK(parse_regime("split") == Regime::split);
  CHECK_THROWS(parse_regime("cnn"));
}

TEST_CASE("derivation counts against explicit enumeration") {
  const std::size_t len = 16;
  auto base = derivation_counts(Regime::san, 4, len);
  auto split = derivation_counts(Regime::split, 4, len);
  auto base_oracle = enumerate_baseline(4, len);
  auto split_oracle = enumerate_split(4, len);
  for (std::size_t i = 0; i <= 4; ++i) {
    for (std::size_t o = 1; o <= len; ++o) {
      CHECK(base[i][o] == at(base_oracle[i], o));
      CHECK(split[i][o] == at(split_oracle[i], o));
    }
  }
  CHECK(base[3][2] == 3);
  CHECK(base[3][3] == 6);
  CHECK(base[3][4] == 9);
  CHECK(split[3][2] == 1);
  CHECK(split[3][3] == 2);
  CHECK(split[3][4] == 5);
}

TEST_CASE("repetition_count examples") {
  auto san = simulate_san(4, 16);
  auto split = simulate_split(4, 16);
  CHECK(repetition_count(san, 1, 0) == 1);
  CHECK(repetition_count(split, 1, 0) == 1);
  CHECK(repetition_count(split, 2, 3) < repetition_count(san, 2, 3));
  Count last = 0;
  for (std::size_t i = 1; i <= 4; ++i) {
    CHECK(repetition_count(san, 2, i) >= last);
    last = repetition_count(san, 2, i);
  }
  for (std::size_t i = 2; i <= 4; ++i)
    for (std::size_t o = 2; o <= (std::size_t{1} << (i - 1)); ++o)
      CHECK(repetition_count(split, o, i) < repetition_count(san, o, i));
  CHECK_THROWS(repetition_count(san, 2, 5));
}

TEST_CASE("split low path adds no derivations") {
  const std::size_t len = 16;
  auto trace = simulate_split(5, len);
  auto counts = derivation_counts(Regime::split, 5, len);
  for (std::size_t i = 2; i <= 5; ++i) {
    const auto& row = trace.rows[i - 1];
    const auto& fresh = *row.slot("incr_out").exact;
    for (std::size_t o : *row.slot("prev_in").exact)
      if (!std::binary_search(fresh.begin(), fresh.end(), o)) CHECK(counts[i][o] == counts[i - 1][o]);
  }
}

TEST_CASE("rnn derivation counts against explicit enumeration") {
  const std::size_t len = 5;
  auto counts = derivation_counts(Regime::rnn, 2, len);
  std::vector<Derivs> below;
  for (std::size_t k = 1; k <= 2; ++k) {
    std::vector<Derivs> cur(len + 1);
    for (std::size_t t = 1; t <= len; ++t) {
      Derivs in = k == 1 ? Derivs{{"w" + std::to_string(t), 1}} : below[t];
      Derivs s = in;
      s.insert(cur[t - 1].begin(), cur[t - 1].end());
      pair_into(s, in, cur[t - 1], "k" + std::to_string(k) + "t" + std::to_string(t), t);
      cur[t] = std::move(s);
    }
    auto h = histogram(cur[len]);
    for (std::size_t o = 1; o <= len; ++o) CHECK(counts[k][o] == at(h, o));
    below = std::move(cur);
  }
}

TEST_CASE("json and csv output") {
  auto j = to_json(simulate_split(3, 16));
  CHECK(j["regime"] == "split");
  CHECK(j["rows"].size() == 3);
  CHECK(j["rows"][2]["slots"]["high"]["interval"] == nlohmann::json::array({6, 8}));
  CHECK(j["rows"][2]["stated"]["middle"] == nlohmann::json::array({2, 4}));
  CHECK(j["rows"][2]["stated"]["diverges"]["middle"] == true);
  CHECK(j["rows"][0]["slots"]["middle"]["interval"].is_null());
  const std::string csv = to_csv(simulate_san(2, 4));
  CHECK(csv.rfind("regime,layer,step,slot,lo,hi,max_order\n", 0) == 0);
  CHECK(csv.find("san,2,0,full,1,4,4\n") != std::string::npos);
}
