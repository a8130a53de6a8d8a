#include "mog/sim/order_sim.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mog::sim {

namespace {

// Presence bitmap indexed by order, 0..cap.
using Presence = std::vector<bool>;

Presence singleton_set(std::size_t cap, std::size_t order) {
  Presence p(cap + 1, false);
  if (order <= cap) p[order] = true;
  return p;
}

Presence set_sum(const Presence& a, const Presence& b, std::size_t cap) {
  Presence out(a.size(), false);
  for (std::size_t x = 1; x < a.size(); ++x) {
    if (!a[x]) continue;
    for (std::size_t y = 1; y < b.size() && x + y <= cap; ++y)
      if (b[y]) out[x + y] = true;
  }
  return out;
}

Presence set_union(const Presence& a, const Presence& b) {
  Presence out(a.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] || b[i];
  return out;
}

OrderSet to_order_set(const Presence& p) {
  OrderSet out;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i]) out.push_back(i);
  return out;
}

std::size_t max_of(const Presence& p) {
  for (std::size_t i = p.size(); i-- > 1;)
    if (p[i]) return i;
  return 0;
}

SlotOrders make_slot(std::string name, const OrderInterval& interval, const Presence& exact, std::size_t len) {
  SlotOrders s{std::move(name), interval, std::nullopt};
  if (len <= kExactSetLimit) s.exact = to_order_set(exact);
  return s;
}

std::size_t pow2_capped(std::size_t exponent, std::size_t cap) {
  if (exponent >= 63) return cap;
  return std::min<std::size_t>(std::size_t{1} << exponent, cap);
}

void check_length(std::size_t sentence_len) {
  if (sentence_len == 0) throw std::invalid_argument("sentence length must be at least 1");
}

// Count vectors are indexed by order 0..cap.
using Counts = std::vector<Count>;

Counts conv(const Counts& a, const Counts& b, std::size_t cap) {
  Counts out(a.size());
  for (std::size_t x = 1; x < a.size(); ++x) {
    if (a[x] == 0) continue;
    for (std::size_t y = 1; y < b.size() && x + y <= cap; ++y)
      if (b[y] != 0) out[x + y] += a[x] * b[y];
  }
  return out;
}

Counts plus(const Counts& a, const Counts& b) {
  Counts out(a);
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

}  // namespace

OrderInterval::OrderInterval(std::size_t lo, std::size_t hi) : has_(true), lo_(lo), hi_(hi) {
  if (lo == 0 || lo > hi) throw std::invalid_argument("order interval needs 1 <= lo <= hi");
}

OrderInterval OrderInterval::sum(const OrderInterval& a, const OrderInterval& b, std::size_t cap) {
  if (a.empty() || b.empty() || a.lo_ + b.lo_ > cap) return none();
  return {a.lo_ + b.lo_, std::min(a.hi_ + b.hi_, cap)};
}

OrderInterval OrderInterval::hull(const OrderInterval& a, const OrderInterval& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return {std::min(a.lo_, b.lo_), std::max(a.hi_, b.hi_)};
}

std::string to_string(const OrderInterval& interval) {
  if (interval.empty()) return "{}";
  return "[" + std::to_string(interval.lo()) + "," + std::to_string(interval.hi()) + "]";
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::san: return "san";
    case Regime::rnn: return "rnn";
    case Regime::split: return "split";
  }
  return "?";
}

Regime parse_regime(const std::string& text) {
  if (text == "san") return Regime::san;
  if (text == "rnn") return Regime::rnn;
  if (text == "split") return Regime::split;
  throw std::invalid_argument("unknown regime '" + text + "' (expected san, rnn or split)");
}

const SlotOrders& TraceRow::slot(const std::string& name) const {
  for (const auto& s : slots)
    if (s.name == name) return s;
  throw std::out_of_range("trace row has no slot '" + name + "'");
}

std::vector<std::size_t> IterationTrace::max_orders() const {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.max_order);
  return out;
}

IterationTrace simulate_san(std::size_t layers, std::size_t len) {
  check_length(len);
  IterationTrace trace{Regime::san, layers, len, 1, {}};
  Presence full = singleton_set(len, 1);
  OrderInterval interval(1, 1);
  for (std::size_t i = 1; i <= layers; ++i) {
    full = set_union(full, set_sum(full, full, len));
    interval = OrderInterval::hull(interval, OrderInterval::sum(interval, interval, len));
    TraceRow row;
    row.layer = i;
    row.slots.push_back(make_slot("full", interval, full, len));
    row.max_order = max_of(full);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

IterationTrace simulate_rnn(std::size_t layers, std::size_t len) {
  check_length(len);
  IterationTrace trace{Regime::rnn, layers, len, 1, {}};
  // below[t] holds the state sets of the layer underneath, t = 1..len
  std::vector<Presence> below(len + 1, Presence(len + 1, false));
  std::vector<OrderInterval> below_iv(len + 1);
  for (std::size_t t = 1; t <= len; ++t) {
    below[t] = singleton_set(len, 1);
    below_iv[t] = OrderInterval(1, 1);
  }
  for (std::size_t k = 1; k <= layers; ++k) {
    std::vector<Presence> cur(len + 1, Presence(len + 1, false));
    std::vector<OrderInterval> cur_iv(len + 1);
    for (std::size_t t = 1; t <= len; ++t) {
      // only t words have been read, so no subgraph can exceed order t
      const Presence& prev = cur[t - 1];
      Presence s = set_union(set_union(below[t], prev), set_sum(below[t], prev, t));
      for (std::size_t o = t + 1; o <= len; ++o) s[o] = false;
      cur[t] = s;
      OrderInterval iv = OrderInterval::hull(below_iv[t], cur_iv[t - 1]);
      iv = OrderInterval::hull(iv, OrderInterval::sum(below_iv[t], cur_iv[t - 1], t));
      if (!iv.empty()) iv = OrderInterval(iv.lo(), std::min(iv.hi(), t));
      cur_iv[t] = iv;
      TraceRow row;
      row.layer = k;
      row.step = t;
      row.slots.push_back(make_slot("state", iv, s, len));
      row.max_order = max_of(s);
      trace.rows.push_back(std::move(row));
    }
    below = std::move(cur);
    below_iv = std::move(cur_iv);
  }
  return trace;
}

IterationTrace simulate_split(std::size_t layers, std::size_t len) {
  check_length(len);
  IterationTrace trace{Regime::split, layers, len, 1, {}};
  Presence prev(len + 1, false), incr = singleton_set(len, 1);
  OrderInterval prev_iv = OrderInterval::none(), incr_iv(1, 1);
  for (std::size_t i = 1; i <= layers; ++i) {
    const Presence high = set_sum(incr, incr, len);
    const Presence middle = set_sum(prev, incr, len);
    const Presence& low = prev;
    const OrderInterval high_iv = OrderInterval::sum(incr_iv, incr_iv, len);
    const OrderInterval middle_iv = OrderInterval::sum(prev_iv, incr_iv, len);
    const OrderInterval low_iv = prev_iv;

    Presence next_incr = set_union(high, middle);
    Presence next_prev = set_union(prev, incr);
    OrderInterval next_incr_iv = OrderInterval::hull(high_iv, middle_iv);
    OrderInterval next_prev_iv = OrderInterval::hull(prev_iv, incr_iv);
    Presence full = set_union(next_prev, next_incr);

    TraceRow row;
    row.layer = i;
    row.slots.push_back(make_slot("prev_in", prev_iv, prev, len));
    row.slots.push_back(make_slot("incr_in", incr_iv, incr, len));
    row.slots.push_back(make_slot("high", high_iv, high, len));
    row.slots.push_back(make_slot("middle", middle_iv, middle, len));
    row.slots.push_back(make_slot("low", low_iv, low, len));
    row.slots.push_back(make_slot("incr_out", next_incr_iv, next_incr, len));
    row.slots.push_back(make_slot("prev_out", next_prev_iv, next_prev, len));
    row.slots.push_back(make_slot("full", OrderInterval::hull(next_prev_iv, next_incr_iv), full, len));
    row.max_order = max_of(full);

    // high [2^(i-1), 2^i], middle [2^(i-2), 2^(i-1)], low [1, 2^(i-2)]
    row.stated_high = OrderInterval(pow2_capped(i - 1, len), pow2_capped(i, len));
    if (i >= 2) {
      row.stated_middle = OrderInterval(pow2_capped(i - 2, len), pow2_capped(i - 1, len));
      row.stated_low = OrderInterval(1, pow2_capped(i - 2, len));
    }
    trace.rows.push_back(std::move(row));

    prev = std::move(next_prev);
    incr = std::move(next_incr);
    prev_iv = next_prev_iv;
    incr_iv = next_incr_iv;
  }
  return trace;
}

IterationTrace simulate(Regime regime, std::size_t layers, std::size_t len) {
  switch (regime) {
    case Regime::san: return simulate_san(layers, len);
    case Regime::rnn: return simulate_rnn(layers, len);
    case Regime::split: return simulate_split(layers, len);
  }
  throw std::invalid_argument("unknown regime");
}

std::vector<std::vector<Count>> derivation_counts(Regime regime, std::size_t layers, std::size_t len) {
  check_length(len);
  std::vector<Counts> out;
  Counts base(len + 1);
  base[1] = 1;
  out.push_back(base);
  switch (regime) {
    case Regime::san: {
      Counts full = base;
      for (std::size_t i = 1; i <= layers; ++i) {
        full = plus(full, conv(full, full, len));
        out.push_back(full);
      }
      break;
    }
    case Regime::split: {
      Counts prev(len + 1), incr = base;
      for (std::size_t i = 1; i <= layers; ++i) {
        // prev x prev was paired by the layer below; only the other three blocks are new
        Counts fresh = plus(conv(incr, incr, len), plus(conv(prev, incr, len), conv(incr, prev, len)));
        prev = plus(prev, incr);
        incr = std::move(fresh);
        out.push_back(plus(prev, incr));
      }
      break;
    }
    case Regime::rnn: {
      // State (k, t) holds its input, state (k, t-1) and their pairings. From
      // layer 2 on the input is state (k-1, t), which shares the derivations of
      // (k-1, t-1) with state (k, t-1); inclusion-exclusion drops them once.
      std::vector<Counts> below;
      for (std::size_t k = 1; k <= layers; ++k) {
        std::vector<Counts> cur(len + 1, Counts(len + 1));
        for (std::size_t t = 1; t <= len; ++t) {
          Counts in = k == 1 ? base : below[t];
          Counts c = plus(in, cur[t - 1]);
          if (k > 1)
            for (std::size_t o = 0; o <= len; ++o) c[o] -= below[t - 1][o];
          cur[t] = plus(c, conv(in, cur[t - 1], t));
        }
        out.push_back(cur[len]);
        below = std::move(cur);
      }
      break;
    }
  }
  return out;
}

Count repetition_count(const IterationTrace& trace, std::size_t order, std::size_t layer) {
  if (layer > trace.layers) throw std::out_of_range("layer beyond the simulated depth");
  if (order == 0 || order > trace.sentence_len) return 0;
  return derivation_counts(trace.regime, layer, trace.sentence_len)[layer][order];
}

nlohmann::json to_json(const IterationTrace& trace) {
  nlohmann::json out;
  out["regime"] = to_string(trace.regime);
  out["layers"] = trace.layers;
  out["sentence_len"] = trace.sentence_len;
  out["embedding_order"] = trace.embedding_order;
  auto iv_json = [](const OrderInterval& iv) -> nlohmann::json {
    if (iv.empty()) return nullptr;
    return nlohmann::json::array({iv.lo(), iv.hi()});
  };
  out["rows"] = nlohmann::json::array();
  for (const auto& r : trace.rows) {
    nlohmann::json row{{"layer", r.layer}, {"max_order", r.max_order}};
    if (trace.regime == Regime::rnn) row["step"] = r.step;
    for (const auto& s : r.slots) {
      nlohmann::json slot{{"interval", iv_json(s.interval)}};
      if (s.exact) slot["exact"] = *s.exact;
      row["slots"][s.name] = slot;
    }
    if (r.stated_high) {
      row["stated"]["high"] = iv_json(*r.stated_high);
      row["stated"]["middle"] = r.stated_middle ? iv_json(*r.stated_middle) : nlohmann::json(nullptr);
      row["stated"]["low"] = r.stated_low ? iv_json(*r.stated_low) : nlohmann::json(nullptr);
      row["stated"]["diverges"] = {{"high", *r.stated_high != r.slot("high").interval},
                                   {"middle", !r.stated_middle || *r.stated_middle != r.slot("middle").interval},
                                   {"low", !r.stated_low || *r.stated_low != r.slot("low").interval}};
    }
    out["rows"].push_back(row);
  }
  return out;
}

std::string to_csv(const IterationTrace& trace) {
  std::ostringstream os;
  os << "regime,layer,step,slot,lo,hi,max_order\n";
  for (const auto& r : trace.rows) {
    for (const auto& s : r.slots) {
      os << to_string(trace.regime) << ',' << r.layer << ',' << r.step << ',' << s.name << ',';
      if (s.interval.empty()) {
        os << ",";
      } else {
        os << s.interval.lo() << ',' << s.interval.hi();
      }
      os << ',' << r.max_order << '\n';
    }
    auto stated = [&](const char* name, const std::optional<OrderInterval>& iv) {
      os << to_string(trace.regime) << ',' << r.layer << ',' << r.step << ",stated_" << name << ',';
      if (iv) {
        os << iv->lo() << ',' << iv->hi();
      } else {
        os << ",";
      }
      os << ',' << r.max_order << '\n';
    };
    if (r.stated_high) {
      stated("high", r.stated_high);
      stated("middle", r.stated_middle);
      stated("low", r.stated_low);
    }
  }
  return os.str();
}

}  // namespace mog::sim
