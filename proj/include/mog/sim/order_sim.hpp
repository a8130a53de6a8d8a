#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mog::sim {

using Count = boost::multiprecision::cpp_int;

/// Closed integer interval of subgraph orders; `empty()` when the slot holds
/// no subgraph at all.
class OrderInterval {
 public:
  OrderInterval() = default;
  OrderInterval(std::size_t lo, std::size_t hi);
  static OrderInterval none() { return {}; }

  bool empty() const { return !has_; }
  std::size_t lo() const { return lo_; }
  std::size_t hi() const { return hi_; }

  /// [a,b] + [c,d] = [a+c, b+d] capped at `cap`; empty if a+c exceeds it.
  static OrderInterval sum(const OrderInterval& a, const OrderInterval& b, std::size_t cap);
  /// Smallest interval covering both.
  static OrderInterval hull(const OrderInterval& a, const OrderInterval& b);

  friend bool operator==(const OrderInterval&, const OrderInterval&) = default;

 private:
  bool has_ = false;
  std::size_t lo_ = 0, hi_ = 0;
};

std::string to_string(const OrderInterval& interval);

/// Exact set of achievable orders, kept only for short sentences.
using OrderSet = std::vector<std::size_t>;

struct SlotOrders {
  std::string name;
  OrderInterval interval;
  std::optional<OrderSet> exact;
};

enum class Regime { san, rnn, split };

std::string to_string(Regime regime);
Regime parse_regime(const std::string& text);

struct TraceRow {
  std::size_t layer = 0;
  std::size_t step = 0;  // time step for the sentence-level regime, 0 otherwise
  std::vector<SlotOrders> slots;
  std::size_t max_order = 0;
  /// Split regime only: the ranges claimed for the three attention groups,
  /// reported next to the recurrence-derived ones.
  std::optional<OrderInterval> stated_high, stated_middle, stated_low;

  const SlotOrders& slot(const std::string& name) const;
};

struct IterationTrace {
  Regime regime = Regime::san;
  std::size_t layers = 0;
  std::size_t sentence_len = 1;
  std::size_t embedding_order = 1;
  std::vector<TraceRow> rows;

  /// Max order per row, in row order.
  std::vector<std::size_t> max_orders() const;
};

/// Sentences up to this length also carry exact order sets.
inline constexpr std::size_t kExactSetLimit = 16;

/// Layer-level iteration: layer i pairs every subgraph of layer i-1 with every
/// other, so its largest order is min(2^i, L).
IterationTrace simulate_san(std::size_t layers, std::size_t sentence_len);

/// Sentence-level plus layer-level iteration: state (k, t) joins subgraphs of
/// (k-1, t) with those of (k, t-1). One row per (layer, step).
IterationTrace simulate_rnn(std::size_t layers, std::size_t sentence_len);

/// Split attention: layer i reads (prev, incr) and produces
///   high = incr + incr, middle = prev + incr, low = prev,
/// then incr' = high U middle, prev' = prev U incr. Layer 1 starts from
/// prev = {} and incr = {1}.
IterationTrace simulate_split(std::size_t layers, std::size_t sentence_len);

IterationTrace simulate(Regime regime, std::size_t layers, std::size_t sentence_len);

/// Number of distinct derivations of order-`order` subgraphs present after
/// `layer` under the trace's recurrence. A derivation is a (layer, left
/// derivation, right derivation) pairing; copying a representation forward
/// (residual, the untouched previous representation, the linear low-order path)
/// creates none. For the sentence-level regime `layer` counts whole layers.
Count repetition_count(const IterationTrace& trace, std::size_t order, std::size_t layer);

/// Per-order derivation counts after each layer (index 0 = embeddings).
std::vector<std::vector<Count>> derivation_counts(Regime regime, std::size_t layers, std::size_t sentence_len);

nlohmann::json to_json(const IterationTrace& trace);
std::string to_csv(const IterationTrace& trace);

}  // namespace mog::sim
