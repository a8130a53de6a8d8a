#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mog/core/graph.hpp"

namespace mog::core {

/// Binary extension tree. A leaf is a one-word subgraph `{token}`; an internal
/// node reads `(left)->source U (right)->target` and joins the two child
/// subgraphs with an edge source -> target. Trees compare structurally, so
/// swapping children or regrouping yields a different expression.
class ExtensionExpr {
 public:
  static ExtensionExpr leaf(std::string token);
  static ExtensionExpr join(ExtensionExpr left, std::string source, ExtensionExpr right, std::string target);

  ExtensionExpr(const ExtensionExpr& other);
  ExtensionExpr& operator=(const ExtensionExpr& other);
  ExtensionExpr(ExtensionExpr&&) noexcept = default;
  ExtensionExpr& operator=(ExtensionExpr&&) noexcept = default;
  ~ExtensionExpr() = default;

  bool is_leaf() const { return left_ == nullptr; }
  const std::string& token() const { return token_; }
  const ExtensionExpr& left() const { return *left_; }
  const ExtensionExpr& right() const { return *right_; }
  const std::string& source() const { return source_; }
  const std::string& target() const { return target_; }

  std::size_t leaf_count() const;

  friend bool operator==(const ExtensionExpr& a, const ExtensionExpr& b);

 private:
  ExtensionExpr() = default;

  std::string token_;  // leaf only
  std::unique_ptr<ExtensionExpr> left_, right_;
  std::string source_, target_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t column)
      : std::runtime_error(message + " at column " + std::to_string(column)), column_(column) {}
  /// 1-based character position of the offending input.
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

ExtensionExpr parse_expr(std::string_view text);
std::string print_expr(const ExtensionExpr& expr);

struct EvalResult {
  MoGraph graph;
  SubgraphId root;
  /// Orders of the edges in generation order.
  std::vector<std::size_t> edge_orders;
};

/// Builds a fresh graph with one node per leaf (left to right) and applies the
/// extensions bottom-up, left subtree first.
EvalResult eval_expr(const ExtensionExpr& expr, ExtendMode mode = ExtendMode::disjoint);

}  // namespace mog::core
