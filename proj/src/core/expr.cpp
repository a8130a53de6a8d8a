#include "mog/core/expr.hpp"

#include <cctype>
#include <optional>

namespace mog::core {

ExtensionExpr ExtensionExpr::leaf(std::string token) {
  if (token.empty()) throw GraphError("leaf token must not be empty");
  ExtensionExpr e;
  e.token_ = std::move(token);
  return e;
}

ExtensionExpr ExtensionExpr::join(ExtensionExpr left, std::string source, ExtensionExpr right, std::string target) {
  ExtensionExpr e;
  e.left_ = std::make_unique<ExtensionExpr>(std::move(left));
  e.right_ = std::make_unique<ExtensionExpr>(std::move(right));
  e.source_ = std::move(source);
  e.target_ = std::move(target);
  return e;
}

ExtensionExpr::ExtensionExpr(const ExtensionExpr& other)
    : token_(other.token_), source_(other.source_), target_(other.target_) {
  if (other.left_) left_ = std::make_unique<ExtensionExpr>(*other.left_);
  if (other.right_) right_ = std::make_unique<ExtensionExpr>(*other.right_);
}

ExtensionExpr& ExtensionExpr::operator=(const ExtensionExpr& other) {
  if (this != &other) *this = ExtensionExpr(other);
  return *this;
}

std::size_t ExtensionExpr::leaf_count() const {
  return is_leaf() ? 1 : left_->leaf_count() + right_->leaf_count();
}

bool operator==(const ExtensionExpr& a, const ExtensionExpr& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.token_ == b.token_;
  return a.source_ == b.source_ && a.target_ == b.target_ && *a.left_ == *b.left_ && *a.right_ == *b.right_;
}

namespace {

// expr  := leaf | side 'U' side
// side  := '(' expr ')' '->' token
// leaf  := '{' token '}'
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExtensionExpr parse() {
    ExtensionExpr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_ + 1); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(std::string_view lit) {
    skip_space();
    if (text_.substr(pos_, lit.size()) != lit) fail("expected '" + std::string(lit) + "'");
    pos_ += lit.size();
  }

  static bool token_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != '{' && c != '}';
  }

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && token_char(text_[pos_])) {
      if (text_.substr(pos_, 2) == "->") break;
      ++pos_;
    }
    if (pos_ == start) fail("expected token");
    return std::string(text_.substr(start, pos_ - start));
  }

  ExtensionExpr expr() {
    if (peek('{')) {
      ++pos_;
      std::string t = token();
      expect("}");
      return ExtensionExpr::leaf(std::move(t));
    }
    auto [left, source] = side();
    expect("U");
    auto [right, target] = side();
    return ExtensionExpr::join(std::move(left), std::move(source), std::move(right), std::move(target));
  }

  std::pair<ExtensionExpr, std::string> side() {
    expect("(");
    ExtensionExpr inner = expr();
    expect(")");
    expect("->");
    return {std::move(inner), token()};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

SubgraphId evaluate(const ExtensionExpr& e, MoGraph& g, std::size_t& next_leaf, ExtendMode mode,
                    std::vector<std::size_t>& orders) {
  if (e.is_leaf()) return g.singleton(next_leaf++);
  const SubgraphId left = evaluate(e.left(), g, next_leaf, mode, orders);
  const SubgraphId right = evaluate(e.right(), g, next_leaf, mode, orders);
  auto resolve = [&g](SubgraphId sub, const std::string& token) {
    std::optional<NodeId> found;
    for (NodeId n : g.subgraph(sub).nodes) {
      if (g.nodes()[n].token != token) continue;
      if (found) throw GraphError("attach token '" + token + "' is ambiguous inside its subgraph");
      found = n;
    }
    if (!found) throw GraphError("attach token '" + token + "' is not in its subgraph");
    return *found;
  };
  const NodeId source = resolve(left, e.source());
  const NodeId target = resolve(right, e.target());
  Extension x = g.extend(left, source, right, target, mode);
  orders.push_back(g.edge(x.edge).order);
  return x.subgraph;
}

void collect_leaves(const ExtensionExpr& e, std::vector<std::string>& out) {
  if (e.is_leaf()) {
    out.push_back(e.token());
    return;
  }
  collect_leaves(e.left(), out);
  collect_leaves(e.right(), out);
}

}  // namespace

ExtensionExpr parse_expr(std::string_view text) { return Parser(text).parse(); }

std::string print_expr(const ExtensionExpr& e) {
  if (e.is_leaf()) return "{" + e.token() + "}";
  return "(" + print_expr(e.left()) + ")->" + e.source() + " U (" + print_expr(e.right()) + ")->" + e.target();
}

EvalResult eval_expr(const ExtensionExpr& expr, ExtendMode mode) {
  std::vector<std::string> tokens;
  collect_leaves(expr, tokens);
  EvalResult result{MoGraph(tokens), 0, {}};
  std::size_t next_leaf = 0;
  result.root = evaluate(expr, result.graph, next_leaf, mode, result.edge_orders);
  return result;
}

}  // namespace mog::core
