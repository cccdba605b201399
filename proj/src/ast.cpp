#include "code2seq/ast.hpp"

#include <cctype>
#include <string>

#include "code2seq/error.hpp"

namespace code2seq {

SyntaxNode SyntaxNode::terminal(std::string kind, std::string value) {
  return SyntaxNode{std::move(kind), std::move(value), {}};
}

SyntaxNode SyntaxNode::nonterminal(std::string kind, std::vector<SyntaxNode> children) {
  return SyntaxNode{std::move(kind), {}, std::move(children)};
}

bool is_valid_kind_name(std::string_view kind) {
  if (kind.empty()) return false;
  for (char ch : kind) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == ',' || ch == '|' || ch == '"' || ch == '(' || ch == ')') {
      return false;
    }
  }
  return true;
}

Ast::Ast(const SyntaxNode& root) { flatten(root, kNoNode, 0); }

void Ast::flatten(const SyntaxNode& node, NodeId parent, int depth) {
  if (!is_valid_kind_name(node.kind)) {
    throw Error(ErrorCode::kMalformedAst, "invalid node kind '" + node.kind + "'");
  }
  if (node.children.empty() && node.value.empty()) {
    throw Error(ErrorCode::kMalformedAst, "terminal '" + node.kind + "' has an empty value");
  }
  if (!node.children.empty() && !node.value.empty()) {
    throw Error(ErrorCode::kMalformedAst, "nonterminal '" + node.kind + "' carries a value");
  }
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(AstNode{id, node.kind, node.value, {}});
  parents_.push_back(parent);
  depths_.push_back(depth);
  if (parent != kNoNode) nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  for (const auto& child : node.children) flatten(child, id, depth + 1);
}

void Ast::check_id(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw Error(ErrorCode::kInvalidId, "node id " + std::to_string(id) + " out of range [0, " +
                                           std::to_string(nodes_.size()) + ")");
  }
}

const AstNode& Ast::node(NodeId id) const {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)];
}

NodeId Ast::parent(NodeId id) const {
  check_id(id);
  return parents_[static_cast<std::size_t>(id)];
}

int Ast::depth(NodeId id) const {
  check_id(id);
  return depths_[static_cast<std::size_t>(id)];
}

std::vector<NodeId> Ast::terminals() const {
  // Pre-order visits leaves left to right.
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.is_terminal()) out.push_back(n.id);
  }
  return out;
}

NodeId Ast::lowest_common_ancestor(NodeId a, NodeId b) const {
  check_id(a);
  check_id(b);
  auto da = depths_[static_cast<std::size_t>(a)];
  auto db = depths_[static_cast<std::size_t>(b)];
  while (da > db) {
    a = parents_[static_cast<std::size_t>(a)];
    --da;
  }
  while (db > da) {
    b = parents_[static_cast<std::size_t>(b)];
    --db;
  }
  while (a != b) {
    a = parents_[static_cast<std::size_t>(a)];
    b = parents_[static_cast<std::size_t>(b)];
  }
  return a;
}

Ast Ast::with_terminal_value(NodeId id, std::string value) const {
  check_id(id);
  if (!nodes_[static_cast<std::size_t>(id)].is_terminal()) {
    throw Error(ErrorCode::kInvalidId, "node " + std::to_string(id) + " is not a terminal");
  }
  if (value.empty()) throw Error(ErrorCode::kMalformedAst, "terminal value must be non-empty");
  Ast copy = *this;
  copy.nodes_[static_cast<std::size_t>(id)].value = std::move(value);
  return copy;
}

SyntaxNode Ast::rebuild(NodeId id) const {
  const auto& n = nodes_[static_cast<std::size_t>(id)];
  SyntaxNode out{n.kind, n.value, {}};
  out.children.reserve(n.children.size());
  for (NodeId child : n.children) out.children.push_back(rebuild(child));
  return out;
}

SyntaxNode Ast::to_syntax() const { return rebuild(0); }

bool Ast::operator==(const Ast& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& x = nodes_[i];
    const auto& y = other.nodes_[i];
    if (x.kind != y.kind || x.value != y.value || x.children != y.children) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

void append_quoted(std::string& out, std::string_view value) {
  out.push_back('"');
  for (char ch : value) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  out.push_back('"');
}

void serialize_node(const Ast& ast, NodeId id, std::string& out) {
  const auto& n = ast.node(id);
  out.push_back('(');
  out += n.kind;
  if (n.is_terminal()) {
    out.push_back(' ');
    append_quoted(out, n.value);
  } else {
    for (NodeId child : n.children) {
      out.push_back(' ');
      serialize_node(ast, child, out);
    }
  }
  out.push_back(')');
}

class AstTextReader {
 public:
  explicit AstTextReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  std::size_t position() const noexcept { return pos_; }

  SyntaxNode read_node() {
    skip_space();
    expect('(');
    skip_space();
    const std::size_t kind_start = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
    if (pos_ == kind_start) fail("expected a node kind");
    SyntaxNode node;
    node.kind = std::string(text_.substr(kind_start, pos_ - kind_start));
    if (!is_valid_kind_name(node.kind)) fail("invalid node kind '" + node.kind + "'");
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '"') {
      node.value = read_quoted();
      if (node.value.empty()) fail("terminal value must be non-empty");
      skip_space();
      expect(')');
      return node;
    }
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) fail("unexpected end of input inside '" + node.kind + "'");
      if (text_[pos_] == ')') break;
      node.children.push_back(read_node());
    }
    if (node.children.empty()) fail("nonterminal '" + node.kind + "' has no children");
    expect(')');
    return node;
  }

 private:
  static bool is_delimiter(char ch) {
    return std::isspace(static_cast<unsigned char>(ch)) || ch == '(' || ch == ')' || ch == '"';
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char ch) {
    if (pos_ >= text_.size() || text_[pos_] != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  std::string read_quoted() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated quoted value");
      char ch = text_[pos_++];
      if (ch == '"') break;
      if (ch == '\\') {
        if (pos_ >= text_.size()) fail("dangling escape");
        char esc = text_[pos_++];
        if (esc != '"' && esc != '\\') {
          --pos_;
          fail("unsupported escape");
        }
        out.push_back(esc);
      } else {
        out.push_back(ch);
      }
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kMalformedText, "byte " + std::to_string(pos_) + ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_ast(const Ast& ast) {
  std::string out;
  serialize_node(ast, 0, out);
  return out;
}

Ast parse_ast_text(std::string_view text) {
  AstTextReader reader(text);
  if (reader.at_end()) throw Error(ErrorCode::kMalformedText, "byte 0: empty input");
  auto root = reader.read_node();
  if (!reader.at_end()) {
    throw Error(ErrorCode::kMalformedText,
                "byte " + std::to_string(reader.position()) + ": trailing content after the tree");
  }
  return Ast(root);
}

std::vector<Ast> parse_ast_forest(std::string_view text) {
  AstTextReader reader(text);
  std::vector<Ast> out;
  while (!reader.at_end()) out.emplace_back(reader.read_node());
  return out;
}

}  // namespace code2seq
