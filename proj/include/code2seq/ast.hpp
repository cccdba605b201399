#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace code2seq {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Owning, recursive description of a tree. Parsers build these; `Ast` flattens
// them into an immutable pre-order array.
struct SyntaxNode {
  std::string kind;
  std::string value;  // non-empty for terminals, empty for nonterminals
  std::vector<SyntaxNode> children;

  static SyntaxNode terminal(std::string kind, std::string value);
  static SyntaxNode nonterminal(std::string kind, std::vector<SyntaxNode> children);

  bool operator==(const SyntaxNode&) const = default;
};

struct AstNode {
  NodeId id = kNoNode;
  std::string kind;
  std::string value;
  std::vector<NodeId> children;

  bool is_terminal() const noexcept { return children.empty(); }
};

/// Rooted ordered tree. Nonterminals carry a kind and at least one child;
/// terminals carry a kind and a non-empty value. Node ids are assigned in
/// pre-order, so the root is always 0 and ids cover [0, size()).
class Ast {
 public:
  /// Validates and flattens `root`. Throws `Error(kMalformedAst)` when a
  /// terminal has an empty value, a nonterminal carries a value, or a kind
  /// name contains whitespace, ',', '|', quotes or parentheses.
  explicit Ast(const SyntaxNode& root);

  std::size_t size() const noexcept { return nodes_.size(); }
  const AstNode& root() const noexcept { return nodes_.front(); }
  const AstNode& node(NodeId id) const;
  std::span<const AstNode> nodes() const noexcept { return nodes_; }

  NodeId parent(NodeId id) const;
  int depth(NodeId id) const;

  /// Leaves in left-to-right order.
  std::vector<NodeId> terminals() const;

  NodeId lowest_common_ancestor(NodeId a, NodeId b) const;

  /// Copy with one terminal's value replaced.
  Ast with_terminal_value(NodeId id, std::string value) const;

  SyntaxNode to_syntax() const;

  bool operator==(const Ast& other) const;

 private:
  void flatten(const SyntaxNode& node, NodeId parent, int depth);
  SyntaxNode rebuild(NodeId id) const;
  void check_id(NodeId id) const;

  std::vector<AstNode> nodes_;
  std::vector<NodeId> parents_;
  std::vector<int> depths_;
};

bool is_valid_kind_name(std::string_view kind);

/// Parenthesized prefix form: `(Kind child...)` or `(Kind "value")`.
std::string serialize_ast(const Ast& ast);

/// Inverse of serialize_ast. Errors carry the byte offset of the problem.
Ast parse_ast_text(std::string_view text);

/// Parses zero or more consecutive trees (used for `.ast` corpus files).
std::vector<Ast> parse_ast_forest(std::string_view text);

}  // namespace code2seq
