#pragma once

// MiniJ: a small Java-like language covering single method declarations with
// locals, if/while/do/for, returns, calls, field access, indexing, `new`, and
// the usual operator precedence ladder.

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "code2seq/ast.hpp"
#include "code2seq/error.hpp"

namespace code2seq::minij {

struct SourceUnit {
  std::string text;
  std::string origin = "<memory>";
};

class ParseError : public Error {
 public:
  ParseError(std::string message, int line, int column, const std::string& origin = "<memory>");

  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string message_;
  int line_;
  int column_;
};

enum class TokenKind { kKeyword, kIdentifier, kIntLiteral, kCharLiteral, kStringLiteral, kBoolLiteral, kOperator, kPunctuation, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;
  int line = 1;
  int column = 1;
  std::size_t offset = 0;  // byte offset into the source text

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  /// `kw:int`, `id:num`, `op:=`, `lit:0`, `punc:;`.
  std::string describe() const;
};

/// Lexes the whole unit. The returned list does not contain the end marker.
std::vector<Token> tokenize(const SourceUnit& src);

/// Parses exactly one method declaration. A construct that would have no
/// children (`{}` or `return;`) becomes a terminal carrying its source text.
Ast parse_method(const SourceUnit& src);

/// Splits a file holding several top-level methods into one unit per method.
std::vector<SourceUnit> split_methods(const SourceUnit& src);

inline constexpr std::string_view kMethodNameToken = "METHOD_NAME";

/// Returns the masked tree and the original method name. The name terminal is
/// the first direct child of the root whose kind is `Name`.
std::pair<Ast, std::string> extract_target_name(const Ast& ast);

/// Every kind the parser can emit. Operators are folded into the kind name;
/// `||` becomes `or` since `|` separates path symbols.
inline constexpr std::array<std::string_view, 42> kNodeKinds = {
    "MethodDecl", "Param", "PrimitiveType", "ClassType", "ArrayType", "Block",
    "VarDec", "IfStmt", "WhileStmt", "DoStmt", "ForStmt", "ReturnStmt",
    "ExprStmt", "Assign", "Call", "FieldAccess", "Index", "NewObject",
    "NewArray", "Name", "IntLit", "CharLit", "StringLit", "BoolLit",
    "BinaryExpr:or", "BinaryExpr:&&", "BinaryExpr:==", "BinaryExpr:!=", "BinaryExpr:<=",
    "BinaryExpr:>=", "BinaryExpr:<", "BinaryExpr:>", "BinaryExpr:+", "BinaryExpr:-",
    "BinaryExpr:*", "BinaryExpr:/", "BinaryExpr:%", "UnaryExpr:!", "UnaryExpr:-",
    "UnaryExpr:+", "UnaryExpr:++", "UnaryExpr:--",
};
inline constexpr std::array<std::string_view, 2> kPostfixKinds = {"PostfixExpr:++", "PostfixExpr:--"};

// Path symbols render each kind bare, with `^` and with `_`.
static_assert(3 * (kNodeKinds.size() + kPostfixKinds.size()) <= 364,
              "rendered path-symbol vocabulary exceeds 364 symbols");

}  // namespace code2seq::minij
