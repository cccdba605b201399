#include <string>
#include <utility>

#include "code2seq/minij.hpp"

namespace code2seq::minij {
namespace {

bool is_primitive_keyword(const Token& t) {
  return t.kind == TokenKind::kKeyword &&
         (t.text == "int" || t.text == "boolean" || t.text == "char" || t.text == "void");
}

bool is_type_keyword(const Token& t) {
  return is_primitive_keyword(t) || t.is(TokenKind::kKeyword, "String");
}

class Parser {
 public:
  explicit Parser(const SourceUnit& src) : src_(src), tokens_(tokenize(src)) {
    // End position, for errors at end of input.
    for (char ch : src.text) {
      if (ch == '\n') {
        ++end_line_;
        end_col_ = 1;
      } else {
        ++end_col_;
      }
    }
  }

  SyntaxNode method() {
    std::vector<SyntaxNode> children;
    children.push_back(type());
    children.push_back(name());
    expect(TokenKind::kPunctuation, "(");
    if (!check(TokenKind::kPunctuation, ")")) {
      children.push_back(param());
      while (accept(TokenKind::kPunctuation, ",")) children.push_back(param());
    }
    expect(TokenKind::kPunctuation, ")");
    children.push_back(block());
    if (pos_ < tokens_.size()) fail_at(peek(), "expected end of input after the method body");
    return SyntaxNode::nonterminal("MethodDecl", std::move(children));
  }

 private:
  // -- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    static const Token kEnd{};
    return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : kEnd;
  }

  bool check(TokenKind kind, std::string_view text, std::size_t ahead = 0) const {
    return peek(ahead).is(kind, text);
  }

  bool accept(TokenKind kind, std::string_view text) {
    if (!check(kind, text)) return false;
    ++pos_;
    return true;
  }

  const Token& expect(TokenKind kind, std::string_view text) {
    if (!check(kind, text)) unexpected("'" + std::string(text) + "'");
    return tokens_[pos_++];
  }

  [[noreturn]] void fail_at(const Token& tok, const std::string& what) const {
    if (tok.kind == TokenKind::kEnd) throw ParseError(what, end_line_, end_col_, src_.origin);
    throw ParseError(what, tok.line, tok.column, src_.origin);
  }

  [[noreturn]] void unexpected(const std::string& wanted) const {
    const Token& tok = peek();
    const std::string found = tok.kind == TokenKind::kEnd ? "end of input" : "'" + tok.text + "'";
    fail_at(tok, "expected " + wanted + ", found " + found);
  }

  // -- declarations --------------------------------------------------------

  SyntaxNode name() {
    if (peek().kind != TokenKind::kIdentifier) unexpected("an identifier");
    return SyntaxNode::terminal("Name", tokens_[pos_++].text);
  }

  SyntaxNode base_type() {
    const Token& t = peek();
    if (is_primitive_keyword(t)) {
      ++pos_;
      return SyntaxNode::terminal("PrimitiveType", t.text);
    }
    if (t.is(TokenKind::kKeyword, "String") || t.kind == TokenKind::kIdentifier) {
      ++pos_;
      return SyntaxNode::terminal("ClassType", t.text);
    }
    unexpected("a type");
  }

  SyntaxNode type() {
    SyntaxNode t = base_type();
    while (check(TokenKind::kPunctuation, "[") && check(TokenKind::kPunctuation, "]", 1)) {
      pos_ += 2;
      t = SyntaxNode::nonterminal("ArrayType", {std::move(t)});
    }
    return t;
  }

  SyntaxNode param() {
    SyntaxNode t = type();
    SyntaxNode n = name();
    return SyntaxNode::nonterminal("Param", {std::move(t), std::move(n)});
  }

  bool starts_var_decl() const {
    const Token& t = peek();
    if (is_type_keyword(t)) return true;
    if (t.kind != TokenKind::kIdentifier) return false;
    if (peek(1).kind == TokenKind::kIdentifier) return true;
    // `Foo[] xs` vs. `xs[i] = ...`
    return check(TokenKind::kPunctuation, "[", 1) && check(TokenKind::kPunctuation, "]", 2);
  }

  SyntaxNode var_decl_body() {
    std::vector<SyntaxNode> children;
    children.push_back(type());
    children.push_back(name());
    if (accept(TokenKind::kOperator, "=")) children.push_back(expression());
    return SyntaxNode::nonterminal("VarDec", std::move(children));
  }

  // -- statements ----------------------------------------------------------

  SyntaxNode block() {
    const Token& open = expect(TokenKind::kPunctuation, "{");
    std::vector<SyntaxNode> stmts;
    while (!check(TokenKind::kPunctuation, "}")) {
      if (peek().kind == TokenKind::kEnd) fail_at(open, "unclosed '{'");
      stmts.push_back(statement());
    }
    ++pos_;
    if (stmts.empty()) return SyntaxNode::terminal("Block", "{}");
    return SyntaxNode::nonterminal("Block", std::move(stmts));
  }

  SyntaxNode statement() {
    const Token& t = peek();
    if (t.is(TokenKind::kPunctuation, "{")) return block();
    if (t.is(TokenKind::kKeyword, "if")) return if_stmt();
    if (t.is(TokenKind::kKeyword, "while")) return while_stmt();
    if (t.is(TokenKind::kKeyword, "do")) return do_stmt();
    if (t.is(TokenKind::kKeyword, "for")) return for_stmt();
    if (t.is(TokenKind::kKeyword, "return")) return return_stmt();
    if (starts_var_decl()) {
      SyntaxNode decl = var_decl_body();
      expect(TokenKind::kPunctuation, ";");
      return decl;
    }
    SyntaxNode e = expression();
    expect(TokenKind::kPunctuation, ";");
    return SyntaxNode::nonterminal("ExprStmt", {std::move(e)});
  }

  SyntaxNode parenthesized() {
    expect(TokenKind::kPunctuation, "(");
    SyntaxNode e = expression();
    expect(TokenKind::kPunctuation, ")");
    return e;
  }

  SyntaxNode if_stmt() {
    ++pos_;
    std::vector<SyntaxNode> children;
    children.push_back(parenthesized());
    children.push_back(statement());
    if (accept(TokenKind::kKeyword, "else")) children.push_back(statement());
    return SyntaxNode::nonterminal("IfStmt", std::move(children));
  }

  SyntaxNode while_stmt() {
    ++pos_;
    SyntaxNode cond = parenthesized();
    SyntaxNode body = statement();
    return SyntaxNode::nonterminal("WhileStmt", {std::move(cond), std::move(body)});
  }

  SyntaxNode do_stmt() {
    ++pos_;
    SyntaxNode body = statement();
    expect(TokenKind::kKeyword, "while");
    SyntaxNode cond = parenthesized();
    expect(TokenKind::kPunctuation, ";");
    return SyntaxNode::nonterminal("DoStmt", {std::move(body), std::move(cond)});
  }

  SyntaxNode for_stmt() {
    ++pos_;
    expect(TokenKind::kPunctuation, "(");
    std::vector<SyntaxNode> children;
    if (!check(TokenKind::kPunctuation, ";")) {
      children.push_back(starts_var_decl() ? var_decl_body() : expression());
    }
    expect(TokenKind::kPunctuation, ";");
    if (!check(TokenKind::kPunctuation, ";")) children.push_back(expression());
    expect(TokenKind::kPunctuation, ";");
    if (!check(TokenKind::kPunctuation, ")")) children.push_back(expression());
    expect(TokenKind::kPunctuation, ")");
    children.push_back(statement());
    return SyntaxNode::nonterminal("ForStmt", std::move(children));
  }

  SyntaxNode return_stmt() {
    const Token& kw = tokens_[pos_++];
    if (accept(TokenKind::kPunctuation, ";")) return SyntaxNode::terminal("ReturnStmt", kw.text);
    SyntaxNode e = expression();
    expect(TokenKind::kPunctuation, ";");
    return SyntaxNode::nonterminal("ReturnStmt", {std::move(e)});
  }

  // -- expressions ---------------------------------------------------------

  SyntaxNode expression() { return assignment(); }

  SyntaxNode assignment() {
    SyntaxNode lhs = logical_or();
    if (accept(TokenKind::kOperator, "=")) {
      SyntaxNode rhs = assignment();
      return SyntaxNode::nonterminal("Assign", {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  template <typename Next>
  SyntaxNode binary_level(std::initializer_list<std::string_view> ops, Next next) {
    SyntaxNode lhs = (this->*next)();
    while (true) {
      const Token& t = peek();
      if (t.kind != TokenKind::kOperator) return lhs;
      bool matched = false;
      for (auto op : ops) matched = matched || t.text == op;
      if (!matched) return lhs;
      std::string kind = "BinaryExpr:" + (t.text == "||" ? std::string("or") : t.text);
      ++pos_;
      SyntaxNode rhs = (this->*next)();
      lhs = SyntaxNode::nonterminal(std::move(kind), {std::move(lhs), std::move(rhs)});
    }
  }

  SyntaxNode logical_or() { return binary_level({"||"}, &Parser::logical_and); }
  SyntaxNode logical_and() { return binary_level({"&&"}, &Parser::equality); }
  SyntaxNode equality() { return binary_level({"==", "!="}, &Parser::relational); }
  SyntaxNode relational() { return binary_level({"<", ">", "<=", ">="}, &Parser::additive); }
  SyntaxNode additive() { return binary_level({"+", "-"}, &Parser::multiplicative); }
  SyntaxNode multiplicative() { return binary_level({"*", "/", "%"}, &Parser::unary); }

  SyntaxNode unary() {
    const Token& t = peek();
    if (t.kind == TokenKind::kOperator &&
        (t.text == "!" || t.text == "-" || t.text == "+" || t.text == "++" || t.text == "--")) {
      std::string kind = "UnaryExpr:" + t.text;
      ++pos_;
      SyntaxNode operand = unary();
      return SyntaxNode::nonterminal(std::move(kind), {std::move(operand)});
    }
    return postfix();
  }

  std::vector<SyntaxNode> arguments(SyntaxNode head) {
    std::vector<SyntaxNode> out;
    out.push_back(std::move(head));
    expect(TokenKind::kPunctuation, "(");
    if (!check(TokenKind::kPunctuation, ")")) {
      out.push_back(expression());
      while (accept(TokenKind::kPunctuation, ",")) out.push_back(expression());
    }
    expect(TokenKind::kPunctuation, ")");
    return out;
  }

  SyntaxNode postfix() {
    SyntaxNode e = primary();
    while (true) {
      if (check(TokenKind::kPunctuation, "(")) {
        e = SyntaxNode::nonterminal("Call", arguments(std::move(e)));
      } else if (accept(TokenKind::kPunctuation, ".")) {
        SyntaxNode field = name();
        e = SyntaxNode::nonterminal("FieldAccess", {std::move(e), std::move(field)});
      } else if (accept(TokenKind::kPunctuation, "[")) {
        SyntaxNode index = expression();
        expect(TokenKind::kPunctuation, "]");
        e = SyntaxNode::nonterminal("Index", {std::move(e), std::move(index)});
      } else if (check(TokenKind::kOperator, "++") || check(TokenKind::kOperator, "--")) {
        std::string kind = "PostfixExpr:" + tokens_[pos_++].text;
        e = SyntaxNode::nonterminal(std::move(kind), {std::move(e)});
      } else {
        return e;
      }
    }
  }

  SyntaxNode primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::kIdentifier: ++pos_; return SyntaxNode::terminal("Name", t.text);
      case TokenKind::kIntLiteral: ++pos_; return SyntaxNode::terminal("IntLit", t.text);
      case TokenKind::kCharLiteral: ++pos_; return SyntaxNode::terminal("CharLit", t.text);
      case TokenKind::kStringLiteral: ++pos_; return SyntaxNode::terminal("StringLit", t.text);
      case TokenKind::kBoolLiteral: ++pos_; return SyntaxNode::terminal("BoolLit", t.text);
      default: break;
    }
    if (t.is(TokenKind::kPunctuation, "(")) return parenthesized();
    if (t.is(TokenKind::kKeyword, "new")) {
      ++pos_;
      SyntaxNode type = base_type();
      if (accept(TokenKind::kPunctuation, "[")) {
        SyntaxNode size = expression();
        expect(TokenKind::kPunctuation, "]");
        return SyntaxNode::nonterminal("NewArray", {std::move(type), std::move(size)});
      }
      return SyntaxNode::nonterminal("NewObject", arguments(std::move(type)));
    }
    unexpected("an expression");
  }

  const SourceUnit& src_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int end_line_ = 1;
  int end_col_ = 1;
};

}  // namespace

Ast parse_method(const SourceUnit& src) {
  Parser parser(src);
  return Ast(parser.method());
}

std::vector<SourceUnit> split_methods(const SourceUnit& src) {
  const auto tokens = tokenize(src);
  std::vector<SourceUnit> out;
  std::size_t start = 0;
  int depth = 0;
  bool seen_body = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.is(TokenKind::kPunctuation, "{")) {
      ++depth;
      seen_body = true;
    } else if (t.is(TokenKind::kPunctuation, "}")) {
      --depth;
      if (depth < 0) throw ParseError("unbalanced '}'", t.line, t.column, src.origin);
      if (depth == 0 && seen_body) {
        const std::size_t begin = tokens[start].offset;
        const std::size_t end = t.offset + 1;
        out.push_back(SourceUnit{src.text.substr(begin, end - begin),
                                 src.origin + "#" + std::to_string(out.size())});
        start = i + 1;
        seen_body = false;
      }
    }
  }
  if (start < tokens.size()) {
    const auto& t = tokens[start];
    throw ParseError("trailing tokens after the last method", t.line, t.column, src.origin);
  }
  return out;
}

std::pair<Ast, std::string> extract_target_name(const Ast& ast) {
  const auto& root = ast.root();
  if (root.kind != "MethodDecl") {
    throw Error(ErrorCode::kNotAMethod, "root kind is '" + root.kind + "', expected MethodDecl");
  }
  for (NodeId child : root.children) {
    const auto& n = ast.node(child);
    if (n.kind == "Name" && n.is_terminal()) {
      return {ast.with_terminal_value(child, std::string(kMethodNameToken)), n.value};
    }
  }
  throw Error(ErrorCode::kNotAMethod, "MethodDecl has no Name child");
}

}  // namespace code2seq::minij
