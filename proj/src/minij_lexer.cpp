#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "code2seq/minij.hpp"

namespace code2seq::minij {

ParseError::ParseError(std::string message, int line, int column, const std::string& origin)
    : Error(ErrorCode::kParseError,
            origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      message_(std::move(message)),
      line_(line),
      column_(column) {}

std::string Token::describe() const {
  switch (kind) {
    case TokenKind::kKeyword: return "kw:" + text;
    case TokenKind::kIdentifier: return "id:" + text;
    case TokenKind::kIntLiteral:
    case TokenKind::kCharLiteral:
    case TokenKind::kStringLiteral:
    case TokenKind::kBoolLiteral: return "lit:" + text;
    case TokenKind::kOperator: return "op:" + text;
    case TokenKind::kPunctuation: return "punc:" + text;
    case TokenKind::kEnd: return "end";
  }
  return text;
}

namespace {

constexpr std::array<std::string_view, 12> kKeywords = {
    "int", "boolean", "char", "String", "void", "if", "else", "while", "do", "for", "return", "new"};

// Longest match first.
constexpr std::array<std::string_view, 17> kOperators = {
    "||", "&&", "==", "!=", "<=", ">=", "++", "--", "<", ">", "+", "-", "*", "/", "%", "=", "!"};

constexpr std::string_view kPunctuation = "(){}[],;.";

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool is_ident_part(unsigned char c) { return is_ident_start(c) || std::isdigit(c); }

class Lexer {
 public:
  explicit Lexer(const SourceUnit& src) : src_(src), text_(src.text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (pos_ >= text_.size()) break;
      out.push_back(next());
    }
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what, int line, int col) const {
    throw ParseError(what, line, col, src_.origin);
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        const int line = line_, col = col_;
        advance();
        advance();
        while (true) {
          if (pos_ >= text_.size()) fail("unterminated block comment", line, col);
          if (peek() == '*' && peek(1) == '/') {
            advance();
            advance();
            break;
          }
          advance();
        }
      } else {
        break;
      }
    }
  }

  Token next() {
    Token tok;
    tok.line = line_;
    tok.column = col_;
    tok.offset = pos_;
    const std::size_t start = pos_;
    const auto c = static_cast<unsigned char>(peek());

    if (is_ident_start(c)) {
      while (pos_ < text_.size() && is_ident_part(static_cast<unsigned char>(peek()))) advance();
      tok.text = text_.substr(start, pos_ - start);
      if (tok.text == "true" || tok.text == "false") {
        tok.kind = TokenKind::kBoolLiteral;
      } else if (std::find(kKeywords.begin(), kKeywords.end(), tok.text) != kKeywords.end()) {
        tok.kind = TokenKind::kKeyword;
      } else {
        tok.kind = TokenKind::kIdentifier;
      }
      return tok;
    }
    if (std::isdigit(c)) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
      if (pos_ < text_.size() && is_ident_start(static_cast<unsigned char>(peek()))) {
        fail("malformed number literal", tok.line, tok.column);
      }
      tok.kind = TokenKind::kIntLiteral;
      tok.text = text_.substr(start, pos_ - start);
      return tok;
    }
    if (c == '"' || c == '\'') {
      const char quote = static_cast<char>(c);
      advance();
      while (true) {
        if (pos_ >= text_.size() || peek() == '\n') {
          fail(quote == '"' ? "unterminated string literal" : "unterminated char literal",
               tok.line, tok.column);
        }
        if (peek() == '\\') {
          advance();
          if (pos_ >= text_.size()) continue;
          advance();
          continue;
        }
        if (peek() == quote) {
          advance();
          break;
        }
        advance();
      }
      tok.text = text_.substr(start, pos_ - start);
      if (quote == '\'') {
        const std::size_t body = tok.text.size() - 2;
        if (body == 0) fail("empty char literal", tok.line, tok.column);
        if (body != 1 && !(body == 2 && tok.text[1] == '\\')) {
          fail("char literal holds more than one character", tok.line, tok.column);
        }
        tok.kind = TokenKind::kCharLiteral;
      } else {
        tok.kind = TokenKind::kStringLiteral;
      }
      return tok;
    }
    if (kPunctuation.find(static_cast<char>(c)) != std::string_view::npos) {
      advance();
      tok.kind = TokenKind::kPunctuation;
      tok.text = std::string(1, static_cast<char>(c));
      return tok;
    }
    for (std::string_view op : kOperators) {
      if (text_.compare(pos_, op.size(), op) == 0) {
        for (std::size_t i = 0; i < op.size(); ++i) advance();
        tok.kind = TokenKind::kOperator;
        tok.text = std::string(op);
        return tok;
      }
    }
    fail(std::string("illegal character '") + static_cast<char>(c) + "'", tok.line, tok.column);
  }

  const SourceUnit& src_;
  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(const SourceUnit& src) { return Lexer(src).run(); }

}  // namespace code2seq::minij
