#include <algorithm>

#include "doctest.h"

#include "code2seq/minij.hpp"
#include "oracles.hpp"

using namespace code2seq;

namespace {

using S = SyntaxNode;

std::vector<std::string> describe(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& t : minij::tokenize({text})) out.push_back(t.describe());
  return out;
}

std::size_t count_kind(const Ast& ast, std::string_view kind) {
  return static_cast<std::size_t>(std::count_if(ast.nodes().begin(), ast.nodes().end(),
                                                [&](const AstNode& n) { return n.kind == kind; }));
}

const char* const kCountDoWhile = R"(int countOccurrences(String str, char ch) {
  int num = 0;
  int index = -1;
  do {
    index = str.indexOf(ch, index + 1);
    if (index >= 0) {
      num++;
    }
  } while (index >= 0);
  return num;
})";

const char* const kCountFor = R"(int countOccurrences(String source, char value) {
  int count = 0;
  for (int i = -1; (i = source.indexOf(value, i + 1)) >= 0; i++) {
    count++;
  }
  return count;
})";

}  // namespace

TEST_CASE("tokenize") {
  CHECK(describe("int num = 0;") == std::vector<std::string>{"kw:int", "id:num", "op:=", "lit:0", "punc:;"});
  CHECK(minij::tokenize({""}).empty());
  CHECK(minij::tokenize({"  // only a comment\n /* and\n a block */ "}).empty());
  CHECK(describe("a<=b&&!c||d--") ==
        std::vector<std::string>{"id:a", "op:<=", "id:b", "op:&&", "op:!", "id:c", "op:||", "id:d", "op:--"});
  CHECK(describe("'x' \"s\\\"t\" true") == std::vector<std::string>{"lit:'x'", "lit:\"s\\\"t\"", "lit:true"});

  const auto toks = minij::tokenize({"int\n  x"});
  REQUIRE(toks.size() == 2);
  CHECK(toks[1].line == 2);
  CHECK(toks[1].column == 3);
}

TEST_CASE("lexical errors carry a location") {
  for (std::string bad : {"\"unterminated", "/* open", "a # b", "'ab'"}) {
    CAPTURE(bad);
    try {
      minij::tokenize({bad});
      FAIL("accepted");
    } catch (const minij::ParseError& e) {
      CHECK(e.line() == 1);
      CHECK(e.column() >= 1);
      CHECK(e.code() == ErrorCode::kParseError);
    }
  }
}

TEST_CASE("minimal method") {
  const Ast ast = minij::parse_method({"void f(){}"});
  CHECK(ast.root().kind == "MethodDecl");
  CHECK(ast.to_syntax() == S::nonterminal("MethodDecl", {S::terminal("PrimitiveType", "void"), S::terminal("Name", "f"),
                                                         S::terminal("Block", "{}")}));
}

TEST_CASE("identity method against a hand-drawn tree") {
  const Ast ast = minij::parse_method({"int f(int x){return x;}"});
  const SyntaxNode expected = S::nonterminal(
      "MethodDecl", {S::terminal("PrimitiveType", "int"), S::terminal("Name", "f"),
                     S::nonterminal("Param", {S::terminal("PrimitiveType", "int"), S::terminal("Name", "x")}),
                     S::nonterminal("Block", {S::nonterminal("ReturnStmt", {S::terminal("Name", "x")})})});
  CHECK(ast == Ast(expected));
  CHECK(ast.size() == 9);
}

TEST_CASE("do-while and for variants") {
  const Ast dw = minij::parse_method({kCountDoWhile});
  CHECK(dw.root().kind == "MethodDecl");
  CHECK(count_kind(dw, "DoStmt") == 1);
  CHECK(count_kind(dw, "IfStmt") == 1);
  const Ast fr = minij::parse_method({kCountFor});
  CHECK(count_kind(fr, "ForStmt") == 1);
  CHECK(count_kind(fr, "PostfixExpr:++") == 2);
  CHECK(count_kind(fr, "Call") == 1);
}

TEST_CASE("precedence") {
  const Ast ast = minij::parse_method({"int f(){ return a + b * c == d || e && !g; }"});
  const S ret = ast.to_syntax().children[2].children[0];
  CHECK(ret.children[0].kind == "BinaryExpr:or");
  CHECK(ret.children[0].children[0].kind == "BinaryExpr:==");
  CHECK(ret.children[0].children[0].children[0].kind == "BinaryExpr:+");
  CHECK(ret.children[0].children[0].children[0].children[1].kind == "BinaryExpr:*");
  CHECK(ret.children[0].children[1].kind == "BinaryExpr:&&");
  CHECK(ret.children[0].children[1].children[1].kind == "UnaryExpr:!");

  const Ast assign = minij::parse_method({"void f(){ a = b = c; }"});
  const S stmt = assign.to_syntax().children[2].children[0].children[0];
  CHECK(stmt.kind == "Assign");
  CHECK(stmt.children[1].kind == "Assign");
}

TEST_CASE("every construct parses") {
  const char* src = R"(String[] all(int[] xs, Foo foo) {
    int n = xs.length;
    boolean ok = true;
    char c = 'z';
    Foo[] arr = new Foo[n];
    Bar b = new Bar(1, "two");
    while (n > 0) { n--; }
    if (ok) return null; else { ++n; }
    for (; ; ) { break_(); }
    foo.bar(xs[0] % 2, -n, +n);
    return arr;
  })";
  const Ast ast = minij::parse_method({src});
  for (const char* kind : {"ArrayType", "ClassType", "NewArray", "NewObject", "WhileStmt", "IfStmt", "ForStmt",
                           "Index", "FieldAccess", "Call", "CharLit", "StringLit", "BoolLit", "UnaryExpr:-",
                           "UnaryExpr:+", "UnaryExpr:++", "PostfixExpr:--", "BinaryExpr:%"}) {
    CAPTURE(kind);
    CHECK(count_kind(ast, kind) >= 1);
  }
}

TEST_CASE("parse errors") {
  for (const char* bad : {"", "int f(", "int f() { return x }", "int f() { x = ; }", "f() {}",
                          "int f() {} int g() {}", "int f() { if x {} }"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(minij::parse_method({bad}), minij::ParseError);
  }
}

TEST_CASE("unbalanced delimiters are always rejected") {
  Rng rng(21);
  int mutated = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::string src = testing::random_minij_method(rng, 40);
    std::vector<std::size_t> delims;
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (std::string_view("(){}[]").find(src[i]) != std::string_view::npos) delims.push_back(i);
    }
    REQUIRE_FALSE(delims.empty());
    // Dropping or duplicating one delimiter unbalances its kind.
    const std::size_t at = delims[rng.below(delims.size())];
    if (rng.below(2)) src.erase(at, 1);
    else src.insert(at, 1, src[at]);
    ++mutated;
    CAPTURE(src);
    CHECK_THROWS_AS(minij::parse_method({src}), minij::ParseError);
  }
  CHECK(mutated == 300);
}

TEST_CASE("parsing is deterministic") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::string src = testing::random_minij_method(rng, 30);
    CHECK(serialize_ast(minij::parse_method({src})) == serialize_ast(minij::parse_method({src})));
  }
}

TEST_CASE("target name extraction") {
  const Ast ast = minij::parse_method({"int f(int x){return x + 1;}"});
  const auto [masked, name] = minij::extract_target_name(ast);
  CHECK(name == "f");
  CHECK(masked.node(2).value == "METHOD_NAME");
  CHECK(masked.size() == ast.size());
  for (const auto& n : ast.nodes()) {
    if (n.id != 2) CHECK(masked.node(n.id).value == n.value);
  }

  const auto [again, second] = minij::extract_target_name(masked);
  CHECK(second == "METHOD_NAME");
  CHECK(again == masked);

  const Ast long_name = minij::parse_method({"void setMaxConnectionsPerServer(int n){ max = n; }"});
  CHECK(minij::extract_target_name(long_name).second == "setMaxConnectionsPerServer");

  try {
    minij::extract_target_name(Ast(S::nonterminal("Block", {S::terminal("Name", "x")})));
    FAIL("accepted a non-method");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotAMethod);
  }
}

TEST_CASE("splitting a file into methods") {
  const auto units = minij::split_methods({"int a() { return 1; }\n\nvoid b(int x) { if (x) { x = 2; } }\n", "f.mnj"});
  REQUIRE(units.size() == 2);
  CHECK(minij::extract_target_name(minij::parse_method(units[1])).second == "b");
  CHECK(units[1].origin.rfind("f.mnj", 0) == 0);
}
