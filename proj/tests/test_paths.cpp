#include <cctype>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"

#include "code2seq/dataset.hpp"
#include "code2seq/minij.hpp"
#include "code2seq/paths.hpp"
#include "oracles.hpp"

using namespace code2seq;

namespace {

using S = SyntaxNode;

Ast masked_identity() { return minij::extract_target_name(minij::parse_method({"int f(int x){return x;}"})).first; }

std::vector<std::vector<NodeId>> node_lists(const std::vector<AstPath>& paths) {
  std::vector<std::vector<NodeId>> out;
  for (const auto& p : paths) out.push_back(p.nodes);
  return out;
}

std::string letters_and_digits(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

TEST_CASE("pair count without a length limit") {
  Rng rng(2);
  ExtractionConfig cfg;
  cfg.max_path_length = 1000;
  for (int trial = 0; trial < 100; ++trial) {
    const Ast ast(S::nonterminal("R", {testing::random_tree(rng, 30), S::terminal("T", "end")}));
    const std::size_t n = ast.terminals().size();
    CHECK(enumerate_paths(ast, cfg).size() == n * (n - 1) / 2);
  }
}

TEST_CASE("paths of the masked identity method") {
  const Ast ast = masked_identity();
  const auto paths = enumerate_paths(ast, ExtractionConfig{});
  // Five terminals, including the masked name slot.
  CHECK(paths.size() == 10);
  CHECK(node_lists(paths) == testing::brute_force_paths(ast, 9));

  std::vector<std::vector<std::string>> rendered;
  for (const auto& p : paths) rendered.push_back(render_path_symbols(ast, p));
  // int (param type) -> x (returned name): up through Param, apex MethodDecl, down Block, ReturnStmt.
  CHECK(rendered[8] == std::vector<std::string>{"Param^", "MethodDecl", "Block_", "ReturnStmt_"});
  CHECK(paths[8].interior_count() == 4);
  CHECK(rendered[7] == std::vector<std::string>{"Param"});
  CHECK(rendered[0] == std::vector<std::string>{"MethodDecl"});
}

TEST_CASE("sibling terminals give a three-node path") {
  const Ast ast(S::nonterminal("Assign", {S::terminal("Name", "a"), S::terminal("Name", "b")}));
  const auto paths = enumerate_paths(ast, ExtractionConfig{});
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].nodes == std::vector<NodeId>{1, 0, 2});
  CHECK(render_path_symbols(ast, paths[0]) == std::vector<std::string>{"Assign"});
}

TEST_CASE("too few terminals") {
  try {
    enumerate_paths(Ast(S::nonterminal("A", {S::terminal("B", "x")})), ExtractionConfig{});
    FAIL("accepted a single terminal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooFewTerminals);
  }
  CHECK_THROWS_AS(build_example(Ast(S::terminal("B", "x")), "f", ExtractionConfig{}), Error);
}

TEST_CASE("enumeration matches the brute-force oracle under length limits") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Ast ast(S::nonterminal("R", {testing::random_tree(rng, 40), S::terminal("T", "end")}));
    for (int limit : {1, 2, 3, 5, 9}) {
      ExtractionConfig cfg;
      cfg.max_path_length = limit;
      CHECK(node_lists(enumerate_paths(ast, cfg)) == testing::brute_force_paths(ast, limit));
    }
  }
}

TEST_CASE("path shape invariants") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Ast ast = minij::parse_method({testing::random_minij_method(rng, 30)});
    if (ast.terminals().size() < 2) continue;
    for (const auto& p : enumerate_paths(ast, ExtractionConfig{})) {
      CHECK(ast.node(p.left()).is_terminal());
      CHECK(ast.node(p.right()).is_terminal());
      for (std::size_t i = 1; i + 1 < p.length(); ++i) CHECK_FALSE(ast.node(p.nodes[i]).is_terminal());
      CHECK(p.nodes[p.apex] == ast.lowest_common_ancestor(p.left(), p.right()));
      CHECK(p.interior_count() <= 9);
      const auto symbols = render_path_symbols(ast, p);
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        const std::size_t at = i + 1;
        const char last = symbols[i].back();
        if (at < p.apex) CHECK(last == '^');
        else if (at > p.apex) CHECK(last == '_');
        else CHECK((last != '^' && last != '_'));
        CHECK(symbols[i].find_first_of(" ,|") == std::string::npos);
      }
    }
  }
}

TEST_CASE("loop kind is the only difference between the two loop shapes") {
  // Same statement under a do-while and under a for-loop, reached from a local declared before the loop.
  const Ast a = minij::parse_method({"void f(){ int a = 0; do { x = y; } while (c); }"});
  const Ast b = minij::parse_method({"void f(){ int a = 0; for (;c;) { x = y; } }"});
  auto render_xy = [](const Ast& ast) {
    for (const auto& p : enumerate_paths(ast, ExtractionConfig{})) {
      if (ast.node(p.left()).value == "a" && ast.node(p.right()).value == "x") return render_path_symbols(ast, p);
    }
    return std::vector<std::string>{};
  };
  auto ra = render_xy(a), rb = render_xy(b);
  REQUIRE(ra.size() == rb.size());
  REQUIRE(ra.size() > 2);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i] != rb[i]) {
      ++differing;
      CHECK(ra[i] == "DoStmt_");
      CHECK(rb[i] == "ForStmt_");
    }
  }
  CHECK(differing == 1);
}

TEST_CASE("symbol vocabulary bound") {
  SymbolRegistry reg;
  for (auto k : minij::kNodeKinds) reg.add_kind(std::string(k));
  for (auto k : minij::kPostfixKinds) reg.add_kind(std::string(k));
  CHECK(reg.symbol_count() <= SymbolRegistry::kMaxSymbols);
  SymbolRegistry full;
  for (int i = 0; i < 121; ++i) full.add_kind("K" + std::to_string(i));
  CHECK_THROWS_AS(full.add_kind("overflow"), Error);
}

TEST_CASE("split_subtokens") {
  using V = std::vector<std::string>;
  CHECK(split_subtokens("ArrayList") == V{"array", "list"});
  CHECK(split_subtokens("setMaxConnectionsPerServer") == V{"set", "max", "connections", "per", "server"});
  CHECK(split_subtokens("x") == V{"x"});
  CHECK(split_subtokens("HTTPServer") == V{"http", "server"});
  CHECK(split_subtokens("snake_case_name") == V{"snake", "case", "name"});
  CHECK(split_subtokens("utf8Decoder") == V{"utf", "8", "decoder"});
  CHECK(split_subtokens("a$b") == V{"a", "b"});
  CHECK(split_subtokens("___") == V{"_"});
  CHECK(split_subtokens("getX") == V{"get", "x"});

  Rng rng(9);
  const std::string alphabet = "abcXYZ09_$";
  for (int trial = 0; trial < 500; ++trial) {
    std::string tok;
    const std::size_t len = 1 + rng.below(12);
    for (std::size_t i = 0; i < len; ++i) tok += alphabet[rng.below(alphabet.size())];
    std::string joined;
    for (const auto& s : split_subtokens(tok)) {
      CHECK_FALSE(s.empty());
      if (s != "_") joined += s;
    }
    CHECK(joined == letters_and_digits(tok));
  }
}

TEST_CASE("sampling") {
  Rng rng(1);
  CHECK(sample_indices(5, 200, rng) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  Rng a(42), b(42);
  CHECK(sample_indices(100, 10, a) == sample_indices(100, 10, b));

  const std::vector<int> items{5, 6, 7};
  CHECK(sample_paths<int>(items, 10, rng) == items);

  Rng freq(123);
  std::vector<std::size_t> hits(10, 0);
  const std::size_t draws = 100000;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto s = sample_indices(10, 3, freq);
    REQUIRE(s.size() == 3);
    REQUIRE(std::set<std::size_t>(s.begin(), s.end()).size() == 3);
    for (auto i : s) ++hits[i];
  }
  const double sigma = std::sqrt(0.3 * 0.7 / static_cast<double>(draws));
  for (auto h : hits) CHECK(std::fabs(static_cast<double>(h) / draws - 0.3) < 3 * sigma);
}

TEST_CASE("build_example") {
  const Example ex = build_example(masked_identity(), "f", ExtractionConfig{});
  CHECK(ex.contexts.size() == 10);
  CHECK(ex.target == std::vector<std::string>{"f"});
  CHECK(ex.contexts[8].left == std::vector<std::string>{"int"});
  CHECK(ex.contexts[8].right == std::vector<std::string>{"x"});
  CHECK(ex.contexts[0].right == std::vector<std::string>{"method", "name"});
  CHECK(build_example(masked_identity(), "countOccurrences", ExtractionConfig{}).target ==
        std::vector<std::string>{"count", "occurrences"});
}

TEST_CASE("dataset line format") {
  const Example ex = build_example(masked_identity(), "getValue", ExtractionConfig{});
  const std::string line = format_example_line(ex);
  CHECK(line.rfind("get|value int,MethodDecl,method|name ", 0) == 0);
  CHECK(line.find("  ") == std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(parse_example_line(line) == ex);
  CHECK(format_context(ex.contexts[8]) == "int,Param^|MethodDecl|Block_|ReturnStmt_,x");

  for (const char* bad : {"", "target", "t a,b", "t a,b,c,d", "t ,b,c", "t a,,c", "t a||b,c,d", " t a,b,c",
                          "t a,b,c ", "t  a,b,c"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_example_line(bad), Error);
  }

  const auto dir = std::filesystem::temp_directory_path() / "c2s_paths_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "d.c2s";
  write_dataset(file, {ex, ex});
  CHECK(read_dataset(file) == std::vector<Example>{ex, ex});
  CHECK_THROWS_AS(read_dataset(dir / "missing.c2s"), Error);
  std::filesystem::remove_all(dir);
}
