#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "code2seq/minij.hpp"

namespace code2seq::testing {

namespace {

const char* const kKinds[] = {"A", "B", "Block", "Call", "IfStmt", "X"};

SyntaxNode grow(Rng& rng, std::size_t& budget, int depth) {
  --budget;
  const bool leaf = budget == 0 || depth >= 6 || rng.below(3) == 0;
  if (leaf) return SyntaxNode::terminal("T", "v" + std::to_string(rng.below(5)));
  std::vector<SyntaxNode> kids;
  const std::size_t want = 1 + rng.below(3);
  for (std::size_t i = 0; i < want && budget > 0; ++i) kids.push_back(grow(rng, budget, depth + 1));
  if (kids.empty()) return SyntaxNode::terminal("T", "leaf");
  return SyntaxNode::nonterminal(kKinds[rng.below(std::size(kKinds))], std::move(kids));
}

struct MiniJGen {
  Rng& rng;
  int depth = 0;

  std::string pick(std::initializer_list<const char*> xs) {
    const std::size_t i = rng.below(xs.size());
    return *(xs.begin() + static_cast<std::ptrdiff_t>(i));
  }

  std::string ident() { return pick({"a", "b", "count", "xs", "total", "fooBar"}); }
  std::string type() { return pick({"int", "boolean", "char", "String", "Foo", "int[]", "Foo[][]"}); }

  std::string expr() {
    ++depth;
    std::string out;
    const std::uint64_t choice = depth > 2 ? rng.below(4) : rng.below(14);
    switch (choice) {
      case 0: out = ident(); break;
      case 1: out = std::to_string(rng.below(100)); break;
      case 2: out = pick({"'c'", "\"str\"", "true", "false"}); break;
      case 3: out = ident(); break;
      case 4: out = expr() + " " + pick({"||", "&&", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%"}) + " " + expr(); break;
      case 5: out = pick({"!", "-", "+", "++", "--"}) + ident(); break;
      case 6: out = ident() + pick({"++", "--"}); break;
      case 7: out = ident() + "(" + (rng.below(2) ? expr() : "") + ")"; break;
      case 8: out = ident() + "." + ident(); break;
      case 9: out = ident() + "[" + expr() + "]"; break;
      case 10: out = "new Foo(" + (rng.below(2) ? expr() : "") + ")"; break;
      case 11: out = "new int[" + expr() + "]"; break;
      case 12: out = "(" + expr() + ")"; break;
      default: out = ident() + "." + ident() + "(" + expr() + ", " + expr() + ")"; break;
    }
    --depth;
    return out;
  }

  std::string stmt() {
    ++depth;
    std::string out;
    const std::uint64_t choice = depth > 2 ? rng.below(3) : rng.below(9);
    switch (choice) {
      case 0: out = ident() + " = " + expr() + ";"; break;
      case 1: out = type() + " " + ident() + (rng.below(2) ? " = " + expr() : "") + ";"; break;
      case 2: out = "return" + (rng.below(2) ? " " + expr() : std::string()) + ";"; break;
      case 3: out = "if (" + expr() + ") " + stmt() + (rng.below(2) ? " else " + stmt() : ""); break;
      case 4: out = "while (" + expr() + ") " + stmt(); break;
      case 5: out = "do " + stmt() + " while (" + expr() + ");"; break;
      case 6: out = "for (int i = 0; i < " + expr() + "; i++) " + stmt(); break;
      case 7: out = "{ " + stmt() + " " + stmt() + " }"; break;
      default: out = "{}"; break;
    }
    --depth;
    return out;
  }

  std::string method() {
    std::string params;
    const std::uint64_t n = rng.below(3);
    for (std::uint64_t i = 0; i < n; ++i) params += (i ? ", " : "") + type() + " p" + std::to_string(i);
    std::string body;
    const std::uint64_t s = rng.below(4);
    for (std::uint64_t i = 0; i < s; ++i) body += stmt() + " ";
    return pick({"int", "void", "String"}) + " " + ident() + "(" + params + ") { " + body + "}";
  }
};

std::vector<NodeId> chain(const Ast& ast, NodeId n) {
  std::vector<NodeId> out{n};
  while (out.back() != 0) out.push_back(ast.parent(out.back()));
  return out;
}

}  // namespace

SyntaxNode random_tree(Rng& rng, std::size_t max_nodes) {
  std::size_t budget = std::max<std::size_t>(max_nodes, 1);
  return grow(rng, budget, 0);
}

std::string random_minij_method(Rng& rng, std::size_t max_terminals) {
  for (;;) {
    MiniJGen gen{rng};
    std::string src = gen.method();
    const Ast ast = minij::parse_method({src});
    if (ast.terminals().size() <= max_terminals) return src;
  }
}

NodeId chain_lca(const Ast& ast, NodeId a, NodeId b) {
  const auto ca = chain(ast, a);
  const auto cb = chain(ast, b);
  for (NodeId x : ca) {
    if (std::find(cb.begin(), cb.end(), x) != cb.end()) return x;
  }
  return 0;
}

std::vector<std::vector<NodeId>> brute_force_paths(const Ast& ast, int max_interior) {
  std::vector<NodeId> leaves;
  for (const auto& n : ast.nodes()) {
    if (n.children.empty()) leaves.push_back(n.id);
  }
  std::vector<std::vector<NodeId>> out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      const NodeId top = chain_lca(ast, leaves[i], leaves[j]);
      std::vector<NodeId> path;
      for (NodeId x : chain(ast, leaves[i])) {
        path.push_back(x);
        if (x == top) break;
      }
      std::vector<NodeId> down;
      for (NodeId x : chain(ast, leaves[j])) {
        if (x == top) break;
        down.push_back(x);
      }
      path.insert(path.end(), down.rbegin(), down.rend());
      if (static_cast<int>(path.size()) - 2 <= max_interior) out.push_back(std::move(path));
    }
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / scale;
}

GradCheck check_gradients(const std::vector<Parameter*>& params, const std::function<double()>& loss,
                          const std::function<void()>& backward, double eps) {
  for (Parameter* p : params) p->zero_grad();
  backward();
  GradCheck out;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = loss();
      p->value[i] = saved - eps;
      const double down = loss();
      p->value[i] = saved;
      const double err = relative_error(p->gradient[i], (up - down) / (2.0 * eps));
      ++out.checked;
      if (err > out.max_error) {
        out.max_error = err;
        out.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

}  // namespace code2seq::testing
