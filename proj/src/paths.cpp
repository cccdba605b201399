#include <algorithm>
#include <numeric>
#include <string>

#include "code2seq/error.hpp"
#include "code2seq/paths.hpp"

namespace code2seq {

void ExtractionConfig::validate() const {
  if (max_path_length < 1) throw Error(ErrorCode::kConfigError, "max_path_length must be >= 1");
  if (max_path_width < 0) throw Error(ErrorCode::kConfigError, "max_path_width must be >= 0");
  if (max_paths_per_example < 1) throw Error(ErrorCode::kConfigError, "k must be >= 1");
}

namespace {

// Position among the apex's children of the child that leads to `node`.
std::size_t child_slot(const Ast& ast, NodeId apex, NodeId below_apex) {
  const auto& kids = ast.node(apex).children;
  return static_cast<std::size_t>(std::find(kids.begin(), kids.end(), below_apex) - kids.begin());
}

}  // namespace

std::vector<AstPath> enumerate_paths(const Ast& ast, const ExtractionConfig& cfg) {
  cfg.validate();
  const auto terms = ast.terminals();
  if (terms.size() < 2) {
    throw Error(ErrorCode::kTooFewTerminals,
                "need at least 2 terminals, tree has " + std::to_string(terms.size()));
  }
  std::vector<AstPath> out;
  std::vector<NodeId> up;
  std::vector<NodeId> down;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = i + 1; j < terms.size(); ++j) {
      const NodeId a = terms[i];
      const NodeId b = terms[j];
      const NodeId apex = ast.lowest_common_ancestor(a, b);
      const int interior = (ast.depth(a) - ast.depth(apex)) + (ast.depth(b) - ast.depth(apex)) - 1;
      if (interior > cfg.max_path_length) continue;

      up.clear();
      down.clear();
      for (NodeId v = a; v != apex; v = ast.parent(v)) up.push_back(v);
      for (NodeId v = b; v != apex; v = ast.parent(v)) down.push_back(v);
      if (cfg.max_path_width > 0) {
        const auto width = child_slot(ast, apex, down.back()) - child_slot(ast, apex, up.back());
        if (static_cast<int>(width) > cfg.max_path_width) continue;
      }

      AstPath path;
      path.nodes.reserve(up.size() + down.size() + 1);
      path.nodes.insert(path.nodes.end(), up.begin(), up.end());
      path.apex = path.nodes.size();
      path.nodes.push_back(apex);
      path.nodes.insert(path.nodes.end(), down.rbegin(), down.rend());
      out.push_back(std::move(path));
    }
  }
  return out;
}

void SymbolRegistry::add_kind(const std::string& kind) {
  if (kinds_.count(kind)) return;
  if (3 * (kinds_.size() + 1) > kMaxSymbols) {
    throw Error(ErrorCode::kVocabularyOverflow,
                "adding kind '" + kind + "' would exceed " + std::to_string(kMaxSymbols) +
                    " path symbols");
  }
  kinds_.insert(kind);
}

std::vector<std::string> render_path_symbols(const Ast& ast, const AstPath& path,
                                             SymbolRegistry* registry) {
  std::vector<std::string> out;
  out.reserve(path.interior_count());
  for (std::size_t i = 1; i + 1 < path.nodes.size(); ++i) {
    const std::string& kind = ast.node(path.nodes[i]).kind;
    if (registry) registry->add_kind(kind);
    if (i < path.apex) {
      out.push_back(kind + "^");
    } else if (i == path.apex) {
      out.push_back(kind);
    } else {
      out.push_back(kind + "_");
    }
  }
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= k) return idx;
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace code2seq
