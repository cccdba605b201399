#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "code2seq/ast.hpp"
#include "code2seq/random.hpp"

namespace code2seq {

struct ExtractionConfig {
  int max_path_length = 9;  // nonterminal nodes on the path, apex included
  int max_path_width = 0;   // 0 disables; reserved
  std::size_t max_paths_per_example = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Terminal-to-terminal walk through the lowest common ancestor.
/// `nodes` holds every node id from the left terminal to the right one.
struct AstPath {
  std::vector<NodeId> nodes;
  std::size_t apex = 0;  // index into `nodes` of the lowest common ancestor

  NodeId left() const { return nodes.front(); }
  NodeId right() const { return nodes.back(); }
  std::size_t length() const { return nodes.size(); }
  std::size_t interior_count() const { return nodes.size() - 2; }
};

/// All left-to-right terminal pairs whose path has at most
/// `cfg.max_path_length` interior nodes, ordered by (left, right).
/// Throws `kTooFewTerminals` for trees with fewer than two terminals.
std::vector<AstPath> enumerate_paths(const Ast& ast, const ExtractionConfig& cfg);

/// Counts distinct kinds seen in rendered paths and enforces the 364-symbol
/// limit on the rendered vocabulary (each kind appears bare, `^` and `_`).
class SymbolRegistry {
 public:
  static constexpr std::size_t kMaxSymbols = 364;

  void add_kind(const std::string& kind);
  std::size_t kind_count() const { return kinds_.size(); }
  std::size_t symbol_count() const { return 3 * kinds_.size(); }

 private:
  std::set<std::string> kinds_;
};

/// `Kind^` on the way up, bare `Kind` at the apex, `Kind_` on the way down.
std::vector<std::string> render_path_symbols(const Ast& ast, const AstPath& path,
                                             SymbolRegistry* registry = nullptr);

/// camelCase / snake_case / digit-boundary splitting, lowercased.
std::vector<std::string> split_subtokens(std::string_view token);

/// Sorted indices of a uniform k-subset of [0, n), or all of them if n <= k.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng);

template <typename T>
std::vector<T> sample_paths(std::span<const T> paths, std::size_t k, Rng& rng) {
  std::vector<T> out;
  for (std::size_t i : sample_indices(paths.size(), k, rng)) out.push_back(paths[i]);
  return out;
}

}  // namespace code2seq
