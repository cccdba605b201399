#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "code2seq/ast.hpp"
#include "code2seq/paths.hpp"

namespace code2seq {

struct PathContext {
  std::vector<std::string> left;   // subtokens of the left terminal value
  std::vector<std::string> path;   // rendered path symbols
  std::vector<std::string> right;  // subtokens of the right terminal value

  bool operator==(const PathContext&) const = default;
  auto operator<=>(const PathContext&) const = default;
};

struct Example {
  std::vector<PathContext> contexts;
  std::vector<std::string> target;

  bool operator==(const Example&) const = default;
};

/// Every enumerated context plus the split target. Sampling down to k happens
/// later, per training iteration.
Example build_example(const Ast& ast, std::string_view target, const ExtractionConfig& cfg,
                      SymbolRegistry* registry = nullptr);

/// `left,path,right` with `|` between subtokens / symbols.
std::string format_context(const PathContext& ctx);

/// One dataset line without the trailing newline:
/// `target ctx ctx ...`, single spaces, no empty fields.
std::string format_example_line(const Example& example);

/// Strict inverse of format_example_line. Throws `kMalformedText`.
Example parse_example_line(std::string_view line);

std::vector<Example> read_dataset(const std::filesystem::path& file);
void write_dataset(const std::filesystem::path& file, const std::vector<Example>& examples);

}  // namespace code2seq
