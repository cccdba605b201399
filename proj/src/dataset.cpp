#include "code2seq/dataset.hpp"

#include <fstream>

#include "code2seq/error.hpp"

namespace code2seq {
namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

void check_field(const std::vector<std::string>& parts, const char* what) {
  if (parts.empty()) throw Error(ErrorCode::kMalformedText, std::string("empty ") + what);
  for (const auto& p : parts) {
    if (p.empty() || p.find_first_of(" ,|\n\t") != std::string::npos) {
      throw Error(ErrorCode::kMalformedText, std::string("invalid ") + what + " item '" + p + "'");
    }
  }
}

std::vector<std::string> parse_list(std::string_view field, const char* what) {
  std::vector<std::string> out;
  for (auto piece : split(field, '|')) {
    if (piece.empty()) {
      throw Error(ErrorCode::kMalformedText, std::string("empty item in ") + what + " field");
    }
    out.emplace_back(piece);
  }
  return out;
}

}  // namespace

Example build_example(const Ast& ast, std::string_view target, const ExtractionConfig& cfg,
                      SymbolRegistry* registry) {
  Example ex;
  ex.target = split_subtokens(target);
  for (const auto& path : enumerate_paths(ast, cfg)) {
    PathContext ctx;
    ctx.left = split_subtokens(ast.node(path.left()).value);
    ctx.path = render_path_symbols(ast, path, registry);
    ctx.right = split_subtokens(ast.node(path.right()).value);
    ex.contexts.push_back(std::move(ctx));
  }
  return ex;
}

std::string format_context(const PathContext& ctx) {
  check_field(ctx.left, "left token");
  check_field(ctx.path, "path");
  check_field(ctx.right, "right token");
  return join(ctx.left, '|') + ',' + join(ctx.path, '|') + ',' + join(ctx.right, '|');
}

std::string format_example_line(const Example& example) {
  check_field(example.target, "target");
  if (example.contexts.empty()) throw Error(ErrorCode::kMalformedText, "example has no contexts");
  std::string line = join(example.target, '|');
  for (const auto& ctx : example.contexts) {
    line.push_back(' ');
    line += format_context(ctx);
  }
  return line;
}

Example parse_example_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split(line, ' ');
  if (fields.size() < 2) throw Error(ErrorCode::kMalformedText, "line has no contexts");
  Example ex;
  ex.target = parse_list(fields[0], "target");
  ex.contexts.reserve(fields.size() - 1);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto parts = split(fields[i], ',');
    if (parts.size() != 3) {
      throw Error(ErrorCode::kMalformedText,
                  "context " + std::to_string(i) + " does not have 3 comma-separated fields");
    }
    PathContext ctx;
    ctx.left = parse_list(parts[0], "left");
    ctx.path = parse_list(parts[1], "path");
    ctx.right = parse_list(parts[2], "right");
    ex.contexts.push_back(std::move(ctx));
  }
  return ex;
}

std::vector<Example> read_dataset(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open dataset '" + file.string() + "'");
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_example_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& file, const std::vector<Example>& examples) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + file.string() + "'");
  for (const auto& ex : examples) out << format_example_line(ex) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + file.string() + "'");
}

}  // namespace code2seq
