#include "code2seq/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "code2seq/error.hpp"

namespace code2seq {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::vector<std::string> reserved,
                             const std::unordered_map<std::string, std::size_t>& counts,
                             std::size_t max_size) {
  std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens = std::move(reserved);
  for (auto& [tok, n] : sorted) {
    if (max_size && tokens.size() >= max_size) break;
    if (std::find(tokens.begin(), tokens.end(), tok) != tokens.end()) continue;
    tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorCode::kInvalidIndex, "vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

int Vocabulary::id(std::string_view token, int unk) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk : it->second;
}

std::string join_tokens(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

namespace {

std::vector<std::string> source_reserved() { return {std::string(kPad), std::string(kUnk)}; }
std::vector<std::string> target_reserved() {
  return {std::string(kPad), std::string(kSos), std::string(kEos), std::string(kUnk)};
}

const char* const kSections[] = {"nodes", "subtokens", "tokens", "target", "names"};

}  // namespace

Vocabularies Vocabularies::build(const std::vector<Example>& train, const VocabLimits& limits) {
  std::unordered_map<std::string, std::size_t> nodes, subtokens, tokens, target, names;
  for (const auto& ex : train) {
    for (const auto& t : ex.target) ++target[t];
    ++names[join_tokens(ex.target)];
    for (const auto& ctx : ex.contexts) {
      for (const auto& s : ctx.path) ++nodes[s];
      for (const auto& s : ctx.left) ++subtokens[s];
      for (const auto& s : ctx.right) ++subtokens[s];
      ++tokens[join_tokens(ctx.left)];
      ++tokens[join_tokens(ctx.right)];
    }
  }
  Vocabularies v;
  v.nodes = Vocabulary::build(source_reserved(), nodes);
  v.subtokens = Vocabulary::build(source_reserved(), subtokens, limits.max_subtokens);
  v.tokens = Vocabulary::build(source_reserved(), tokens, limits.max_tokens);
  v.target = Vocabulary::build(target_reserved(), target, limits.max_target);
  v.names = Vocabulary::build(target_reserved(), names, limits.max_names);
  return v;
}

void Vocabularies::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + file.string() + "'");
  const Vocabulary* all[] = {&nodes, &subtokens, &tokens, &target, &names};
  for (std::size_t s = 0; s < 5; ++s) {
    for (const auto& t : all[s]->tokens()) out << kSections[s] << '\t' << t << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + file.string() + "'");
}

Vocabularies Vocabularies::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open vocabulary '" + file.string() + "'");
  std::vector<std::string> lists[5];
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kMalformedText, file.string() + ":" + std::to_string(line_no) + ": missing tab");
    }
    const std::string section = line.substr(0, tab);
    const auto it = std::find(std::begin(kSections), std::end(kSections), section);
    if (it == std::end(kSections)) {
      throw Error(ErrorCode::kMalformedText, file.string() + ":" + std::to_string(line_no) +
                                                 ": unknown section '" + section + "'");
    }
    lists[it - std::begin(kSections)].push_back(line.substr(tab + 1));
  }
  Vocabularies v;
  v.nodes = Vocabulary(std::move(lists[0]));
  v.subtokens = Vocabulary(std::move(lists[1]));
  v.tokens = Vocabulary(std::move(lists[2]));
  v.target = Vocabulary(std::move(lists[3]));
  v.names = Vocabulary(std::move(lists[4]));
  return v;
}

void Vocabularies::store(CheckpointArchive& archive) const {
  archive.put_strings("vocab.nodes", nodes.tokens());
  archive.put_strings("vocab.subtokens", subtokens.tokens());
  archive.put_strings("vocab.tokens", tokens.tokens());
  archive.put_strings("vocab.target", target.tokens());
  archive.put_strings("vocab.names", names.tokens());
}

Vocabularies Vocabularies::restore(const CheckpointArchive& archive) {
  Vocabularies v;
  v.nodes = Vocabulary(archive.get_strings("vocab.nodes"));
  v.subtokens = Vocabulary(archive.get_strings("vocab.subtokens"));
  v.tokens = Vocabulary(archive.get_strings("vocab.tokens"));
  v.target = Vocabulary(archive.get_strings("vocab.target"));
  v.names = Vocabulary(archive.get_strings("vocab.names"));
  return v;
}

}  // namespace code2seq
