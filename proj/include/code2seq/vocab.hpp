#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "code2seq/checkpoint.hpp"
#include "code2seq/dataset.hpp"

namespace code2seq {

inline constexpr std::string_view kPad = "<PAD>";
inline constexpr std::string_view kSos = "<SOS>";
inline constexpr std::string_view kEos = "<EOS>";
inline constexpr std::string_view kUnk = "<UNK>";

// Target-side reserved ids.
inline constexpr int kPadId = 0;
inline constexpr int kSosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kTargetUnkId = 3;
// Source-side (node symbols, subtokens, full tokens) reserved ids.
inline constexpr int kSourceUnkId = 1;

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Reserved entries first, then tokens by descending count (ties by
  /// lexicographic order). `max_size` 0 means unlimited; it counts reserved
  /// entries too.
  static Vocabulary build(std::vector<std::string> reserved,
                          const std::unordered_map<std::string, std::size_t>& counts,
                          std::size_t max_size = 0);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  /// Id of `token`, or `unk` when absent.
  int id(std::string_view token, int unk) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct VocabLimits {
  std::size_t max_subtokens = 0;
  std::size_t max_tokens = 0;
  std::size_t max_target = 0;
  std::size_t max_names = 0;
};

/// The source vocabularies (path symbols, subtokens, whole tokens) and the
/// target vocabularies (subtokens, whole names). Whole-token and whole-name
/// vocabularies serve the no-token-split and no-decoder variants.
struct Vocabularies {
  Vocabulary nodes;
  Vocabulary subtokens;
  Vocabulary tokens;
  Vocabulary target;
  Vocabulary names;

  /// Built from training examples only.
  static Vocabularies build(const std::vector<Example>& train, const VocabLimits& limits = {});

  void save(const std::filesystem::path& file) const;
  static Vocabularies load(const std::filesystem::path& file);

  void store(CheckpointArchive& archive) const;
  static Vocabularies restore(const CheckpointArchive& archive);

  bool operator==(const Vocabularies&) const = default;
};

std::string join_tokens(const std::vector<std::string>& parts, char sep = '|');

}  // namespace code2seq
