#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "code2seq/dataset.hpp"
#include "code2seq/model.hpp"

namespace code2seq {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// Case-insensitive multiset matching; order is ignored.
Prf subtoken_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

struct F1Report {
  Prf micro;  // canonical
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t examples = 0;
};

/// Pairs of (predicted, gold).
using SubtokenPair = std::pair<std::vector<std::string>, std::vector<std::string>>;
F1Report corpus_f1(const std::vector<SubtokenPair>& pairs);

struct BleuReport {
  double bleu = 0.0;  // 0..100
  std::array<double, 4> precisions{};
  double brevity_penalty = 1.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

/// Lowercased whitespace tokenization.
std::vector<std::string> bleu_tokenize(std::string_view text);

/// Corpus BLEU-4. Orders n >= 2 with no match anywhere in the corpus use
/// (0 + 1) / (total + 1). Throws kEmptyCandidateSet.
BleuReport smoothed_bleu(const std::vector<std::vector<std::string>>& candidates,
                         const std::vector<std::vector<std::vector<std::string>>>& references);

/// `gold | predicted | score` with space-joined subtokens.
struct DumpLine {
  std::vector<std::string> gold;
  std::vector<std::string> predicted;
  double score = 0.0;
};
std::string format_dump_line(const DumpLine& line);
DumpLine parse_dump_line(std::string_view text);
std::vector<DumpLine> read_prediction_dump(const std::filesystem::path& file);

F1Report dump_f1(const std::vector<DumpLine>& lines);
BleuReport dump_bleu(const std::vector<DumpLine>& lines);

std::string format_f1_report(const F1Report& report);
std::string format_bleu_report(const BleuReport& report);

struct AblationRow {
  Ablation variant = Ablation::kNone;
  F1Report report;
  double delta_f1 = 0.0;  // percentage points against the full model
};

/// Scores the F1 of each variant; the full model must be present.
std::vector<AblationRow> ablation_rows(const std::vector<std::pair<Ablation, F1Report>>& results);

/// Loads `<dir>/<variant>.ckpt` for all 7 variants and scores them on
/// `examples`. Throws kMissingCheckpoint naming the absent variant.
std::vector<AblationRow> ablation_report(const std::filesystem::path& dir, const std::vector<Example>& examples);

/// Tab-separated: variant, precision, recall, F1, delta F1 (percent).
std::string format_ablation_table(const std::vector<AblationRow>& rows);

/// Greedy-decodes every example and pairs the result with its gold target.
std::vector<DumpLine> predict_dataset(Model& model, const std::vector<Example>& examples);

}  // namespace code2seq
