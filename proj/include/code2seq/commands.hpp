#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "code2seq/config.hpp"
#include "code2seq/evaluator.hpp"
#include "code2seq/trainer.hpp"

namespace code2seq {

struct PreprocessOptions {
  std::filesystem::path source;  // directory (searched recursively) or single file
  std::string out_prefix;
};

struct PreprocessStats {
  std::size_t files = 0;
  std::size_t skipped_files = 0;
  std::size_t skipped_methods = 0;
  std::size_t examples = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  double avg_paths = 0.0;
  double avg_target_len = 0.0;
};

/// Extracts every method under `source`, splits into train/val/test with the
/// configured seed and writes `<prefix>.{train,val,test}.c2s` and
/// `<prefix>.vocab` (training split only). Throws kNoParsableFiles.
PreprocessStats cmd_preprocess(const PreprocessOptions& opts, const RunConfig& cfg, std::ostream& out,
                               std::ostream& log);

/// Examples from one source file: MiniJ (`.mnj`, `.java`, `.minij`) or the
/// generic tree format (`.ast`). Captioning targets come from a `.caption`
/// file next to the source, one line per method.
std::vector<Example> extract_examples(const std::filesystem::path& file, const RunConfig& cfg, std::ostream& log,
                                      std::size_t* failures = nullptr);

struct TrainOptions {
  std::string dataset_prefix;
  std::filesystem::path output;    // best checkpoint; `<output>.last` holds the latest state
  std::filesystem::path resume;    // optional checkpoint to continue from
  std::filesystem::path log_file;  // defaults to `<output>.log`
};

RunSummary cmd_train(const TrainOptions& opts, const RunConfig& cfg, std::ostream& out);

enum class InputFormat { kAuto, kMiniJ, kAst, kC2s };
InputFormat parse_input_format(std::string_view name);

struct PredictOptions {
  std::filesystem::path checkpoint;
  std::string input = "-";  // `-` reads stdin
  InputFormat format = InputFormat::kAuto;
  std::size_t beam = 1;
  std::size_t explain = 0;         // top-N contexts per step; 0 disables
  std::filesystem::path trace;     // optional JSON-lines sidecar
};

/// Returns the number of inputs that failed to parse or decode.
std::size_t cmd_predict(const PredictOptions& opts, std::istream& in, std::ostream& out, std::ostream& err);

struct EvaluateOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::filesystem::path predictions;  // score an existing dump instead of decoding
  std::optional<Metric> metric;       // defaults to the configured metric
  std::filesystem::path dump;         // where to write the prediction dump
  std::filesystem::path trace;        // optional attention sidecar
  std::filesystem::path report;       // optional copy of the report
};

std::string cmd_evaluate(const EvaluateOptions& opts, const RunConfig& cfg, std::ostream& out);

struct AblateOptions {
  std::string dataset_prefix;
  std::filesystem::path dir;
  bool train = false;
};

std::vector<AblationRow> cmd_ablate(const AblateOptions& opts, const RunConfig& cfg, std::ostream& out);

}  // namespace code2seq
