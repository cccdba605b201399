#pragma once

#include <string>
#include <vector>

#include "code2seq/dataset.hpp"
#include "code2seq/model.hpp"

namespace code2seq {

struct AttentionEntry {
  std::size_t context = 0;  // index into the originating Example's contexts
  double weight = 0.0;

  bool operator==(const AttentionEntry&) const = default;
};

struct Prediction {
  std::vector<std::string> subtokens;  // EOS stripped
  std::vector<int> ids;                // output-vocabulary ids
  double score = 0.0;                  // summed log-probabilities
  bool finished = false;               // EOS was emitted (not forced by the cap)
  /// One row per decoded subtoken, sorted by weight descending. Empty rows
  /// for variants without attention.
  std::vector<std::vector<AttentionEntry>> trace;
  std::size_t context_count = 0;  // contexts in the source example

  std::size_t steps() const { return std::max<std::size_t>(1, subtokens.size() + (finished ? 1 : 0)); }
  double normalized_score() const { return score / static_cast<double>(steps()); }

  bool operator==(const Prediction&) const = default;
};

/// Argmax decoding from SOS until EOS or the length cap.
Prediction greedy_decode(Model& model, const ExampleIds& example);

/// Beam search ranked by logprob / length, best first. Width 1 reduces to
/// greedy_decode.
std::vector<Prediction> beam_decode(Model& model, const ExampleIds& example, std::size_t beam);

struct ExplainedContext {
  std::size_t context = 0;
  double weight = 0.0;
  std::string rendered;  // left,path,right
};

struct ExplainedStep {
  std::string subtoken;
  std::vector<ExplainedContext> contexts;
};

/// Top-`top_n` attended contexts per decoded subtoken. Throws
/// kMismatchedExample if the prediction was not produced from `example`.
std::vector<ExplainedStep> explain(const Prediction& prediction, const Example& example, std::size_t top_n);

std::string render_explanation(const std::vector<ExplainedStep>& steps);
/// One JSON object: {"index":..., "steps":[{"subtoken":..., "contexts":[...]}]}.
std::string explanation_json(std::size_t example_index, const std::vector<ExplainedStep>& steps);

}  // namespace code2seq
