#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "code2seq/checkpoint.hpp"
#include "code2seq/dataset.hpp"
#include "code2seq/graph.hpp"
#include "code2seq/vocab.hpp"

namespace code2seq {

enum class Ablation {
  kNone,
  kNoAstNodes,
  kNoDecoder,
  kNoTokenSplit,
  kNoTokens,
  kNoAttention,
  kNoRandom,
};

inline constexpr std::array<Ablation, 7> kAllVariants = {
    Ablation::kNone,         Ablation::kNoAstNodes, Ablation::kNoDecoder, Ablation::kNoTokenSplit,
    Ablation::kNoTokens,     Ablation::kNoAttention, Ablation::kNoRandom,
};

/// `full`, `no_ast_nodes`, `no_decoder`, ...
std::string_view ablation_name(Ablation a);
/// Row label of the ablation table.
std::string_view ablation_label(Ablation a);
Ablation parse_ablation(std::string_view name);

struct ModelConfig {
  std::size_t d_nodes = 128;
  std::size_t d_tokens = 128;
  std::size_t d_hidden = 128;
  std::size_t d_target = 128;
  std::size_t d_path = 128;
  std::size_t d_decoder = 320;
  std::size_t k = 200;
  double input_dropout = 0.25;
  double recurrent_dropout = 0.5;
  std::size_t max_target_len = 10;
  Ablation ablation = Ablation::kNone;

  static ModelConfig summarization() { return {}; }
  static ModelConfig captioning();

  /// Width of the per-context vector fed to W_in.
  std::size_t context_width() const;
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct ContextIds {
  std::vector<int> left;   // source subtoken ids
  std::vector<int> path;   // node symbol ids
  std::vector<int> right;
  int left_token = kSourceUnkId;  // whole-token ids
  int right_token = kSourceUnkId;
  std::size_t source_index = 0;   // position in the originating Example

  auto key() const { return std::tie(path, left, right, left_token, right_token); }
};

struct ExampleIds {
  std::vector<ContextIds> contexts;  // canonical (content-sorted) order
  std::vector<int> target;           // target subtoken ids, without EOS
  int name = kTargetUnkId;           // whole-name id
};

/// Maps strings to ids and sorts contexts by content so that the model never
/// sees the order in which they were listed.
ExampleIds encode_ids(const Example& example, const Vocabularies& vocab);

/// Encoder output for one example.
struct Encoded {
  std::vector<Var> rows;      // z_i, one per selected context
  Var z;                      // rows stacked, k' x d_hidden
  Var h0;                     // mean of z, zero-padded to the decoder width
  Var c0;                     // zeros
  std::vector<std::size_t> selected;  // indices into ExampleIds::contexts
};

struct StepResult {
  Var logits;
  LstmState state;
  Var alpha;  // invalid when the variant has no attention
};

/// Per-call randomness for training; null means inference (no dropout).
struct DropoutSource {
  Rng* rng = nullptr;
  bool active() const { return rng != nullptr; }
};

class Model {
 public:
  Model(const ModelConfig& config, Vocabularies vocab, Rng& rng);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabularies& vocab() const noexcept { return vocab_; }

  /// Every trainable tensor, in a fixed order.
  std::vector<Parameter*> parameters();
  Parameter* find(std::string_view name);

  /// Output vocabulary: target subtokens, or whole names for no_decoder.
  const Vocabulary& output_vocab() const;

  Var encode_token(Graph& g, std::span<const int> subtokens);
  Var encode_path(Graph& g, std::span<const int> symbols, DropoutSource dropout);
  Var encode_context(Graph& g, const ContextIds& ctx, DropoutSource dropout);

  /// Encodes the given contexts (indices into `ex.contexts`, any order; they
  /// are processed in ascending order). Throws kEmptyContexts.
  Encoded encode(Graph& g, const ExampleIds& ex, std::span<const std::size_t> selected, DropoutSource dropout);
  /// min(k, n) contexts spread evenly over the source example's listing order.
  std::vector<std::size_t> inference_selection(const ExampleIds& ex) const;

  /// alpha = softmax(h W_a Z^T) over valid rows; c = alpha^T Z.
  std::pair<Var, Var> attention_step(Graph& g, Var h, Var z, std::span<const std::uint8_t> valid = {});

  /// One decoder step fed with `prev` (a target id).
  StepResult decode_step(Graph& g, const Encoded& enc, int prev, LstmState state);
  /// Output logits for the no_decoder variant.
  StepResult name_logits(Graph& g, const Encoded& enc);

  /// Sum of teacher-forced cross-entropies over target + EOS. `steps` gets
  /// the number of terms.
  Var loss_sum(Graph& g, const ExampleIds& ex, std::span<const std::size_t> selected, DropoutSource dropout,
               std::size_t* steps = nullptr);
  /// loss_sum / steps.
  Var forward_loss(Graph& g, const ExampleIds& ex, std::span<const std::size_t> selected, DropoutSource dropout);

  void store(CheckpointArchive& archive) const;
  static Model restore(const CheckpointArchive& archive);

 private:
  Model() = default;
  void build_parameters(Rng& rng);

  ModelConfig config_;
  Vocabularies vocab_;

  Parameter e_nodes_, e_subtokens_, e_tokens_, e_target_;
  LstmCell path_fwd_, path_bwd_, decoder_;
  Parameter w_in_, w_a_, w_c_, w_s_;
};

void store_config(CheckpointArchive& archive, const ModelConfig& config);
ModelConfig restore_config(const CheckpointArchive& archive);

}  // namespace code2seq
