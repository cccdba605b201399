#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "code2seq/checkpoint.hpp"
#include "code2seq/dataset.hpp"
#include "code2seq/model.hpp"
#include "code2seq/random.hpp"

namespace code2seq {

enum class Metric { kF1, kBleu };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

struct TrainConfig {
  double lr0 = 0.01;
  double lr_decay = 0.95;
  double momentum = 0.95;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables
  Metric metric = Metric::kF1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  std::uint64_t global_step = 0;
  double lr = 0.0;
  double best_score = -1.0;
  std::size_t best_epoch = 0;
  std::size_t stale_epochs = 0;
  Rng rng;
};

struct EpochResult {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double lr = 0.0;        // rate after this epoch's decay
  double val_metric = 0.0;
  bool has_val = false;
  double seconds = 0.0;
};

/// epoch, mean loss, lr, validation metric, seconds; tab-separated.
std::string format_log_line(const EpochResult& r);

class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config, std::vector<ExampleIds> train);

  /// One pass over the shuffled training set with a Nesterov step per batch.
  /// Throws kNumericDivergence if a batch loss is not finite.
  EpochResult train_epoch();

  /// Greedy-decodes `examples` and returns the task metric (F1 in [0, 1] or
  /// BLEU in [0, 100]). Parameters are not touched.
  double validate(const std::vector<Example>& examples) const;

  /// Learning rate for a given number of completed epochs.
  double lr_at(std::size_t epoch) const;

  const TrainConfig& config() const noexcept { return config_; }
  const TrainState& state() const noexcept { return state_; }
  TrainState& state() noexcept { return state_; }
  Model& model() noexcept { return model_; }

  /// Context indices used for each training example in the last epoch.
  const std::vector<std::vector<std::size_t>>& last_selections() const noexcept { return selections_; }

  /// Model, momentum buffers, configuration and state.
  void store(CheckpointArchive& archive) const;
  void save(const std::filesystem::path& file) const;
  /// Loads momentum buffers and state saved by `store` into this trainer.
  void restore_state(const CheckpointArchive& archive);

 private:
  std::vector<std::size_t> select(std::size_t index);

  Model& model_;
  TrainConfig config_;
  std::vector<ExampleIds> train_;
  TrainState state_;
  std::vector<std::vector<std::size_t>> fixed_;  // no_random selections
  std::vector<std::vector<std::size_t>> selections_;
};

void store_train_config(CheckpointArchive& archive, const TrainConfig& config);
TrainConfig restore_train_config(const CheckpointArchive& archive);

struct RunOptions {
  std::filesystem::path best_checkpoint;  // written on every improvement; empty to skip
  std::filesystem::path last_checkpoint;  // written after every epoch; empty to skip
  std::function<void(const EpochResult&)> on_epoch;
};

struct RunSummary {
  std::vector<EpochResult> epochs;
  bool stopped_early = false;
};

/// Trains until max_epochs or until the validation metric has not improved
/// for `patience` epochs. Without validation data every epoch counts as an
/// improvement.
RunSummary run_training(Trainer& trainer, const std::vector<Example>& validation, const RunOptions& options);

}  // namespace code2seq
