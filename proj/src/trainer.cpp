#include "code2seq/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "code2seq/error.hpp"
#include "code2seq/evaluator.hpp"
#include "code2seq/optimizer.hpp"
#include "code2seq/paths.hpp"

namespace code2seq {

std::string_view metric_name(Metric m) { return m == Metric::kF1 ? "f1" : "bleu"; }

Metric parse_metric(std::string_view name) {
  if (name == "f1") return Metric::kF1;
  if (name == "bleu") return Metric::kBleu;
  throw Error(ErrorCode::kConfigError, "unknown metric '" + std::string(name) + "' (expected f1 or bleu)");
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw Error(ErrorCode::kConfigError, "lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error(ErrorCode::kConfigError, "lr_decay must lie in (0, 1]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::kConfigError, "momentum must lie in [0, 1)");
  if (batch_size < 1) throw Error(ErrorCode::kConfigError, "batch_size must be >= 1");
  if (patience < 1) throw Error(ErrorCode::kConfigError, "patience must be >= 1");
}

std::string format_log_line(const EpochResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.epoch << '\t' << r.mean_loss << '\t' << r.lr << '\t';
  if (r.has_val) {
    out << r.val_metric;
  } else {
    out << '-';
  }
  out.precision(3);
  out << '\t' << std::fixed << r.seconds;
  return out.str();
}

Trainer::Trainer(Model& model, const TrainConfig& config, std::vector<ExampleIds> train)
    : model_(model), config_(config), train_(std::move(train)) {
  config_.validate();
  if (train_.empty()) throw Error(ErrorCode::kInvalidArgument, "training set is empty");
  for (std::size_t i = 0; i < train_.size(); ++i) {
    if (train_[i].contexts.empty()) {
      throw Error(ErrorCode::kEmptyContexts, "training example " + std::to_string(i) + " has no path contexts");
    }
  }
  state_.rng = Rng(Rng::derive_seed(config_.seed, 0x7472u));
  state_.lr = config_.lr0;
  if (model_.config().ablation == Ablation::kNoRandom) {
    for (std::size_t i = 0; i < train_.size(); ++i) {
      Rng r(Rng::derive_seed(config_.seed ^ 0x6e6f72616e64ULL, i));
      fixed_.push_back(sample_indices(train_[i].contexts.size(), model_.config().k, r));
    }
  }
  selections_.resize(train_.size());
}

double Trainer::lr_at(std::size_t epoch) const {
  return config_.lr0 * std::pow(config_.lr_decay, static_cast<double>(epoch));
}

std::vector<std::size_t> Trainer::select(std::size_t index) {
  if (!fixed_.empty()) return fixed_[index];
  return sample_indices(train_[index].contexts.size(), model_.config().k, state_.rng);
}

EpochResult Trainer::train_epoch() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(state_.rng.below(i))]);
  }

  const auto params = model_.parameters();
  const bool names = model_.config().ablation == Ablation::kNoDecoder;
  auto steps_of = [&](const ExampleIds& ex) {
    return names ? std::size_t{1} : std::min(ex.target.size(), model_.config().max_target_len) + 1;
  };

  double loss_total = 0.0;
  std::size_t step_total = 0;
  for (std::size_t b = 0; b < order.size(); b += config_.batch_size) {
    const std::size_t e = std::min(order.size(), b + config_.batch_size);
    std::size_t batch_steps = 0;
    for (std::size_t i = b; i < e; ++i) batch_steps += steps_of(train_[order[i]]);

    zero_gradients(params);
    double batch_loss = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t idx = order[i];
      selections_[idx] = select(idx);
      Graph g;
      const Var sum = model_.loss_sum(g, train_[idx], selections_[idx], DropoutSource{&state_.rng});
      batch_loss += sum.value()[0];
      g.backward(g.scale(sum, 1.0 / static_cast<double>(batch_steps)));
    }
    if (!std::isfinite(batch_loss)) {
      throw Error(ErrorCode::kNumericDivergence, "loss became " + std::to_string(batch_loss) + " at epoch " +
                                                     std::to_string(state_.epoch + 1) + ", step " +
                                                     std::to_string(state_.global_step + 1));
    }
    clip_gradients(params, config_.clip_norm);
    for (Parameter* p : params) nesterov_update(*p, state_.lr, config_.momentum);
    ++state_.global_step;
    loss_total += batch_loss;
    step_total += batch_steps;
  }

  ++state_.epoch;
  state_.lr = lr_at(state_.epoch);
  EpochResult r;
  r.epoch = state_.epoch;
  r.mean_loss = loss_total / static_cast<double>(step_total);
  r.lr = state_.lr;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

double Trainer::validate(const std::vector<Example>& examples) const {
  const auto lines = predict_dataset(model_, examples);
  if (config_.metric == Metric::kBleu) return dump_bleu(lines).bleu;
  return dump_f1(lines).micro.f1;
}

void store_train_config(CheckpointArchive& a, const TrainConfig& c) {
  a.put_f64("train.lr0", c.lr0);
  a.put_f64("train.lr_decay", c.lr_decay);
  a.put_f64("train.momentum", c.momentum);
  a.put_i64("train.batch_size", static_cast<std::int64_t>(c.batch_size));
  a.put_i64("train.max_epochs", static_cast<std::int64_t>(c.max_epochs));
  a.put_i64("train.patience", static_cast<std::int64_t>(c.patience));
  a.put_i64("train.seed", static_cast<std::int64_t>(c.seed));
  a.put_f64("train.clip_norm", c.clip_norm);
  a.put_string("train.metric", std::string(metric_name(c.metric)));
}

TrainConfig restore_train_config(const CheckpointArchive& a) {
  TrainConfig c;
  c.lr0 = a.get_f64("train.lr0");
  c.lr_decay = a.get_f64("train.lr_decay");
  c.momentum = a.get_f64("train.momentum");
  c.batch_size = static_cast<std::size_t>(a.get_i64("train.batch_size"));
  c.max_epochs = static_cast<std::size_t>(a.get_i64("train.max_epochs"));
  c.patience = static_cast<std::size_t>(a.get_i64("train.patience"));
  c.seed = static_cast<std::uint64_t>(a.get_i64("train.seed"));
  c.clip_norm = a.get_f64("train.clip_norm");
  c.metric = parse_metric(a.get_string("train.metric"));
  c.validate();
  return c;
}

void Trainer::store(CheckpointArchive& a) const {
  model_.store(a);
  for (Parameter* p : model_.parameters()) a.put_tensor("momentum." + p->name, p->momentum);
  store_train_config(a, config_);
  a.put_i64("state.epoch", static_cast<std::int64_t>(state_.epoch));
  a.put_i64("state.global_step", static_cast<std::int64_t>(state_.global_step));
  a.put_f64("state.lr", state_.lr);
  a.put_f64("state.best_score", state_.best_score);
  a.put_i64("state.best_epoch", static_cast<std::int64_t>(state_.best_epoch));
  a.put_i64("state.stale_epochs", static_cast<std::int64_t>(state_.stale_epochs));
  a.put_string("state.rng", state_.rng.serialize());
}

void Trainer::save(const std::filesystem::path& file) const {
  CheckpointArchive a;
  store(a);
  a.save(file);
}

void Trainer::restore_state(const CheckpointArchive& a) {
  for (Parameter* p : model_.parameters()) {
    Tensor m = a.get_tensor("momentum." + p->name);
    if (m.shape() != p->value.shape()) throw Error(ErrorCode::kCorruptFile, "momentum for " + p->name + " has the wrong shape");
    p->momentum = std::move(m);
  }
  state_.epoch = static_cast<std::size_t>(a.get_i64("state.epoch"));
  state_.global_step = static_cast<std::uint64_t>(a.get_i64("state.global_step"));
  state_.lr = a.get_f64("state.lr");
  state_.best_score = a.get_f64("state.best_score");
  state_.best_epoch = static_cast<std::size_t>(a.get_i64("state.best_epoch"));
  state_.stale_epochs = static_cast<std::size_t>(a.get_i64("state.stale_epochs"));
  state_.rng.deserialize(a.get_string("state.rng"));
}

RunSummary run_training(Trainer& trainer, const std::vector<Example>& validation, const RunOptions& options) {
  RunSummary summary;
  TrainState& st = trainer.state();
  while (st.epoch < trainer.config().max_epochs) {
    EpochResult r = trainer.train_epoch();
    double score = static_cast<double>(r.epoch);
    if (!validation.empty()) {
      r.val_metric = trainer.validate(validation);
      r.has_val = true;
      score = r.val_metric;
    }
    if (validation.empty() || score > st.best_score) {
      st.best_score = score;
      st.best_epoch = r.epoch;
      st.stale_epochs = 0;
      if (!options.best_checkpoint.empty()) trainer.save(options.best_checkpoint);
    } else {
      ++st.stale_epochs;
    }
    if (!options.last_checkpoint.empty()) trainer.save(options.last_checkpoint);
    summary.epochs.push_back(r);
    if (options.on_epoch) options.on_epoch(r);
    if (st.stale_epochs >= trainer.config().patience) {
      summary.stopped_early = true;
      break;
    }
  }
  return summary;
}

}  // namespace code2seq
