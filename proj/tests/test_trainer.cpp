#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"

#include "code2seq/error.hpp"
#include "code2seq/trainer.hpp"
#include "synthetic.hpp"

using namespace code2seq;

namespace {

ModelConfig small_model(Ablation a = Ablation::kNone) {
  ModelConfig c;
  c.d_nodes = c.d_tokens = c.d_hidden = c.d_target = c.d_path = 8;
  c.d_decoder = 8;
  c.k = 6;
  c.ablation = a;
  return c;
}

TrainConfig small_train(std::uint64_t seed = 7) {
  TrainConfig t;
  t.batch_size = 4;
  t.max_epochs = 4;
  t.seed = seed;
  return t;
}

struct Setup {
  std::vector<Example> corpus = testing::overfit_corpus(10, 5);
  Vocabularies vocab = Vocabularies::build(corpus);

  std::vector<ExampleIds> ids() const {
    std::vector<ExampleIds> out;
    for (const auto& ex : corpus) out.push_back(encode_ids(ex, vocab));
    return out;
  }
  Model model(Ablation a = Ablation::kNone, std::uint64_t seed = 1) const {
    Rng rng(seed);
    return Model(small_model(a), vocab, rng);
  }
};

std::vector<std::uint8_t> snapshot(const Trainer& t) {
  CheckpointArchive a;
  t.store(a);
  return a.encode();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("c2s_trainer_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  const Setup s;
  Model m = s.model();
  Trainer t(m, small_train(), s.ids());
  CHECK(t.state().lr == 0.01);
  const EpochResult e1 = t.train_epoch();
  const EpochResult e2 = t.train_epoch();
  CHECK(e1.lr == doctest::Approx(0.0095).epsilon(1e-14));
  CHECK(std::fabs(e2.lr - 0.009025) < 1e-15);
  CHECK(t.state().lr == e2.lr);
  for (std::size_t e = 0; e <= 200; ++e) CHECK(std::fabs(t.lr_at(e) - 0.01 * std::pow(0.95, e)) < 1e-12);
}

TEST_CASE("config validation") {
  TrainConfig bad = small_train();
  bad.lr0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_train();
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = small_train();
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_metric("bleu") == Metric::kBleu);
  CHECK_THROWS_AS(parse_metric("accuracy"), Error);

  const Setup s;
  Model m = s.model();
  CHECK_THROWS_AS(Trainer(m, small_train(), {}), Error);
}

TEST_CASE("training is deterministic given the seed") {
  const Setup s;
  Model a = s.model(), b = s.model();
  Trainer ta(a, small_train(), s.ids()), tb(b, small_train(), s.ids());
  for (int e = 0; e < 2; ++e) {
    const EpochResult ra = ta.train_epoch(), rb = tb.train_epoch();
    CHECK(ra.mean_loss == rb.mean_loss);
    CHECK(ta.last_selections() == tb.last_selections());
  }
  CHECK(snapshot(ta) == snapshot(tb));

  Model c = s.model();
  Trainer tc(c, small_train(8), s.ids());
  tc.train_epoch();
  tc.train_epoch();
  CHECK(snapshot(tc) != snapshot(ta));
}

TEST_CASE("loss falls on a small corpus") {
  const Setup s;
  Model m = s.model();
  TrainConfig cfg = small_train();
  cfg.lr0 = 0.1;
  Trainer t(m, cfg, s.ids());
  const double first = t.train_epoch().mean_loss;
  double last = first;
  for (int e = 0; e < 15; ++e) last = t.train_epoch().mean_loss;
  CHECK(std::isfinite(last));
  CHECK(last < 0.7 * first);
  for (Parameter* p : m.parameters()) CHECK(p->value.all_finite());
}

TEST_CASE("resumed training reproduces the uninterrupted run") {
  const Setup s;
  Model full = s.model();
  Trainer straight(full, small_train(), s.ids());
  std::vector<double> expected;
  for (int e = 0; e < 4; ++e) expected.push_back(straight.train_epoch().mean_loss);

  Model first = s.model();
  Trainer before(first, small_train(), s.ids());
  std::vector<double> got;
  for (int e = 0; e < 2; ++e) got.push_back(before.train_epoch().mean_loss);
  const auto dir = scratch("resume");
  before.save(dir / "mid.ckpt");

  const CheckpointArchive archive = CheckpointArchive::load(dir / "mid.ckpt");
  Model second = Model::restore(archive);
  Trainer after(second, restore_train_config(archive), s.ids());
  after.restore_state(archive);
  CHECK(after.state().epoch == 2);
  for (int e = 0; e < 2; ++e) got.push_back(after.train_epoch().mean_loss);

  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);
  CHECK(snapshot(after) == snapshot(straight));
  std::filesystem::remove_all(dir);
}

TEST_CASE("truncated checkpoints are rejected") {
  const Setup s;
  Model m = s.model();
  Trainer t(m, small_train(), s.ids());
  const auto dir = scratch("trunc");
  t.save(dir / "t.ckpt");
  const auto size = std::filesystem::file_size(dir / "t.ckpt");
  std::filesystem::resize_file(dir / "t.ckpt", size / 2);
  try {
    CheckpointArchive::load(dir / "t.ckpt");
    FAIL("loaded a truncated checkpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptFile);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("k-sampling and the no_random variant") {
  const Setup s;
  SUBCASE("fresh samples every epoch") {
    Model m = s.model();
    Trainer t(m, small_train(), s.ids());
    t.train_epoch();
    const auto first = t.last_selections();
    t.train_epoch();
    const auto second = t.last_selections();
    std::size_t changed = 0;
    for (std::size_t i = 0; i < first.size(); ++i) {
      const std::size_t n = s.corpus[i].contexts.size();
      CHECK(first[i].size() == std::min<std::size_t>(6, n));
      for (std::size_t j : first[i]) CHECK(j < n);
      changed += first[i] != second[i];
    }
    CHECK(changed > 0);
  }
  SUBCASE("identical samples every epoch") {
    Model m = s.model(Ablation::kNoRandom);
    Trainer t(m, small_train(), s.ids());
    t.train_epoch();
    const auto first = t.last_selections();
    for (int e = 0; e < 3; ++e) {
      t.train_epoch();
      CHECK(t.last_selections() == first);
    }
  }
}

TEST_CASE("every variant trains") {
  const Setup s;
  for (Ablation a : kAllVariants) {
    CAPTURE(ablation_name(a));
    Model m = s.model(a);
    Trainer t(m, small_train(), s.ids());
    const EpochResult r = t.train_epoch();
    CHECK(std::isfinite(r.mean_loss));
    CHECK(r.mean_loss > 0.0);
    const double f1 = t.validate(s.corpus);
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
  }
}

TEST_CASE("divergence is reported") {
  const Setup s;
  Model m = s.model();
  m.find("W_in")->value.fill(std::numeric_limits<double>::quiet_NaN());
  Trainer t(m, small_train(), s.ids());
  try {
    t.train_epoch();
    FAIL("trained through NaN");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumericDivergence);
  }
}

TEST_CASE("run_training") {
  const Setup s;
  const auto dir = scratch("run");
  SUBCASE("without validation every epoch is kept") {
    Model m = s.model();
    Trainer t(m, small_train(), s.ids());
    RunOptions opts;
    opts.best_checkpoint = dir / "best.ckpt";
    opts.last_checkpoint = dir / "last.ckpt";
    std::size_t calls = 0;
    opts.on_epoch = [&](const EpochResult&) { ++calls; };
    const RunSummary r = run_training(t, {}, opts);
    CHECK(r.epochs.size() == 4);
    CHECK(calls == 4);
    CHECK_FALSE(r.stopped_early);
    CHECK(t.state().best_epoch == 4);
    CHECK(std::filesystem::exists(dir / "best.ckpt"));
    CHECK(CheckpointArchive::load(dir / "last.ckpt").get_i64("state.epoch") == 4);
  }
  SUBCASE("a flat validation metric stops early") {
    Model m = s.model();
    TrainConfig cfg = small_train();
    cfg.lr0 = 1e-300;
    cfg.max_epochs = 10;
    cfg.patience = 2;
    Trainer t(m, cfg, s.ids());
    const RunSummary r = run_training(t, s.corpus, {});
    CHECK(r.stopped_early);
    CHECK(r.epochs.size() == 3);
    CHECK(t.state().best_epoch == 1);
    for (const auto& e : r.epochs) CHECK(e.has_val);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("log line") {
  EpochResult r;
  r.epoch = 3;
  r.mean_loss = 0.5;
  r.lr = 0.01 * 0.95 * 0.95;
  r.seconds = 1.25;
  const std::string line = format_log_line(r);
  CHECK(line.rfind("3\t0.5\t", 0) == 0);
  CHECK(line.substr(line.size() - 8) == "\t-\t1.250");
  // The logged rate reads back exactly.
  CHECK(std::stod(line.substr(6, line.find('\t', 6) - 6)) == r.lr);
  r.has_val = true;
  r.val_metric = 0.75;
  CHECK(format_log_line(r).find("\t0.75\t1.250") != std::string::npos);
}
