#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "code2seq/commands.hpp"
#include "code2seq/error.hpp"

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key=value configuration file");
  cmd->add_option("--set", c.overrides, "override one key (key=value); repeatable");
  cmd->add_option("--seed", c.seed, "random seed (falls back to P2SQ_SEED, then 0)");
}

code2seq::RunConfig resolve(const Common& c) {
  code2seq::RunConfig cfg;
  if (const char* env = std::getenv("P2SQ_SEED"); env && *env) cfg.set("seed", env);
  if (!c.config_file.empty()) cfg.load_file(c.config_file);
  for (const auto& o : c.overrides) cfg.apply(o);
  if (!c.seed.empty()) cfg.set("seed", c.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code2seq: learn to name and describe methods from AST paths"};
  app.require_subcommand(1);

  Common common;

  code2seq::PreprocessOptions pre;
  auto* preprocess = app.add_subcommand("preprocess", "extract path contexts and split a corpus");
  preprocess->add_option("source", pre.source, "source directory or file")->required();
  preprocess->add_option("prefix", pre.out_prefix, "output prefix")->required();
  add_common(preprocess, common);

  code2seq::TrainOptions tr;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("prefix", tr.dataset_prefix, "dataset prefix given to preprocess")->required();
  train->add_option("-o,--output", tr.output, "best checkpoint path")->required();
  train->add_option("--resume", tr.resume, "continue from a checkpoint");
  train->add_option("--log", tr.log_file, "training log (default <output>.log)");
  std::string train_ablation;
  train->add_option("--ablation", train_ablation, "variant: full, no_ast_nodes, no_decoder, ...");
  add_common(train, common);

  code2seq::PredictOptions pr;
  std::string format = "auto";
  auto* predict = app.add_subcommand("predict", "predict names for source code or dataset lines");
  predict->add_option("checkpoint", pr.checkpoint, "model checkpoint")->required();
  predict->add_option("input", pr.input, "input file, or - for stdin");
  predict->add_option("--format", format, "auto, minij, ast or c2s");
  predict->add_option("--beam", pr.beam, "beam width (1 = greedy)")->check(CLI::PositiveNumber);
  predict->add_option("--explain", pr.explain, "show the top-N attended contexts per step");
  predict->add_option("--trace", pr.trace, "write attention traces as JSON lines");

  code2seq::EvaluateOptions ev;
  std::string metric;
  auto* evaluate = app.add_subcommand("evaluate", "decode a dataset and score it");
  evaluate->add_option("checkpoint", ev.checkpoint, "model checkpoint");
  evaluate->add_option("dataset", ev.dataset, ".c2s dataset");
  evaluate->add_option("--predictions", ev.predictions, "score an existing prediction dump instead");
  evaluate->add_option("--task", metric, "f1 or bleu");
  evaluate->add_option("--dump", ev.dump, "prediction dump path (default <dataset>.pred)");
  evaluate->add_option("--trace", ev.trace, "attention trace sidecar");
  evaluate->add_option("--report", ev.report, "also write the report here");
  add_common(evaluate, common);

  code2seq::AblateOptions ab;
  auto* ablate = app.add_subcommand("ablate", "train and compare the ablation variants");
  ablate->add_option("prefix", ab.dataset_prefix, "dataset prefix")->required();
  ablate->add_option("dir", ab.dir, "checkpoint directory (<dir>/<variant>.ckpt)")->required();
  ablate->add_flag("--train", ab.train, "train every variant first");
  add_common(ablate, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (preprocess->parsed()) {
      code2seq::cmd_preprocess(pre, resolve(common), std::cout, std::cerr);
    } else if (train->parsed()) {
      auto cfg = resolve(common);
      if (!train_ablation.empty()) cfg.set("ablation", train_ablation);
      code2seq::cmd_train(tr, cfg, std::cout);
    } else if (predict->parsed()) {
      pr.format = code2seq::parse_input_format(format);
      if (code2seq::cmd_predict(pr, std::cin, std::cout, std::cerr) > 0) return 1;
    } else if (evaluate->parsed()) {
      if (!metric.empty()) ev.metric = code2seq::parse_metric(metric);
      if (ev.predictions.empty() && (ev.checkpoint.empty() || ev.dataset.empty())) {
        throw code2seq::Error(code2seq::ErrorCode::kInvalidArgument,
                              "evaluate needs a checkpoint and a dataset, or --predictions");
      }
      code2seq::cmd_evaluate(ev, resolve(common), std::cout);
    } else if (ablate->parsed()) {
      code2seq::cmd_ablate(ab, resolve(common), std::cout);
    }
  } catch (const code2seq::Error& e) {
    std::cerr << "error: " << code2seq::error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
