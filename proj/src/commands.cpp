#include "code2seq/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "code2seq/decoder.hpp"
#include "code2seq/error.hpp"
#include "code2seq/minij.hpp"

namespace code2seq {

namespace {

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + file.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

bool is_minij(const std::filesystem::path& p) {
  const auto e = lower_ext(p);
  return e == ".mnj" || e == ".minij" || e == ".java";
}

bool is_ast(const std::filesystem::path& p) { return lower_ext(p) == ".ast"; }

std::vector<std::filesystem::path> discover(const std::filesystem::path& source) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_regular_file(source)) {
    files.push_back(source);
    return files;
  }
  if (!std::filesystem::is_directory(source)) {
    throw Error(ErrorCode::kIoError, "source '" + source.string() + "' is neither a file nor a directory");
  }
  for (const auto& entry : std::filesystem::recursive_directory_iterator(source)) {
    if (entry.is_regular_file() && (is_minij(entry.path()) || is_ast(entry.path()))) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::vector<std::string> lines;
  std::istringstream in(read_text(file));
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string describe(const Error& e) { return std::string(error_code_name(e.code())) + ": " + e.what(); }

/// One tree plus its target, before path extraction.
struct Method {
  Ast ast;
  std::string target;
};

/// Summarization masks and predicts the name; captioning keeps the tree whole
/// and uses the caption line.
Method prepare(const Ast& tree, Task task, const std::vector<std::string>* captions, std::size_t index) {
  if (task == Task::kCaptioning) {
    if (!captions || index >= captions->size()) {
      throw Error(ErrorCode::kInvalidArgument, "no caption line for method " + std::to_string(index + 1));
    }
    return {tree, (*captions)[index]};
  }
  auto [masked, name] = minij::extract_target_name(tree);
  return {std::move(masked), std::move(name)};
}

std::vector<Example> extract_from_text(const std::string& text, const std::string& origin, bool ast_format,
                                       const RunConfig& cfg, const std::vector<std::string>* captions,
                                       std::ostream& log, std::size_t* failures) {
  const ExtractionConfig ecfg = cfg.extraction();
  const Task task = cfg.task();
  SymbolRegistry registry;
  std::vector<Example> out;
  auto handle = [&](const Ast& tree, std::size_t index) {
    Method m = prepare(tree, task, captions, index);
    out.push_back(build_example(m.ast, m.target, ecfg, &registry));
  };
  if (ast_format) {
    const auto trees = parse_ast_forest(text);
    for (std::size_t i = 0; i < trees.size(); ++i) {
      try {
        handle(trees[i], i);
      } catch (const Error& e) {
        log << "skip " << origin << " tree " << i + 1 << ": " << describe(e) << '\n';
        if (failures) ++*failures;
      }
    }
    return out;
  }
  const auto units = minij::split_methods({text, origin});
  for (std::size_t i = 0; i < units.size(); ++i) {
    try {
      handle(minij::parse_method(units[i]), i);
    } catch (const Error& e) {
      log << "skip " << origin << " method " << i + 1 << ": " << describe(e) << '\n';
      if (failures) ++*failures;
    }
  }
  return out;
}

template <typename T>
double average(const std::vector<Example>& xs, T f) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& x : xs) s += static_cast<double>(f(x));
  return s / static_cast<double>(xs.size());
}

std::filesystem::path split_path(const std::string& prefix, const char* split) {
  return prefix + "." + split + ".c2s";
}

std::vector<Example> read_optional(const std::filesystem::path& file) {
  return std::filesystem::exists(file) ? read_dataset(file) : std::vector<Example>{};
}

Vocabularies vocab_for(const std::string& prefix, const std::vector<Example>& train) {
  const std::filesystem::path file = prefix + ".vocab";
  return std::filesystem::exists(file) ? Vocabularies::load(file) : Vocabularies::build(train);
}

std::vector<ExampleIds> to_ids(const std::vector<Example>& xs, const Vocabularies& vocab) {
  std::vector<ExampleIds> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(encode_ids(x, vocab));
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + file.string() + "'");
  return out;
}

/// Trains one model from already-loaded splits.
RunSummary train_on(const RunConfig& cfg, const ModelConfig& mcfg, const std::vector<Example>& train,
                    const std::vector<Example>& val, const Vocabularies& vocab, const std::filesystem::path& output,
                    const std::filesystem::path& resume, std::ostream& log) {
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "training split is empty");
  std::optional<Model> model;
  TrainConfig tcfg = cfg.train();
  std::optional<CheckpointArchive> archive;
  if (!resume.empty()) {
    if (!std::filesystem::exists(resume)) {
      throw Error(ErrorCode::kMissingCheckpoint, "resume checkpoint '" + resume.string() + "' does not exist");
    }
    archive = CheckpointArchive::load(resume);
    model.emplace(Model::restore(*archive));
    const std::size_t epochs = tcfg.max_epochs;
    tcfg = restore_train_config(*archive);
    if (cfg.is_set("epochs")) tcfg.max_epochs = epochs;
  } else {
    Rng init(Rng::derive_seed(tcfg.seed, 1));
    model.emplace(mcfg, vocab, init);
  }
  Trainer trainer(*model, tcfg, to_ids(train, model->vocab()));
  if (archive) trainer.restore_state(*archive);

  RunOptions ro;
  ro.best_checkpoint = output;
  ro.last_checkpoint = output.string() + ".last";
  ro.on_epoch = [&](const EpochResult& r) { log << format_log_line(r) << '\n' << std::flush; };
  return run_training(trainer, val, ro);
}

}  // namespace

std::vector<Example> extract_examples(const std::filesystem::path& file, const RunConfig& cfg, std::ostream& log,
                                      std::size_t* failures) {
  std::vector<std::string> captions;
  const std::vector<std::string>* caption_ptr = nullptr;
  if (cfg.task() == Task::kCaptioning) {
    auto side = file;
    side.replace_extension(".caption");
    if (!std::filesystem::exists(side)) {
      throw Error(ErrorCode::kIoError, "captioning needs '" + side.string() + "'");
    }
    captions = read_lines(side);
    caption_ptr = &captions;
  }
  return extract_from_text(read_text(file), file.string(), is_ast(file), cfg, caption_ptr, log, failures);
}

PreprocessStats cmd_preprocess(const PreprocessOptions& opts, const RunConfig& cfg, std::ostream& out,
                               std::ostream& log) {
  PreprocessStats st;
  std::vector<Example> all;
  for (const auto& file : discover(opts.source)) {
    ++st.files;
    std::size_t failures = 0;
    try {
      auto xs = extract_examples(file, cfg, log, &failures);
      if (xs.empty()) ++st.skipped_files;
      std::move(xs.begin(), xs.end(), std::back_inserter(all));
    } catch (const Error& e) {
      log << "skip " << file.string() << ": " << describe(e) << '\n';
      ++st.skipped_files;
    }
    st.skipped_methods += failures;
  }
  if (all.empty()) {
    throw Error(ErrorCode::kNoParsableFiles, "no parsable methods under '" + opts.source.string() + "'");
  }

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::derive_seed(cfg.seed(), 0x73706c6974ULL));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t n = all.size();
  const auto n_test = static_cast<std::size_t>(static_cast<double>(n) * cfg.test_fraction());
  const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * cfg.val_fraction());
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                                   order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  auto gather = [&](std::vector<std::size_t>& idx) {
    std::sort(idx.begin(), idx.end());
    std::vector<Example> xs;
    for (std::size_t i : idx) xs.push_back(all[i]);
    return xs;
  };
  const auto train = gather(train_idx);
  const auto val = gather(val_idx);
  const auto test = gather(test_idx);
  if (const auto parent = split_path(opts.out_prefix, "train").parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  write_dataset(split_path(opts.out_prefix, "train"), train);
  write_dataset(split_path(opts.out_prefix, "val"), val);
  write_dataset(split_path(opts.out_prefix, "test"), test);
  Vocabularies::build(train).save(opts.out_prefix + ".vocab");

  st.examples = n;
  st.train = train.size();
  st.val = val.size();
  st.test = test.size();
  st.avg_paths = average(all, [](const Example& x) { return x.contexts.size(); });
  st.avg_target_len = average(all, [](const Example& x) { return x.target.size(); });
  out << "files\t" << st.files << '\n'
      << "skipped_files\t" << st.skipped_files << '\n'
      << "skipped_methods\t" << st.skipped_methods << '\n'
      << "examples\t" << st.examples << '\n'
      << "train\t" << st.train << '\n'
      << "val\t" << st.val << '\n'
      << "test\t" << st.test << '\n'
      << "avg_paths\t" << st.avg_paths << '\n'
      << "avg_target_len\t" << st.avg_target_len << '\n';
  return st;
}

RunSummary cmd_train(const TrainOptions& opts, const RunConfig& cfg, std::ostream& out) {
  const auto train = read_dataset(split_path(opts.dataset_prefix, "train"));
  const auto val = read_optional(split_path(opts.dataset_prefix, "val"));
  const Vocabularies vocab = vocab_for(opts.dataset_prefix, train);
  const auto log_path = opts.log_file.empty() ? std::filesystem::path(opts.output.string() + ".log") : opts.log_file;
  std::ofstream log_file = open_out(log_path);

  std::ostringstream header;
  for (std::istringstream lines(cfg.render()); !lines.eof();) {
    std::string line;
    std::getline(lines, line);
    if (!line.empty()) header << "# " << line << '\n';
  }
  header << "# epoch\tmean_loss\tlr\tval_" << metric_name(cfg.train().metric) << "\tseconds\n";
  out << header.str();
  log_file << header.str();

  struct Tee : std::streambuf {
    std::ostream& a;
    std::ostream& b;
    Tee(std::ostream& x, std::ostream& y) : a(x), b(y) {}
    int overflow(int c) override {
      if (c != EOF) {
        a.put(static_cast<char>(c));
        b.put(static_cast<char>(c));
      }
      return c;
    }
    int sync() override {
      a.flush();
      b.flush();
      return 0;
    }
  } tee(out, log_file);
  std::ostream both(&tee);
  return train_on(cfg, cfg.model(), train, val, vocab, opts.output, opts.resume, both);
}

InputFormat parse_input_format(std::string_view name) {
  if (name == "auto") return InputFormat::kAuto;
  if (name == "minij") return InputFormat::kMiniJ;
  if (name == "ast") return InputFormat::kAst;
  if (name == "c2s") return InputFormat::kC2s;
  throw Error(ErrorCode::kConfigError, "unknown input format '" + std::string(name) + "'");
}

std::size_t cmd_predict(const PredictOptions& opts, std::istream& in, std::ostream& out, std::ostream& err) {
  if (!std::filesystem::exists(opts.checkpoint)) {
    throw Error(ErrorCode::kMissingCheckpoint, "checkpoint '" + opts.checkpoint.string() + "' does not exist");
  }
  Model model = Model::restore(CheckpointArchive::load(opts.checkpoint));
  const bool from_stdin = opts.input == "-";
  const std::string text =
      from_stdin ? std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()) : read_text(opts.input);
  const std::string origin = from_stdin ? "<stdin>" : opts.input;

  InputFormat fmt = opts.format;
  if (fmt == InputFormat::kAuto) {
    const std::filesystem::path p(opts.input);
    if (!from_stdin && lower_ext(p) == ".c2s") {
      fmt = InputFormat::kC2s;
    } else if (!from_stdin && is_ast(p)) {
      fmt = InputFormat::kAst;
    } else {
      const auto first = text.find_first_not_of(" \t\r\n");
      fmt = first != std::string::npos && text[first] == '(' ? InputFormat::kAst : InputFormat::kMiniJ;
    }
  }

  std::size_t failures = 0;
  std::vector<Example> examples;
  if (fmt == InputFormat::kC2s) {
    std::istringstream lines(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        examples.push_back(parse_example_line(line));
      } catch (const Error& e) {
        err << "error: " << origin << ":" << n << ": " << describe(e) << '\n';
        ++failures;
      }
    }
  } else {
    const RunConfig summarize;
    std::ostringstream skipped;
    std::size_t extract_failures = 0;
    examples = extract_from_text(text, origin, fmt == InputFormat::kAst, summarize, nullptr, skipped,
                                 &extract_failures);
    failures += extract_failures;
    std::istringstream lines(skipped.str());
    for (std::string line; std::getline(lines, line);) err << "error: " << line << '\n';
  }

  std::ofstream trace;
  if (!opts.trace.empty()) trace = open_out(opts.trace);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      const ExampleIds ids = encode_ids(examples[i], model.vocab());
      std::vector<Prediction> preds;
      if (opts.beam > 1) {
        preds = beam_decode(model, ids, opts.beam);
      } else {
        preds.push_back(greedy_decode(model, ids));
      }
      for (const auto& p : preds) out << join(p.subtokens) << '\t' << p.score << '\n';
      const auto steps = explain(preds.front(), examples[i], opts.explain > 0 ? opts.explain : 1);
      if (opts.explain > 0) out << render_explanation(steps);
      if (trace) trace << explanation_json(i, steps) << '\n';
    } catch (const Error& e) {
      err << "error: " << origin << " example " << i + 1 << ": " << describe(e) << '\n';
      ++failures;
    }
  }
  return failures;
}

std::string cmd_evaluate(const EvaluateOptions& opts, const RunConfig& cfg, std::ostream& out) {
  const Metric metric = opts.metric.value_or(cfg.train().metric);
  std::vector<DumpLine> lines;
  if (!opts.predictions.empty()) {
    lines = read_prediction_dump(opts.predictions);
  } else {
    if (!std::filesystem::exists(opts.checkpoint)) {
      throw Error(ErrorCode::kMissingCheckpoint, "checkpoint '" + opts.checkpoint.string() + "' does not exist");
    }
    Model model = Model::restore(CheckpointArchive::load(opts.checkpoint));
    const auto examples = read_dataset(opts.dataset);
    std::ofstream trace;
    if (!opts.trace.empty()) trace = open_out(opts.trace);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const Prediction p = greedy_decode(model, encode_ids(examples[i], model.vocab()));
      lines.push_back({examples[i].target, p.subtokens, p.score});
      if (trace) trace << explanation_json(i, explain(p, examples[i], 5)) << '\n';
    }
    const auto dump_path = opts.dump.empty() ? std::filesystem::path(opts.dataset.string() + ".pred") : opts.dump;
    std::ofstream dump = open_out(dump_path);
    for (const auto& l : lines) dump << format_dump_line(l) << '\n';
  }
  if (lines.empty()) throw Error(ErrorCode::kEmptyCandidateSet, "nothing to evaluate");
  const std::string report = metric == Metric::kBleu ? format_bleu_report(dump_bleu(lines)) : format_f1_report(dump_f1(lines));
  out << report;
  if (!opts.report.empty()) open_out(opts.report) << report;
  return report;
}

std::vector<AblationRow> cmd_ablate(const AblateOptions& opts, const RunConfig& cfg, std::ostream& out) {
  const auto train = read_dataset(split_path(opts.dataset_prefix, "train"));
  const auto val = read_optional(split_path(opts.dataset_prefix, "val"));
  auto test = read_optional(split_path(opts.dataset_prefix, "test"));
  if (test.empty()) test = val.empty() ? train : val;
  std::filesystem::create_directories(opts.dir);
  if (opts.train) {
    const Vocabularies vocab = vocab_for(opts.dataset_prefix, train);
    for (Ablation a : kAllVariants) {
      ModelConfig mcfg = cfg.model();
      mcfg.ablation = a;
      const std::string name(ablation_name(a));
      std::ofstream log = open_out(opts.dir / (name + ".log"));
      out << "training " << name << '\n' << std::flush;
      train_on(cfg, mcfg, train, val, vocab, opts.dir / (name + ".ckpt"), {}, log);
    }
  }
  const auto rows = ablation_report(opts.dir, test);
  const std::string table = format_ablation_table(rows);
  out << table;
  open_out(opts.dir / "ablation.tsv") << table;
  return rows;
}

}  // namespace code2seq
