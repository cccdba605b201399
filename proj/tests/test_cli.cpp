#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"

#include "code2seq/checkpoint.hpp"
#include "code2seq/config.hpp"
#include "code2seq/error.hpp"
#include "code2seq/evaluator.hpp"
#include "code2seq/vocab.hpp"

using namespace code2seq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

class Workspace {
 public:
  explicit Workspace(const std::string& name) : dir_(fs::temp_directory_path() / ("c2s_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path operator/(const std::string& rel) const { return dir_ / rel; }

  void write(const std::string& rel, const std::string& text) const {
    fs::create_directories((dir_ / rel).parent_path());
    std::ofstream(dir_ / rel, std::ios::binary) << text;
  }

  Run run(const std::string& args, const std::string& env = "") const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = env + " \"" CODE2SEQ_BIN "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string q(const std::string& rel) const { return "\"" + (dir_ / rel).string() + "\""; }

 private:
  fs::path dir_;
};

const char* const kToyMethods = R"(int countItems(int[] items) {
  int total = 0;
  for (int i = 0; i < items.length; i++) { total++; }
  return total;
}

void setName(String name) {
  this_name = name;
}

boolean isEmpty(int size) {
  return size == 0;
}
)";

// Each method uses words of its own, so a subtoken's split is unambiguous.
std::string distinct_methods(std::size_t n) {
  static const char* words[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
                                "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa"};
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string w = words[i];
    out += "int get" + std::string(1, static_cast<char>(std::toupper(w[0]))) + w.substr(1) + "(int " + w +
           "Count) { return " + w + "Count + 1; }\n";
  }
  return out;
}

const std::string kTiny =
    "--set d_nodes=8 --set d_tokens=8 --set d_hidden=8 --set d_target=8 --set d_path=8 --set d_decoder=8 "
    "--set k=8 --set batch_size=2 --set epochs=2 --set val_fraction=0 --set test_fraction=0";

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("run configuration") {
  RunConfig cfg;
  try {
    cfg.set("learning_rate", "0.1");
    FAIL("accepted an unknown key");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigError);
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg.set("k", "many"), Error);
  CHECK_THROWS_AS(cfg.apply("k"), Error);
  cfg.apply("k=12");
  CHECK(cfg.model().k == 12);
  CHECK(cfg.is_set("k"));
  CHECK(cfg.render().find("k=12\n") != std::string::npos);
  cfg.set("task", "captioning");
  CHECK(cfg.task() == Task::kCaptioning);

  Workspace ws("config");
  ws.write("run.cfg", "# comment\n\nlr=0.05\nepochs = 3\n");
  RunConfig from_file;
  from_file.load_file(ws / "run.cfg");
  CHECK(from_file.train().lr0 == 0.05);
  CHECK(from_file.train().max_epochs == 3);
  ws.write("bad.cfg", "lr=0.05\nlearning_rate=1\n");
  CHECK_THROWS_AS(RunConfig().load_file(ws / "bad.cfg"), Error);
}

TEST_CASE("preprocess") {
  Workspace ws("preprocess");
  ws.write("src/toy.mnj", kToyMethods);
  const Run r = ws.run("preprocess " + ws.q("src") + " " + ws.q("out/a") + " --set val_fraction=0 --set test_fraction=0");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("examples\t3\n") != std::string::npos);
  CHECK(r.out.find("avg_paths\t") != std::string::npos);
  const auto train = lines_of(slurp(ws / "out/a.train.c2s"));
  REQUIRE(train.size() == 3);
  std::set<std::string> names;
  for (const auto& l : train) names.insert(l.substr(0, l.find(' ')));
  CHECK(names == std::set<std::string>{"count|items", "set|name", "is|empty"});
  CHECK(slurp(ws / "out/a.val.c2s").empty());

  SUBCASE("reruns are byte-identical") {
    ws.write("src/more.mnj", distinct_methods(12));
    REQUIRE(ws.run("preprocess " + ws.q("src") + " " + ws.q("out/b") + " --seed 4").status == 0);
    REQUIRE(ws.run("preprocess " + ws.q("src") + " " + ws.q("out/c"), "P2SQ_SEED=4").status == 0);
    for (const char* ext : {".train.c2s", ".val.c2s", ".test.c2s", ".vocab"}) {
      CAPTURE(ext);
      CHECK(slurp(ws / (std::string("out/b") + ext)) == slurp(ws / (std::string("out/c") + ext)));
    }
    REQUIRE(ws.run("preprocess " + ws.q("src") + " " + ws.q("out/d") + " --seed 5").status == 0);
    CHECK(slurp(ws / "out/b.test.c2s") != slurp(ws / "out/d.test.c2s"));
  }

  SUBCASE("vocabulary comes from the training split") {
    ws.write("src/more.mnj", distinct_methods(16));
    REQUIRE(ws.run("preprocess " + ws.q("src") + " " + ws.q("out/v") + " --seed 1 --set val_fraction=0.2 --set test_fraction=0.2").status == 0);
    const Vocabularies vocab = Vocabularies::load(ws / "out/v.vocab");
    std::set<std::string> train_words;
    for (const auto& ex : read_dataset(ws / "out/v.train.c2s")) {
      for (const auto& c : ex.contexts) {
        train_words.insert(c.left.begin(), c.left.end());
        train_words.insert(c.right.begin(), c.right.end());
      }
    }
    std::size_t held_out_only = 0;
    for (const char* split : {"out/v.val.c2s", "out/v.test.c2s"}) {
      for (const auto& ex : read_dataset(ws / split)) {
        for (const auto& c : ex.contexts) {
          for (const auto& w : c.left) {
            if (!train_words.count(w)) {
              ++held_out_only;
              CHECK_FALSE(vocab.subtokens.contains(w));
            }
          }
        }
      }
    }
    CHECK(held_out_only > 0);
  }

  SUBCASE("files that do not parse are skipped") {
    ws.write("src/broken.mnj", "int f( {");
    const Run again = ws.run("preprocess " + ws.q("src") + " " + ws.q("out/s") + " --set val_fraction=0 --set test_fraction=0");
    CHECK(again.status == 0);
    CHECK(again.out.find("examples\t3\n") != std::string::npos);
    CHECK(again.err.find("broken.mnj") != std::string::npos);
  }

  SUBCASE("nothing parsable") {
    Workspace empty("preprocess_empty");
    empty.write("src/broken.mnj", "int f( {");
    const Run bad = empty.run("preprocess " + empty.q("src") + " " + empty.q("out/x"));
    CHECK(bad.status != 0);
    // Skip notices come first; the reason is the final line.
    CHECK(lines_of(bad.err).back().rfind("error: no-parsable-files: ", 0) == 0);
  }
}

TEST_CASE("train, predict and evaluate") {
  Workspace ws("pipeline");
  ws.write("src/toy.mnj", kToyMethods);
  REQUIRE(ws.run("preprocess " + ws.q("src") + " " + ws.q("data/toy") + " " + kTiny).status == 0);

  SUBCASE("missing dataset names the path") {
    const Run r = ws.run("train " + ws.q("data/nothing") + " -o " + ws.q("m.ckpt") + " " + kTiny);
    CHECK(r.status != 0);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(r.err.find("nothing.train.c2s") != std::string::npos);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }

  SUBCASE("unknown key is an error") {
    const Run r = ws.run("train " + ws.q("data/toy") + " -o " + ws.q("m.ckpt") + " --set learning_rate=1");
    CHECK(r.status != 0);
    CHECK(r.err.rfind("error: config-error: ", 0) == 0);
  }

  const Run trained =
      ws.run("train " + ws.q("data/toy") + " -o " + ws.q("m.ckpt") + " --ablation no_attention " + kTiny);
  REQUIRE(trained.status == 0);
  CHECK(trained.out.find("# ablation=no_attention") != std::string::npos);
  CHECK(CheckpointArchive::load(ws / "m.ckpt").get_string("config.ablation") == "no_attention");
  CHECK(lines_of(slurp(ws / "m.ckpt.log")).size() >= 3);

  REQUIRE(ws.run("train " + ws.q("data/toy") + " -o " + ws.q("full.ckpt") + " " + kTiny).status == 0);

  SUBCASE("predict") {
    ws.write("query.mnj", "int countThings(int[] things) { return things.length; }\n");
    const Run greedy = ws.run("predict " + ws.q("full.ckpt") + " " + ws.q("query.mnj"));
    const Run beam1 = ws.run("predict " + ws.q("full.ckpt") + " " + ws.q("query.mnj") + " --beam 1");
    REQUIRE(greedy.status == 0);
    CHECK(greedy.out == beam1.out);
    CHECK(lines_of(greedy.out).size() == 1);

    const Run beam3 = ws.run("predict " + ws.q("full.ckpt") + " " + ws.q("query.mnj") + " --beam 3");
    CHECK(beam3.status == 0);
    CHECK(lines_of(beam3.out).size() <= 3);

    const Run stdin_run = ws.run("predict " + ws.q("full.ckpt") + " - < " + ws.q("query.mnj"));
    CHECK(stdin_run.out == greedy.out);

    const Run explained = ws.run("predict " + ws.q("full.ckpt") + " " + ws.q("query.mnj") + " --explain 1 --trace " +
                                 ws.q("trace.jsonl"));
    REQUIRE(explained.status == 0);
    const auto lines = lines_of(explained.out);
    REQUIRE_FALSE(lines.empty());
    const std::string predicted = lines[0].substr(0, lines[0].find('\t'));
    const std::size_t subtokens = predicted.empty() ? 0 : std::count(predicted.begin(), predicted.end(), ' ') + 1;
    std::size_t steps = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].rfind("step ", 0) == 0) {
        ++steps;
        REQUIRE(i + 1 < lines.size() + 1);
        std::size_t contexts = 0;
        for (std::size_t j = i + 1; j < lines.size() && lines[j].rfind("  ", 0) == 0; ++j) ++contexts;
        CHECK(contexts == 1);
      }
    }
    CHECK(steps == subtokens);
    CHECK(lines_of(slurp(ws / "trace.jsonl")).size() == 1);

    // A broken method is reported without losing the good one.
    ws.write("mixed.mnj", "int f( {\n}\n\nint countThings(int[] things) { return things.length; }\n");
    const Run mixed = ws.run("predict " + ws.q("full.ckpt") + " " + ws.q("mixed.mnj"));
    CHECK(mixed.status != 0);
    CHECK(mixed.err.rfind("error: ", 0) == 0);
    CHECK(lines_of(mixed.out).size() == 1);

    const Run c2s = ws.run("predict " + ws.q("full.ckpt") + " " + ws.q("data/toy.train.c2s"));
    CHECK(c2s.status == 0);
    CHECK(lines_of(c2s.out).size() == 3);

    const Run missing = ws.run("predict " + ws.q("absent.ckpt") + " " + ws.q("query.mnj"));
    CHECK(missing.status != 0);
    CHECK(missing.err.rfind("error: missing-checkpoint: ", 0) == 0);
  }

  SUBCASE("evaluate") {
    const Run a = ws.run("evaluate " + ws.q("full.ckpt") + " " + ws.q("data/toy.train.c2s") + " --dump " + ws.q("a.pred") +
                         " --report " + ws.q("a.report"));
    const Run b = ws.run("evaluate " + ws.q("full.ckpt") + " " + ws.q("data/toy.train.c2s") + " --dump " + ws.q("b.pred") +
                         " --report " + ws.q("b.report"));
    REQUIRE(a.status == 0);
    CHECK(slurp(ws / "a.report") == slurp(ws / "b.report"));
    CHECK(slurp(ws / "a.pred") == slurp(ws / "b.pred"));
    CHECK(lines_of(slurp(ws / "a.pred")).size() == 3);
    CHECK(a.out.find("f1\t") != std::string::npos);

    const Run bleu = ws.run("evaluate " + ws.q("full.ckpt") + " " + ws.q("data/toy.train.c2s") + " --task bleu --dump " +
                            ws.q("c.pred"));
    CHECK(bleu.status == 0);
    CHECK(bleu.out.rfind("bleu\t", 0) == 0);

    ws.write("gold.pred", "count items | count items | 0\nset name | set name | 0\nis empty | is empty | 0\n");
    const Run gold = ws.run("evaluate --predictions " + ws.q("gold.pred"));
    REQUIRE(gold.status == 0);
    CHECK(gold.out.find("f1\t1.0000\n") != std::string::npos);

    ws.write("hand.pred", "get value name | get value | 0\nset name | set set name | 0\nexecute task | run | 0\n");
    const Run hand = ws.run("evaluate --predictions " + ws.q("hand.pred"));
    CHECK(hand.out.find("f1\t0.6154\n") != std::string::npos);

    const Run none = ws.run("evaluate");
    CHECK(none.status != 0);
    CHECK(none.err.rfind("error: invalid-argument: ", 0) == 0);
  }

  SUBCASE("resume continues from the last state") {
    const Run r = ws.run("train " + ws.q("data/toy") + " -o " + ws.q("more.ckpt") + " --resume " + ws.q("full.ckpt.last") +
                         " " + kTiny + " --set epochs=3");
    REQUIRE(r.status == 0);
    CHECK(CheckpointArchive::load(ws / "more.ckpt.last").get_i64("state.epoch") == 3);
  }
}

TEST_CASE("usage errors exit nonzero") {
  Workspace ws("usage");
  CHECK(ws.run("").status != 0);
  CHECK(ws.run("frobnicate").status != 0);
  CHECK(ws.run("predict").status != 0);
}
