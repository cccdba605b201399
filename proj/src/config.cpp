#include "code2seq/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "code2seq/error.hpp"

namespace code2seq {

namespace {

// "auto" entries take their value from the task.
const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "0"},
      {"task", "summarization"},
      {"val_fraction", "0.1"},
      {"test_fraction", "0.1"},
      {"max_path_length", "9"},
      {"max_path_width", "0"},
      {"k", "200"},
      {"d_nodes", "128"},
      {"d_tokens", "128"},
      {"d_hidden", "128"},
      {"d_target", "128"},
      {"d_path", "auto"},
      {"d_decoder", "auto"},
      {"input_dropout", "auto"},
      {"recurrent_dropout", "0.5"},
      {"max_target_len", "10"},
      {"ablation", "full"},
      {"lr", "0.01"},
      {"lr_decay", "0.95"},
      {"momentum", "0.95"},
      {"batch_size", "32"},
      {"epochs", "20"},
      {"patience", "5"},
      {"clip_norm", "0"},
      {"metric", "auto"},
  };
  return d;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kConfigError, "bad value '" + text + "' for " + key);
  }
  return v;
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw Error(ErrorCode::kConfigError, "unknown configuration key '" + key + "'");
  const std::string old = values_[key];
  values_[key] = value;
  try {
    // Validate eagerly so typos surface at the point of entry.
    (void)extraction();
    (void)model();
    (void)train();
    (void)task();
    (void)val_fraction();
    (void)test_fraction();
  } catch (...) {
    values_[key] = old;
    throw;
  }
  explicit_[key] = true;
}

void RunConfig::apply(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::kConfigError, "expected key=value, got '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config file '" + file.string() + "'");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    try {
      apply(body);
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::string RunConfig::get(const std::string& key) const {
  if (!values_.count(key)) throw Error(ErrorCode::kConfigError, "unknown configuration key '" + key + "'");
  return resolved(key);
}

std::string RunConfig::resolved(const std::string& key) const {
  const std::string& v = values_.at(key);
  if (v != "auto") return v;
  const bool captioning = task() == Task::kCaptioning;
  if (key == "d_path") return captioning ? "256" : "128";
  if (key == "d_decoder") return captioning ? "512" : "320";
  if (key == "input_dropout") return captioning ? "0.7" : "0.25";
  if (key == "metric") return captioning ? "bleu" : "f1";
  return v;
}

Task RunConfig::task() const {
  const std::string& t = values_.at("task");
  if (t == "summarization") return Task::kSummarization;
  if (t == "captioning") return Task::kCaptioning;
  throw Error(ErrorCode::kConfigError, "task must be summarization or captioning, got '" + t + "'");
}

std::uint64_t RunConfig::seed() const { return parse_number<std::uint64_t>("seed", resolved("seed")); }

double RunConfig::val_fraction() const {
  const double v = parse_number<double>("val_fraction", resolved("val_fraction"));
  if (!(v >= 0.0 && v < 1.0)) throw Error(ErrorCode::kConfigError, "val_fraction must lie in [0, 1)");
  return v;
}

double RunConfig::test_fraction() const {
  const double v = parse_number<double>("test_fraction", resolved("test_fraction"));
  if (!(v >= 0.0 && v < 1.0) || v + val_fraction() >= 1.0) {
    throw Error(ErrorCode::kConfigError, "test_fraction must lie in [0, 1) and leave room for training data");
  }
  return v;
}

ExtractionConfig RunConfig::extraction() const {
  ExtractionConfig c;
  c.max_path_length = parse_number<int>("max_path_length", resolved("max_path_length"));
  c.max_path_width = parse_number<int>("max_path_width", resolved("max_path_width"));
  c.max_paths_per_example = parse_number<std::size_t>("k", resolved("k"));
  c.seed = seed();
  c.validate();
  return c;
}

ModelConfig RunConfig::model() const {
  ModelConfig c;
  auto dim = [&](const char* key) { return parse_number<std::size_t>(key, resolved(key)); };
  c.d_nodes = dim("d_nodes");
  c.d_tokens = dim("d_tokens");
  c.d_hidden = dim("d_hidden");
  c.d_target = dim("d_target");
  c.d_path = dim("d_path");
  c.d_decoder = dim("d_decoder");
  c.k = dim("k");
  c.max_target_len = dim("max_target_len");
  c.input_dropout = parse_number<double>("input_dropout", resolved("input_dropout"));
  c.recurrent_dropout = parse_number<double>("recurrent_dropout", resolved("recurrent_dropout"));
  c.ablation = parse_ablation(resolved("ablation"));
  c.validate();
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c;
  c.lr0 = parse_number<double>("lr", resolved("lr"));
  c.lr_decay = parse_number<double>("lr_decay", resolved("lr_decay"));
  c.momentum = parse_number<double>("momentum", resolved("momentum"));
  c.batch_size = parse_number<std::size_t>("batch_size", resolved("batch_size"));
  c.max_epochs = parse_number<std::size_t>("epochs", resolved("epochs"));
  c.patience = parse_number<std::size_t>("patience", resolved("patience"));
  c.clip_norm = parse_number<double>("clip_norm", resolved("clip_norm"));
  c.metric = parse_metric(resolved("metric"));
  c.seed = seed();
  c.validate();
  return c;
}

std::string RunConfig::render() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << '=' << resolved(k) << '\n';
  return out.str();
}

}  // namespace code2seq
