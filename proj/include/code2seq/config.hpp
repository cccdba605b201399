#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "code2seq/model.hpp"
#include "code2seq/paths.hpp"
#include "code2seq/trainer.hpp"

namespace code2seq {

enum class Task { kSummarization, kCaptioning };

/// Flat key=value configuration covering extraction, model and training
/// knobs. Unknown keys and unparsable values are errors.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  /// `key=value`.
  void apply(std::string_view assignment);
  /// One assignment per line; blank lines and `#` comments are ignored.
  void load_file(const std::filesystem::path& file);

  bool is_set(const std::string& key) const { return explicit_.count(key) != 0; }
  std::string get(const std::string& key) const;

  Task task() const;
  std::uint64_t seed() const;
  double val_fraction() const;
  double test_fraction() const;
  ExtractionConfig extraction() const;
  ModelConfig model() const;
  TrainConfig train() const;

  /// Every key with its resolved value, sorted, one `key=value` per line.
  std::string render() const;

 private:
  std::string resolved(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

}  // namespace code2seq
