#include "code2seq/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "code2seq/decoder.hpp"
#include "code2seq/error.hpp"

namespace code2seq {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double ratio(std::size_t num, std::size_t den, bool both_empty) {
  if (den == 0) return both_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Prf finish(std::size_t m, std::size_t np, std::size_t ng) {
  Prf out;
  out.matched = m;
  out.predicted = np;
  out.gold = ng;
  const bool both_empty = np == 0 && ng == 0;
  out.precision = ratio(m, np, both_empty);
  out.recall = ratio(m, ng, both_empty);
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(' ');
    out += items[i];
  }
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Prf subtoken_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  std::map<std::string, long> counts;
  for (const auto& g : gold) ++counts[lower(g)];
  std::size_t m = 0;
  for (const auto& p : predicted) {
    auto it = counts.find(lower(p));
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++m;
    }
  }
  return finish(m, predicted.size(), gold.size());
}

F1Report corpus_f1(const std::vector<SubtokenPair>& pairs) {
  F1Report r;
  std::size_t m = 0, np = 0, ng = 0;
  for (const auto& [pred, gold] : pairs) {
    const Prf e = subtoken_f1(pred, gold);
    m += e.matched;
    np += e.predicted;
    ng += e.gold;
    r.macro_precision += e.precision;
    r.macro_recall += e.recall;
    r.macro_f1 += e.f1;
  }
  r.examples = pairs.size();
  if (!pairs.empty()) {
    const double n = static_cast<double>(pairs.size());
    r.macro_precision /= n;
    r.macro_recall /= n;
    r.macro_f1 /= n;
  }
  r.micro = finish(m, np, ng);
  return r;
}

std::vector<std::string> bleu_tokenize(std::string_view text) { return words(lower(std::string(text))); }

BleuReport smoothed_bleu(const std::vector<std::vector<std::string>>& candidates,
                         const std::vector<std::vector<std::vector<std::string>>>& references) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyCandidateSet, "no candidates to score");
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::kInvalidArgument, "candidate and reference counts differ");
  }
  std::array<std::size_t, 4> matched{}, total{};
  std::size_t c_len = 0, r_len = 0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto& cand = candidates[s];
    const auto& refs = references[s];
    if (refs.empty()) throw Error(ErrorCode::kInvalidArgument, "candidate " + std::to_string(s) + " has no reference");
    c_len += cand.size();
    std::size_t best = refs[0].size();
    for (const auto& ref : refs) {
      const auto diff = [&](std::size_t len) { return len > cand.size() ? len - cand.size() : cand.size() - len; };
      if (diff(ref.size()) < diff(best) || (diff(ref.size()) == diff(best) && ref.size() < best)) best = ref.size();
    }
    r_len += best;
    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts cc = ngrams(cand, n);
      NgramCounts max_ref;
      for (const auto& ref : refs) {
        for (const auto& [g, cnt] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : cc) {
        auto it = max_ref.find(g);
        matched[n - 1] += std::min(cnt, it == max_ref.end() ? std::size_t{0} : it->second);
        total[n - 1] += cnt;
      }
    }
  }
  BleuReport r;
  r.candidate_length = c_len;
  r.reference_length = r_len;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    double p;
    if (n >= 1 && matched[n] == 0) {
      p = 1.0 / static_cast<double>(total[n] + 1);
    } else {
      p = total[n] == 0 ? 0.0 : static_cast<double>(matched[n]) / static_cast<double>(total[n]);
    }
    r.precisions[n] = p;
    if (p <= 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  r.brevity_penalty = c_len == 0 ? 0.0 : (c_len < r_len ? std::exp(1.0 - static_cast<double>(r_len) / c_len) : 1.0);
  r.bleu = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

std::string format_dump_line(const DumpLine& line) {
  return join(line.gold) + " | " + join(line.predicted) + " | " + format_double(line.score);
}

DumpLine parse_dump_line(std::string_view text) {
  const auto a = text.find('|');
  const auto b = a == std::string_view::npos ? a : text.find('|', a + 1);
  if (b == std::string_view::npos || text.find('|', b + 1) != std::string_view::npos) {
    throw Error(ErrorCode::kMalformedText, "prediction line needs exactly three '|' separated fields");
  }
  DumpLine out;
  out.gold = words(text.substr(0, a));
  out.predicted = words(text.substr(a + 1, b - a - 1));
  const auto score = words(text.substr(b + 1));
  if (score.size() != 1) throw Error(ErrorCode::kMalformedText, "prediction line has no score");
  const auto res = std::from_chars(score[0].data(), score[0].data() + score[0].size(), out.score);
  if (res.ec != std::errc() || res.ptr != score[0].data() + score[0].size()) {
    throw Error(ErrorCode::kMalformedText, "bad score '" + score[0] + "'");
  }
  return out;
}

std::vector<DumpLine> read_prediction_dump(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open prediction dump '" + file.string() + "'");
  std::vector<DumpLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(parse_dump_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

F1Report dump_f1(const std::vector<DumpLine>& lines) {
  std::vector<SubtokenPair> pairs;
  for (const auto& l : lines) pairs.emplace_back(l.predicted, l.gold);
  return corpus_f1(pairs);
}

BleuReport dump_bleu(const std::vector<DumpLine>& lines) {
  std::vector<std::vector<std::string>> cands;
  std::vector<std::vector<std::vector<std::string>>> refs;
  for (const auto& l : lines) {
    cands.push_back(bleu_tokenize(join(l.predicted)));
    refs.push_back({bleu_tokenize(join(l.gold))});
  }
  return smoothed_bleu(cands, refs);
}

std::string format_f1_report(const F1Report& r) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << "examples\t" << r.examples << '\n'
      << "precision\t" << r.micro.precision << '\n'
      << "recall\t" << r.micro.recall << '\n'
      << "f1\t" << r.micro.f1 << '\n'
      << "macro_precision\t" << r.macro_precision << '\n'
      << "macro_recall\t" << r.macro_recall << '\n'
      << "macro_f1\t" << r.macro_f1 << '\n';
  return out.str();
}

std::string format_bleu_report(const BleuReport& r) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << "bleu\t" << r.bleu << '\n';
  for (std::size_t n = 0; n < 4; ++n) out << "p" << n + 1 << '\t' << r.precisions[n] << '\n';
  out << "brevity_penalty\t" << r.brevity_penalty << '\n'
      << "candidate_length\t" << r.candidate_length << '\n'
      << "reference_length\t" << r.reference_length << '\n';
  return out.str();
}

std::vector<AblationRow> ablation_rows(const std::vector<std::pair<Ablation, F1Report>>& results) {
  const auto full = std::find_if(results.begin(), results.end(), [](const auto& r) { return r.first == Ablation::kNone; });
  if (full == results.end()) throw Error(ErrorCode::kMissingCheckpoint, "no result for variant 'full'");
  std::vector<AblationRow> rows;
  for (const auto& [variant, report] : results) {
    rows.push_back({variant, report, 100.0 * (report.micro.f1 - full->second.micro.f1)});
  }
  return rows;
}

std::vector<DumpLine> predict_dataset(Model& model, const std::vector<Example>& examples) {
  std::vector<DumpLine> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const Prediction p = greedy_decode(model, encode_ids(ex, model.vocab()));
    out.push_back({ex.target, p.subtokens, p.score});
  }
  return out;
}

std::vector<AblationRow> ablation_report(const std::filesystem::path& dir, const std::vector<Example>& examples) {
  for (Ablation a : kAllVariants) {
    const auto file = dir / (std::string(ablation_name(a)) + ".ckpt");
    if (!std::filesystem::exists(file)) {
      throw Error(ErrorCode::kMissingCheckpoint,
                  "no checkpoint for variant '" + std::string(ablation_name(a)) + "' (" + file.string() + ")");
    }
  }
  std::vector<std::pair<Ablation, F1Report>> results;
  for (Ablation a : kAllVariants) {
    Model model = Model::restore(CheckpointArchive::load(dir / (std::string(ablation_name(a)) + ".ckpt")));
    results.emplace_back(a, dump_f1(predict_dataset(model, examples)));
  }
  return ablation_rows(results);
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out.precision(2);
  out << std::fixed;
  out << "variant\tprecision\trecall\tf1\tdelta_f1\n";
  for (const auto& r : rows) {
    out << ablation_label(r.variant) << '\t' << 100.0 * r.report.micro.precision << '\t'
        << 100.0 * r.report.micro.recall << '\t' << 100.0 * r.report.micro.f1 << '\t';
    if (r.delta_f1 > 0.0) out << '+';
    out << r.delta_f1 << '\n';
  }
  return out.str();
}

}  // namespace code2seq
