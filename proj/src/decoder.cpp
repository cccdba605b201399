#include "code2seq/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "code2seq/error.hpp"

namespace code2seq {

namespace {

std::vector<double> log_softmax(const Tensor& logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits.data()) mx = std::max(mx, x);
  double total = 0.0;
  for (double x : logits.data()) total += std::exp(x - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

bool emittable(int id, bool names) {
  if (id == kPadId || id == kSosId) return false;
  return !(names && id == kEosId);
}

/// Allowed ids ordered by log-probability descending, ties by id.
std::vector<int> ranked(const std::vector<double>& lp, bool names, std::size_t limit) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (emittable(static_cast<int>(i), names)) ids.push_back(static_cast<int>(i));
  }
  const std::size_t n = std::min(limit, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), [&](int a, int b) {
    return lp[static_cast<std::size_t>(a)] != lp[static_cast<std::size_t>(b)]
               ? lp[static_cast<std::size_t>(a)] > lp[static_cast<std::size_t>(b)]
               : a < b;
  });
  ids.resize(n);
  return ids;
}

std::vector<AttentionEntry> trace_row(const Var& alpha, const Encoded& enc, const ExampleIds& ex) {
  std::vector<AttentionEntry> row;
  if (!alpha.valid()) return row;
  const Tensor& a = alpha.value();
  for (std::size_t i = 0; i < enc.selected.size(); ++i) {
    row.push_back({ex.contexts[enc.selected[i]].source_index, a[i]});
  }
  std::stable_sort(row.begin(), row.end(), [](const AttentionEntry& x, const AttentionEntry& y) {
    return x.weight != y.weight ? x.weight > y.weight : x.context < y.context;
  });
  return row;
}

std::vector<std::string> split_name(const std::string& name) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto bar = name.find('|', start);
    out.push_back(name.substr(start, bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

bool has_decoder(const Model& m) { return m.config().ablation != Ablation::kNoDecoder; }

Prediction name_prediction(const Model& model, int id, double lp, const std::vector<AttentionEntry>& row,
                           std::size_t context_count) {
  Prediction p;
  p.ids = {id};
  p.subtokens = split_name(model.output_vocab().token(id));
  p.score = lp;
  p.finished = true;
  p.trace.assign(p.subtokens.size(), row);
  p.context_count = context_count;
  return p;
}

std::vector<Prediction> decode_names(Model& model, const ExampleIds& ex, std::size_t count) {
  Graph g(false);
  const auto sel = model.inference_selection(ex);
  const Encoded enc = model.encode(g, ex, sel, {});
  const StepResult r = model.name_logits(g, enc);
  const auto lp = log_softmax(r.logits.value());
  const auto row = trace_row(r.alpha, enc, ex);
  std::vector<Prediction> out;
  for (int id : ranked(lp, true, count)) {
    out.push_back(name_prediction(model, id, lp[static_cast<std::size_t>(id)], row, ex.contexts.size()));
  }
  return out;
}

}  // namespace

Prediction greedy_decode(Model& model, const ExampleIds& ex) {
  if (ex.contexts.empty()) throw Error(ErrorCode::kEmptyContexts, "example has no path contexts");
  if (!has_decoder(model)) return decode_names(model, ex, 1).front();

  Graph g(false);
  const auto sel = model.inference_selection(ex);
  const Encoded enc = model.encode(g, ex, sel, {});
  Prediction p;
  p.context_count = ex.contexts.size();
  LstmState state{enc.h0, enc.c0};
  int prev = kSosId;
  for (std::size_t t = 0; t < model.config().max_target_len; ++t) {
    const StepResult r = model.decode_step(g, enc, prev, state);
    const auto lp = log_softmax(r.logits.value());
    const int y = ranked(lp, false, 1).front();
    p.score += lp[static_cast<std::size_t>(y)];
    if (y == kEosId) {
      p.finished = true;
      break;
    }
    p.ids.push_back(y);
    p.subtokens.push_back(model.output_vocab().token(y));
    p.trace.push_back(trace_row(r.alpha, enc, ex));
    state = r.state;
    prev = y;
  }
  return p;
}

std::vector<Prediction> beam_decode(Model& model, const ExampleIds& ex, std::size_t beam) {
  if (beam < 1) throw Error(ErrorCode::kInvalidArgument, "beam width must be >= 1");
  if (ex.contexts.empty()) throw Error(ErrorCode::kEmptyContexts, "example has no path contexts");
  if (!has_decoder(model)) return decode_names(model, ex, beam);

  struct Hyp {
    Prediction pred;
    LstmState state;
  };
  struct Candidate {
    std::size_t parent;
    int token;
    double score;
  };

  Graph g(false);
  const auto sel = model.inference_selection(ex);
  const Encoded enc = model.encode(g, ex, sel, {});
  std::vector<Hyp> alive(1);
  alive[0].state = {enc.h0, enc.c0};
  alive[0].pred.context_count = ex.contexts.size();
  std::vector<Prediction> done;

  for (std::size_t t = 0; t < model.config().max_target_len && !alive.empty(); ++t) {
    std::vector<Candidate> cands;
    std::vector<StepResult> steps;
    std::vector<std::vector<double>> lps;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const int prev = alive[h].pred.ids.empty() ? kSosId : alive[h].pred.ids.back();
      steps.push_back(model.decode_step(g, enc, prev, alive[h].state));
      lps.push_back(log_softmax(steps.back().logits.value()));
      for (int y : ranked(lps.back(), false, beam)) {
        cands.push_back({h, y, alive[h].pred.score + lps.back()[static_cast<std::size_t>(y)]});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.score > b.score;
    });
    cands.resize(std::min(cands.size(), beam));

    std::vector<Hyp> next;
    for (const Candidate& c : cands) {
      Hyp h = alive[c.parent];
      h.pred.score = c.score;
      if (c.token == kEosId) {
        h.pred.finished = true;
        done.push_back(std::move(h.pred));
        continue;
      }
      h.pred.ids.push_back(c.token);
      h.pred.subtokens.push_back(model.output_vocab().token(c.token));
      h.pred.trace.push_back(trace_row(steps[c.parent].alpha, enc, ex));
      h.state = steps[c.parent].state;
      next.push_back(std::move(h));
    }
    alive = std::move(next);
  }
  for (auto& h : alive) done.push_back(std::move(h.pred));

  std::stable_sort(done.begin(), done.end(), [](const Prediction& a, const Prediction& b) {
    return a.normalized_score() > b.normalized_score();
  });
  if (done.size() > beam) done.resize(beam);
  return done;
}

std::vector<ExplainedStep> explain(const Prediction& prediction, const Example& example, std::size_t top_n) {
  if (prediction.context_count != example.contexts.size() || prediction.trace.size() != prediction.subtokens.size()) {
    throw Error(ErrorCode::kMismatchedExample, "prediction was not decoded from this example");
  }
  std::vector<ExplainedStep> out;
  for (std::size_t t = 0; t < prediction.subtokens.size(); ++t) {
    ExplainedStep step{prediction.subtokens[t], {}};
    for (const AttentionEntry& e : prediction.trace[t]) {
      if (step.contexts.size() >= top_n) break;
      if (e.context >= example.contexts.size()) {
        throw Error(ErrorCode::kMismatchedExample, "trace refers to context " + std::to_string(e.context));
      }
      step.contexts.push_back({e.context, e.weight, format_context(example.contexts[e.context])});
    }
    out.push_back(std::move(step));
  }
  return out;
}

std::string render_explanation(const std::vector<ExplainedStep>& steps) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    out << "step " << t + 1 << ": " << steps[t].subtoken << '\n';
    for (const auto& c : steps[t].contexts) out << "  " << c.weight << "  " << c.rendered << '\n';
  }
  return out.str();
}

std::string explanation_json(std::size_t example_index, const std::vector<ExplainedStep>& steps) {
  nlohmann::json j;
  j["index"] = example_index;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json step;
    step["subtoken"] = s.subtoken;
    step["contexts"] = nlohmann::json::array();
    for (const auto& c : s.contexts) {
      step["contexts"].push_back({{"context", c.context}, {"weight", c.weight}, {"path", c.rendered}});
    }
    j["steps"].push_back(std::move(step));
  }
  return j.dump();
}

}  // namespace code2seq
