#include "code2seq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "code2seq/error.hpp"

namespace code2seq {

namespace {

struct VariantInfo {
  Ablation ablation;
  std::string_view name;
  std::string_view label;
};

constexpr VariantInfo kVariants[] = {
    {Ablation::kNone, "full", "code2seq (full model)"},
    {Ablation::kNoAstNodes, "no_ast_nodes", "No AST nodes (only tokens)"},
    {Ablation::kNoDecoder, "no_decoder", "No decoder"},
    {Ablation::kNoTokenSplit, "no_token_split", "No token splitting"},
    {Ablation::kNoTokens, "no_tokens", "No tokens (only AST nodes)"},
    {Ablation::kNoAttention, "no_attention", "No attention"},
    {Ablation::kNoRandom, "no_random", "No random (sample k paths in advance)"},
};

bool uses_nodes(Ablation a) { return a != Ablation::kNoAstNodes; }
bool uses_tokens(Ablation a) { return a != Ablation::kNoTokens; }
bool uses_decoder(Ablation a) { return a != Ablation::kNoDecoder; }
bool uses_attention(Ablation a) { return a != Ablation::kNoAttention; }

}  // namespace

std::string_view ablation_name(Ablation a) {
  for (const auto& v : kVariants) {
    if (v.ablation == a) return v.name;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown ablation");
}

std::string_view ablation_label(Ablation a) {
  for (const auto& v : kVariants) {
    if (v.ablation == a) return v.label;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown ablation");
}

Ablation parse_ablation(std::string_view name) {
  for (const auto& v : kVariants) {
    if (v.name == name) return v.ablation;
  }
  if (name == "none") return Ablation::kNone;
  throw Error(ErrorCode::kConfigError, "unknown ablation '" + std::string(name) + "'");
}

ModelConfig ModelConfig::captioning() {
  ModelConfig c;
  c.d_path = 256;
  c.d_decoder = 512;
  c.input_dropout = 0.7;
  return c;
}

std::size_t ModelConfig::context_width() const {
  std::size_t w = 0;
  if (uses_nodes(ablation)) w += 2 * d_path;
  if (uses_tokens(ablation)) w += 2 * d_tokens;
  return w;
}

void ModelConfig::validate() const {
  const std::pair<const char*, std::size_t> dims[] = {
      {"d_nodes", d_nodes},   {"d_tokens", d_tokens},   {"d_hidden", d_hidden},        {"d_target", d_target},
      {"d_path", d_path},     {"d_decoder", d_decoder}, {"max_target_len", max_target_len}, {"k", k},
  };
  for (const auto& [name, v] : dims) {
    if (v < 1) throw Error(ErrorCode::kConfigError, std::string(name) + " must be >= 1");
  }
  if (d_decoder < d_hidden) {
    throw Error(ErrorCode::kConfigError, "d_decoder must be >= d_hidden (the start state is padded, not projected)");
  }
  if (!(input_dropout >= 0.0 && input_dropout < 1.0) || !(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0)) {
    throw Error(ErrorCode::kConfigError, "dropout rates must lie in [0, 1)");
  }
}

ExampleIds encode_ids(const Example& example, const Vocabularies& vocab) {
  ExampleIds out;
  out.contexts.reserve(example.contexts.size());
  for (std::size_t i = 0; i < example.contexts.size(); ++i) {
    const PathContext& pc = example.contexts[i];
    ContextIds c;
    for (const auto& s : pc.left) c.left.push_back(vocab.subtokens.id(s, kSourceUnkId));
    for (const auto& s : pc.path) c.path.push_back(vocab.nodes.id(s, kSourceUnkId));
    for (const auto& s : pc.right) c.right.push_back(vocab.subtokens.id(s, kSourceUnkId));
    c.left_token = vocab.tokens.id(join_tokens(pc.left), kSourceUnkId);
    c.right_token = vocab.tokens.id(join_tokens(pc.right), kSourceUnkId);
    c.source_index = i;
    out.contexts.push_back(std::move(c));
  }
  std::stable_sort(out.contexts.begin(), out.contexts.end(),
                   [](const ContextIds& a, const ContextIds& b) { return a.key() < b.key(); });
  for (const auto& t : example.target) out.target.push_back(vocab.target.id(t, kTargetUnkId));
  out.name = vocab.names.id(join_tokens(example.target), kTargetUnkId);
  return out;
}

Model::Model(const ModelConfig& config, Vocabularies vocab, Rng& rng) : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  build_parameters(rng);
}

void Model::build_parameters(Rng& rng) {
  const ModelConfig& c = config_;
  const Ablation a = c.ablation;
  auto make = [&](const char* name, Shape shape) { return Parameter(name, glorot_uniform(shape, rng)); };

  if (uses_nodes(a)) {
    e_nodes_ = make("E_nodes", {vocab_.nodes.size(), c.d_nodes});
    path_fwd_ = LstmCell("path_fwd", c.d_nodes, c.d_path, rng);
    path_bwd_ = LstmCell("path_bwd", c.d_nodes, c.d_path, rng);
  }
  if (uses_tokens(a)) {
    if (a == Ablation::kNoTokenSplit) {
      e_tokens_ = make("E_tokens", {vocab_.tokens.size(), c.d_tokens});
    } else {
      e_subtokens_ = make("E_subtokens", {vocab_.subtokens.size(), c.d_tokens});
    }
  }
  w_in_ = make("W_in", {c.context_width(), c.d_hidden});
  if (uses_decoder(a)) {
    e_target_ = make("E_target", {vocab_.target.size(), c.d_target});
    decoder_ = LstmCell("decoder", c.d_target, c.d_decoder, rng);
  }
  if (uses_attention(a)) w_a_ = make("W_a", {c.d_decoder, c.d_hidden});
  const std::size_t wc_rows = uses_attention(a) ? c.d_hidden + c.d_decoder : c.d_decoder;
  w_c_ = make("W_c", {wc_rows, c.d_decoder});
  w_s_ = make("W_s", {c.d_decoder, output_vocab().size()});
}

std::vector<Parameter*> Model::parameters() {
  const Ablation a = config_.ablation;
  std::vector<Parameter*> out;
  auto cell = [&](LstmCell& l) {
    for (Parameter* p : l.parameters()) out.push_back(p);
  };
  if (uses_nodes(a)) {
    out.push_back(&e_nodes_);
    cell(path_fwd_);
    cell(path_bwd_);
  }
  if (uses_tokens(a)) out.push_back(a == Ablation::kNoTokenSplit ? &e_tokens_ : &e_subtokens_);
  out.push_back(&w_in_);
  if (uses_decoder(a)) {
    out.push_back(&e_target_);
    cell(decoder_);
  }
  if (uses_attention(a)) out.push_back(&w_a_);
  out.push_back(&w_c_);
  out.push_back(&w_s_);
  return out;
}

Parameter* Model::find(std::string_view name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

const Vocabulary& Model::output_vocab() const {
  return uses_decoder(config_.ablation) ? vocab_.target : vocab_.names;
}

Var Model::encode_token(Graph& g, std::span<const int> subtokens) {
  return g.embedding_sum(e_subtokens_, subtokens);
}

Var Model::encode_path(Graph& g, std::span<const int> symbols, DropoutSource dropout) {
  if (symbols.empty()) throw Error(ErrorCode::kEmptySequence, "path with no symbols");
  const std::size_t dp = config_.d_path;
  std::vector<Var> inputs;
  inputs.reserve(symbols.size());
  for (int s : symbols) inputs.push_back(g.embedding_sum(e_nodes_, std::span<const int>(&s, 1)));

  auto run = [&](LstmCell& cell, bool reverse) {
    std::optional<Tensor> mask;
    if (dropout.active() && config_.recurrent_dropout > 0.0) {
      mask = dropout_mask({dp}, config_.recurrent_dropout, *dropout.rng);
    }
    const Var zero = g.constant(Tensor({dp}));
    LstmState state{zero, zero};
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      const Var x = inputs[reverse ? inputs.size() - 1 - t : t];
      state = g.lstm_step(cell, x, state, mask ? &*mask : nullptr);
    }
    return state.h;
  };
  const Var fwd = run(path_fwd_, false);
  const Var bwd = run(path_bwd_, true);
  const Var both[] = {fwd, bwd};
  return g.concat(both);
}

Var Model::encode_context(Graph& g, const ContextIds& ctx, DropoutSource dropout) {
  const Ablation a = config_.ablation;
  std::vector<Var> parts;
  if (uses_nodes(a)) parts.push_back(encode_path(g, ctx.path, dropout));
  if (uses_tokens(a)) {
    if (a == Ablation::kNoTokenSplit) {
      parts.push_back(g.embedding_sum(e_tokens_, std::span<const int>(&ctx.left_token, 1)));
      parts.push_back(g.embedding_sum(e_tokens_, std::span<const int>(&ctx.right_token, 1)));
    } else {
      parts.push_back(encode_token(g, ctx.left));
      parts.push_back(encode_token(g, ctx.right));
    }
  }
  Var x = g.concat(parts);
  if (dropout.active() && config_.input_dropout > 0.0) {
    x = g.mask(x, dropout_mask({x.size()}, config_.input_dropout, *dropout.rng));
  }
  return g.tanh(g.matvec(x, g.parameter(w_in_)));
}

std::vector<std::size_t> Model::inference_selection(const ExampleIds& ex) const {
  const std::size_t n = ex.contexts.size();
  std::vector<std::size_t> by_source(n);
  for (std::size_t i = 0; i < n; ++i) by_source[ex.contexts[i].source_index] = i;
  std::vector<std::size_t> sel;
  const std::size_t k = std::min(config_.k, n);
  for (std::size_t j = 0; j < k; ++j) sel.push_back(by_source[j * n / k]);
  std::sort(sel.begin(), sel.end());
  return sel;
}

Encoded Model::encode(Graph& g, const ExampleIds& ex, std::span<const std::size_t> selected, DropoutSource dropout) {
  if (selected.empty() || ex.contexts.empty()) throw Error(ErrorCode::kEmptyContexts, "example has no path contexts");
  Encoded enc;
  enc.selected.assign(selected.begin(), selected.end());
  std::sort(enc.selected.begin(), enc.selected.end());
  for (std::size_t i : enc.selected) {
    if (i >= ex.contexts.size()) {
      throw Error(ErrorCode::kInvalidIndex, "context index " + std::to_string(i) + " out of range");
    }
    enc.rows.push_back(encode_context(g, ex.contexts[i], dropout));
  }
  enc.z = g.stack_rows(enc.rows);
  enc.h0 = g.pad(g.mean(enc.rows), config_.d_decoder);
  enc.c0 = g.constant(Tensor({config_.d_decoder}));
  return enc;
}

std::pair<Var, Var> Model::attention_step(Graph& g, Var h, Var z, std::span<const std::uint8_t> valid) {
  const Var u = g.matvec(h, g.parameter(w_a_));
  const Var alpha = g.masked_softmax(g.row_scores(z, u), valid);
  return {alpha, g.weighted_rows(alpha, z)};
}

StepResult Model::decode_step(Graph& g, const Encoded& enc, int prev, LstmState state) {
  if (!uses_decoder(config_.ablation)) throw Error(ErrorCode::kInvalidArgument, "variant has no decoder");
  StepResult r;
  const Var x = g.embedding_sum(e_target_, std::span<const int>(&prev, 1));
  r.state = g.lstm_step(decoder_, x, state, nullptr);
  Var features = r.state.h;
  if (uses_attention(config_.ablation)) {
    auto [alpha, context] = attention_step(g, r.state.h, enc.z);
    r.alpha = alpha;
    const Var parts[] = {context, r.state.h};
    features = g.concat(parts);
  }
  r.logits = g.matvec(g.tanh(g.matvec(features, g.parameter(w_c_))), g.parameter(w_s_));
  return r;
}

StepResult Model::name_logits(Graph& g, const Encoded& enc) {
  StepResult r;
  auto [alpha, context] = attention_step(g, enc.h0, enc.z);
  r.alpha = alpha;
  const Var parts[] = {context, enc.h0};
  r.logits = g.matvec(g.tanh(g.matvec(g.concat(parts), g.parameter(w_c_))), g.parameter(w_s_));
  return r;
}

Var Model::loss_sum(Graph& g, const ExampleIds& ex, std::span<const std::size_t> selected, DropoutSource dropout,
                    std::size_t* steps) {
  const Encoded enc = encode(g, ex, selected, dropout);
  std::vector<Var> terms;
  if (!uses_decoder(config_.ablation)) {
    terms.push_back(g.softmax_cross_entropy(name_logits(g, enc).logits, static_cast<std::size_t>(ex.name)));
  } else {
    if (ex.target.empty()) throw Error(ErrorCode::kEmptySequence, "example has an empty target");
    std::vector<int> gold(ex.target.begin(),
                          ex.target.begin() + static_cast<std::ptrdiff_t>(std::min(ex.target.size(), config_.max_target_len)));
    gold.push_back(kEosId);
    LstmState state{enc.h0, enc.c0};
    int prev = kSosId;
    for (int y : gold) {
      StepResult r = decode_step(g, enc, prev, state);
      terms.push_back(g.softmax_cross_entropy(r.logits, static_cast<std::size_t>(y)));
      state = r.state;
      prev = y;
    }
  }
  if (steps) *steps = terms.size();
  return g.sum(terms);
}

Var Model::forward_loss(Graph& g, const ExampleIds& ex, std::span<const std::size_t> selected, DropoutSource dropout) {
  std::size_t steps = 0;
  const Var total = loss_sum(g, ex, selected, dropout, &steps);
  return g.scale(total, 1.0 / static_cast<double>(steps));
}

void store_config(CheckpointArchive& archive, const ModelConfig& c) {
  archive.put_i64("config.d_nodes", static_cast<std::int64_t>(c.d_nodes));
  archive.put_i64("config.d_tokens", static_cast<std::int64_t>(c.d_tokens));
  archive.put_i64("config.d_hidden", static_cast<std::int64_t>(c.d_hidden));
  archive.put_i64("config.d_target", static_cast<std::int64_t>(c.d_target));
  archive.put_i64("config.d_path", static_cast<std::int64_t>(c.d_path));
  archive.put_i64("config.d_decoder", static_cast<std::int64_t>(c.d_decoder));
  archive.put_i64("config.k", static_cast<std::int64_t>(c.k));
  archive.put_f64("config.input_dropout", c.input_dropout);
  archive.put_f64("config.recurrent_dropout", c.recurrent_dropout);
  archive.put_i64("config.max_target_len", static_cast<std::int64_t>(c.max_target_len));
  archive.put_string("config.ablation", std::string(ablation_name(c.ablation)));
}

ModelConfig restore_config(const CheckpointArchive& archive) {
  auto dim = [&](const char* name) {
    const auto v = archive.get_i64(name);
    if (v < 1) throw Error(ErrorCode::kCorruptFile, std::string(name) + " is not positive");
    return static_cast<std::size_t>(v);
  };
  ModelConfig c;
  c.d_nodes = dim("config.d_nodes");
  c.d_tokens = dim("config.d_tokens");
  c.d_hidden = dim("config.d_hidden");
  c.d_target = dim("config.d_target");
  c.d_path = dim("config.d_path");
  c.d_decoder = dim("config.d_decoder");
  c.k = dim("config.k");
  c.input_dropout = archive.get_f64("config.input_dropout");
  c.recurrent_dropout = archive.get_f64("config.recurrent_dropout");
  c.max_target_len = dim("config.max_target_len");
  c.ablation = parse_ablation(archive.get_string("config.ablation"));
  return c;
}

void Model::store(CheckpointArchive& archive) const {
  store_config(archive, config_);
  vocab_.store(archive);
  for (Parameter* p : const_cast<Model*>(this)->parameters()) archive.put_tensor("param." + p->name, p->value);
}

Model Model::restore(const CheckpointArchive& archive) {
  Model m;
  m.config_ = restore_config(archive);
  m.config_.validate();
  m.vocab_ = Vocabularies::restore(archive);
  Rng scratch(0);
  m.build_parameters(scratch);
  for (Parameter* p : m.parameters()) {
    Tensor t = archive.get_tensor("param." + p->name);
    if (t.shape() != p->value.shape()) {
      throw Error(ErrorCode::kCorruptFile, "parameter " + p->name + " has shape " + shape_string(t.shape()) +
                                               ", expected " + shape_string(p->value.shape()));
    }
    p->value = std::move(t);
  }
  return m;
}

}  // namespace code2seq
