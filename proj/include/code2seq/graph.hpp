#pragma once

// Reverse-mode differentiation over a per-example tape. Every operation appends
// a node holding its value and a closure that pushes the node's gradient to
// its inputs; `backward` walks the tape once, newest node first.
//
// Parameter leaves do not own storage: they read `Parameter::value` and
// accumulate straight into `Parameter::gradient`. Gradients therefore add up
// across graphs until the caller zeroes them (the trainer does this once per
// batch). A single graph can be differentiated only once.

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "code2seq/tensor.hpp"

namespace code2seq {

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor gradient;
  Tensor momentum;

  void zero_grad() { gradient.fill(0.0); }
};

/// LSTM weights with one (input + hidden) x hidden matrix and one bias per gate.
struct LstmCell {
  LstmCell() = default;
  LstmCell(const std::string& prefix, std::size_t input_size, std::size_t hidden_size, Rng& rng);

  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Parameter w_input, w_forget, w_output, w_cell;
  Parameter b_input, b_forget, b_output, b_cell;

  std::vector<Parameter*> parameters();
};

class Graph;

class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return graph_ != nullptr; }
  const Tensor& value() const;
  std::size_t size() const { return value().size(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::int32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::int32_t id_ = -1;
};

struct LstmState {
  Var h;
  Var c;
};

class Graph {
 public:
  /// With `recording` off no backward closures are kept (inference).
  explicit Graph(bool recording = true) : recording_(recording) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return recording_; }

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  /// Sum of the given rows of an embedding table.
  Var embedding_sum(Parameter& table, std::span<const int> rows);
  /// Row vector times matrix: x (n) . W (n x m) -> (m).
  Var matvec(Var x, Var w);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  /// Elementwise product with a constant (dropout masks).
  Var mask(Var a, const Tensor& m);
  Var scale(Var a, double s);
  Var tanh(Var a);
  Var concat(std::span<const Var> parts);
  Var mean(std::span<const Var> parts);
  Var sum(std::span<const Var> parts);
  /// Zero-extends a vector to `size` entries.
  Var pad(Var a, std::size_t size);
  /// k vectors of length d -> k x d matrix.
  Var stack_rows(std::span<const Var> rows);
  /// Z (k x d) . u (d) -> (k).
  Var row_scores(Var z, Var u);
  /// w (k) . Z (k x d) -> (d).
  Var weighted_rows(Var w, Var z);
  /// Softmax over entries flagged valid; invalid entries get probability 0.
  /// An empty flag list means all valid. Throws kAllMasked if none are valid.
  Var masked_softmax(Var scores, std::span<const std::uint8_t> valid = {});
  /// -log softmax(logits)[target] as a scalar.
  Var softmax_cross_entropy(Var logits, std::size_t target);
  /// One LSTM step. `recurrent_mask` (may be null) multiplies h_prev before the gates.
  LstmState lstm_step(LstmCell& cell, Var x, LstmState prev, const Tensor* recurrent_mask);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws kGraphReuse on a second call.
  void backward(Var loss);

  void clear();
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  friend class Var;
  using Backward = std::function<void(Graph&, std::int32_t self)>;

  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id_)].requires_grad; }
  const Tensor& val(std::int32_t id) const;
  Tensor& grad(std::int32_t id);
  bool has_grad(std::int32_t id) const;
  void check(Var v) const;

  bool recording_;
  bool differentiated_ = false;
  std::deque<Node> nodes_;  // stable addresses: value() references outlive later ops
  std::unordered_map<const Parameter*, std::int32_t> param_nodes_;
};

}  // namespace code2seq
