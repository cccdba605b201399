#include "code2seq/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "code2seq/error.hpp"

namespace code2seq {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      gradient(Tensor::zeros_like(value)),
      momentum(Tensor::zeros_like(value)) {}

LstmCell::LstmCell(const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng)
    : input_size(input), hidden_size(hidden) {
  const Shape w{input + hidden, hidden};
  w_input = Parameter(prefix + ".W_i", glorot_uniform(w, rng));
  w_forget = Parameter(prefix + ".W_f", glorot_uniform(w, rng));
  w_output = Parameter(prefix + ".W_o", glorot_uniform(w, rng));
  w_cell = Parameter(prefix + ".W_g", glorot_uniform(w, rng));
  b_input = Parameter(prefix + ".b_i", Tensor({hidden}, 0.0));
  b_forget = Parameter(prefix + ".b_f", Tensor({hidden}, 1.0));
  b_output = Parameter(prefix + ".b_o", Tensor({hidden}, 0.0));
  b_cell = Parameter(prefix + ".b_g", Tensor({hidden}, 0.0));
}

std::vector<Parameter*> LstmCell::parameters() {
  return {&w_input, &w_forget, &w_output, &w_cell, &b_input, &b_forget, &b_output, &b_cell};
}

const Tensor& Var::value() const { return graph_->val(id_); }

// ---------------------------------------------------------------------------

const Tensor& Graph::val(std::int32_t id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param ? n.param->value : n.value;
}

Tensor& Graph::grad(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param) return n.param->gradient;
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

bool Graph::has_grad(std::int32_t id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param != nullptr || !n.grad.empty();
}

void Graph::check(Var v) const {
  if (v.graph_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "variable does not belong to this graph");
  }
}

Var Graph::push(Tensor value, bool requires_grad, Backward backward) {
#ifndef NDEBUG
  if (!value.all_finite()) throw Error(ErrorCode::kNumericDivergence, "non-finite value in forward pass");
#endif
  Node n;
  n.value = std::move(value);
  n.requires_grad = recording_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

void Graph::clear() {
  nodes_.clear();
  param_nodes_.clear();
  differentiated_ = false;
}

Var Graph::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Graph::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.param = &p;
  n.requires_grad = recording_;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::int32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Graph::embedding_sum(Parameter& table, std::span<const int> rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptySequence, "embedding_sum of no rows");
  const std::size_t d = table.value.cols();
  Tensor out({d});
  for (int r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= table.value.rows()) {
      throw Error(ErrorCode::kInvalidIndex, table.name + ": row " + std::to_string(r) + " out of range");
    }
    const auto src = table.value.row(static_cast<std::size_t>(r));
    for (std::size_t j = 0; j < d; ++j) out[j] += src[j];
  }
  std::vector<int> ids(rows.begin(), rows.end());
  Parameter* tp = &table;
  return push(std::move(out), true, [tp, ids = std::move(ids)](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    for (int r : ids) {
      auto dst = tp->gradient.row(static_cast<std::size_t>(r));
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += dy[j];
    }
  });
}

Var Graph::matvec(Var x, Var w) {
  check(x);
  check(w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 1 || wv.rank() != 2 || xv.size() != wv.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "matvec: " + shape_string(xv.shape()) + " . " + shape_string(wv.shape()));
  }
  Tensor out = matmul(xv, wv);
  const bool rg = needs(x) || needs(w);
  return push(std::move(out), rg, [x, w](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    const Tensor& xv = g.val(x.id_);
    const Tensor& wv = g.val(w.id_);
    const std::size_t n = wv.rows(), m = wv.cols();
    if (g.needs(x)) {
      Tensor& dx = g.grad(x.id_);
      for (std::size_t r = 0; r < n; ++r) {
        const double* wr = wv.raw() + r * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += wr[j] * dy[j];
        dx[r] += acc;
      }
    }
    if (g.needs(w)) {
      Tensor& dw = g.grad(w.id_);
      for (std::size_t r = 0; r < n; ++r) {
        const double xr = xv[r];
        if (xr == 0.0) continue;
        double* dwr = dw.raw() + r * m;
        for (std::size_t j = 0; j < m; ++j) dwr[j] += xr * dy[j];
      }
    }
  });
}

Var Graph::add(Var a, Var b) {
  check(a);
  check(b);
  Tensor out = code2seq::add(a.value(), b.value());
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    for (Var v : {a, b}) {
      if (!g.needs(v)) continue;
      Tensor& dv = g.grad(v.id_);
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += dy[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  check(a);
  check(b);
  Tensor out = code2seq::mul(a.value(), b.value());
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    if (g.needs(a)) {
      Tensor& da = g.grad(a.id_);
      const Tensor& bv = g.val(b.id_);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv[i];
    }
    if (g.needs(b)) {
      Tensor& db = g.grad(b.id_);
      const Tensor& av = g.val(a.id_);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av[i];
    }
  });
}

Var Graph::mask(Var a, const Tensor& m) {
  check(a);
  Tensor out = code2seq::mul(a.value(), m);
  return push(std::move(out), needs(a), [a, m](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id_);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * m[i];
  });
}

Var Graph::scale(Var a, double s) {
  check(a);
  Tensor out = a.value();
  for (auto& x : out.data()) x *= s;
  return push(std::move(out), needs(a), [a, s](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id_);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * s;
  });
}

Var Graph::tanh(Var a) {
  check(a);
  Tensor out = code2seq::tanh(a.value());
  return push(std::move(out), needs(a), [a](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    const Tensor& y = g.val(self);
    Tensor& da = g.grad(a.id_);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var Graph::concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "concat of nothing");
  std::vector<Tensor> values;
  bool rg = false;
  for (Var v : parts) {
    check(v);
    values.push_back(v.value());
    rg = rg || needs(v);
  }
  Tensor out = code2seq::concat(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), rg, [inputs = std::move(inputs)](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    std::size_t offset = 0;
    for (Var v : inputs) {
      const std::size_t n = g.val(v.id_).size();
      if (g.needs(v)) {
        Tensor& dv = g.grad(v.id_);
        for (std::size_t i = 0; i < n; ++i) dv[i] += dy[offset + i];
      }
      offset += n;
    }
  });
}

Var Graph::sum(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kEmptySequence, "sum of nothing");
  check(parts[0]);
  Tensor out = parts[0].value();
  bool rg = needs(parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    check(parts[i]);
    const Tensor& v = parts[i].value();
    if (v.shape() != out.shape()) throw Error(ErrorCode::kShapeMismatch, "sum: operands differ in shape");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[j];
    rg = rg || needs(parts[i]);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), rg, [inputs = std::move(inputs)](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    for (Var v : inputs) {
      if (!g.needs(v)) continue;
      Tensor& dv = g.grad(v.id_);
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += dy[i];
    }
  });
}

Var Graph::mean(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kEmptySequence, "mean of nothing");
  return scale(sum(parts), 1.0 / static_cast<double>(parts.size()));
}

Var Graph::pad(Var a, std::size_t size) {
  check(a);
  const Tensor& av = a.value();
  if (av.rank() != 1 || size < av.size()) {
    throw Error(ErrorCode::kShapeMismatch, "pad: cannot extend " + shape_string(av.shape()) + " to " + std::to_string(size));
  }
  if (size == av.size()) return a;
  Tensor out({size});
  std::copy(av.data().begin(), av.data().end(), out.data().begin());
  return push(std::move(out), needs(a), [a](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id_);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
  });
}

Var Graph::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptySequence, "stack_rows of nothing");
  const std::size_t d = rows[0].value().size();
  Tensor out({rows.size(), d});
  bool rg = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    check(rows[i]);
    const Tensor& r = rows[i].value();
    if (r.rank() != 1 || r.size() != d) throw Error(ErrorCode::kShapeMismatch, "stack_rows: ragged rows");
    std::copy(r.data().begin(), r.data().end(), out.row(i).begin());
    rg = rg || needs(rows[i]);
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return push(std::move(out), rg, [inputs = std::move(inputs)](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!g.needs(inputs[i])) continue;
      Tensor& dv = g.grad(inputs[i].id_);
      const auto src = dy.row(i);
      for (std::size_t j = 0; j < dv.size(); ++j) dv[j] += src[j];
    }
  });
}

Var Graph::row_scores(Var z, Var u) {
  check(z);
  check(u);
  const Tensor& zv = z.value();
  const Tensor& uv = u.value();
  if (zv.rank() != 2 || uv.rank() != 1 || zv.cols() != uv.size()) {
    throw Error(ErrorCode::kShapeMismatch, "row_scores: " + shape_string(zv.shape()) + " . " + shape_string(uv.shape()));
  }
  Tensor out({zv.rows()});
  for (std::size_t i = 0; i < zv.rows(); ++i) {
    const auto r = zv.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * uv[j];
    out[i] = acc;
  }
  return push(std::move(out), needs(z) || needs(u), [z, u](Graph& g, std::int32_t self) {
    const Tensor& ds = g.grad(self);
    const Tensor& zv = g.val(z.id_);
    const Tensor& uv = g.val(u.id_);
    if (g.needs(u)) {
      Tensor& du = g.grad(u.id_);
      for (std::size_t i = 0; i < zv.rows(); ++i) {
        const auto r = zv.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) du[j] += ds[i] * r[j];
      }
    }
    if (g.needs(z)) {
      Tensor& dz = g.grad(z.id_);
      for (std::size_t i = 0; i < zv.rows(); ++i) {
        auto r = dz.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += ds[i] * uv[j];
      }
    }
  });
}

Var Graph::weighted_rows(Var w, Var z) {
  check(w);
  check(z);
  const Tensor& wv = w.value();
  const Tensor& zv = z.value();
  if (zv.rank() != 2 || wv.rank() != 1 || zv.rows() != wv.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weighted_rows: " + shape_string(wv.shape()) + " . " + shape_string(zv.shape()));
  }
  Tensor out({zv.cols()});
  for (std::size_t i = 0; i < zv.rows(); ++i) {
    const auto r = zv.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += wv[i] * r[j];
  }
  return push(std::move(out), needs(w) || needs(z), [w, z](Graph& g, std::int32_t self) {
    const Tensor& dc = g.grad(self);
    const Tensor& wv = g.val(w.id_);
    const Tensor& zv = g.val(z.id_);
    if (g.needs(w)) {
      Tensor& dw = g.grad(w.id_);
      for (std::size_t i = 0; i < zv.rows(); ++i) {
        const auto r = zv.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) acc += dc[j] * r[j];
        dw[i] += acc;
      }
    }
    if (g.needs(z)) {
      Tensor& dz = g.grad(z.id_);
      for (std::size_t i = 0; i < zv.rows(); ++i) {
        auto r = dz.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += wv[i] * dc[j];
      }
    }
  });
}

Var Graph::masked_softmax(Var scores, std::span<const std::uint8_t> valid) {
  check(scores);
  const Tensor& sv = scores.value();
  if (sv.rank() != 1) throw Error(ErrorCode::kShapeMismatch, "masked_softmax expects a vector");
  if (!valid.empty() && valid.size() != sv.size()) {
    throw Error(ErrorCode::kShapeMismatch, "masked_softmax: mask length differs from scores");
  }
  auto ok = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sv.size(); ++i) {
    if (!ok(i)) continue;
    if (std::isnan(sv[i])) throw Error(ErrorCode::kNumericDivergence, "attention score is NaN");
    mx = std::max(mx, sv[i]);
  }
  if (mx == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::kAllMasked, "every attention candidate is masked");
  }
  Tensor out({sv.size()});
  double total = 0.0;
  for (std::size_t i = 0; i < sv.size(); ++i) {
    if (!ok(i)) continue;
    out[i] = std::exp(sv[i] - mx);
    total += out[i];
  }
  for (auto& p : out.data()) p /= total;
  return push(std::move(out), needs(scores), [scores](Graph& g, std::int32_t self) {
    const Tensor& dy = g.grad(self);
    const Tensor& p = g.val(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * dy[i];
    Tensor& ds = g.grad(scores.id_);
    for (std::size_t i = 0; i < p.size(); ++i) ds[i] += p[i] * (dy[i] - dot);
  });
}

Var Graph::softmax_cross_entropy(Var logits, std::size_t target) {
  check(logits);
  const Tensor& lv = logits.value();
  if (lv.rank() != 1) throw Error(ErrorCode::kShapeMismatch, "softmax_cross_entropy expects a vector");
  if (target >= lv.size()) {
    throw Error(ErrorCode::kInvalidIndex, "target " + std::to_string(target) + " outside " + std::to_string(lv.size()) + " classes");
  }
  Tensor probs = softmax(lv);
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : lv.data()) mx = std::max(mx, x);
  double total = 0.0;
  for (double x : lv.data()) total += std::exp(x - mx);
  const double loss = mx + std::log(total) - lv[target];
  return push(Tensor({1}, loss), needs(logits),
              [logits, target, probs = std::move(probs)](Graph& g, std::int32_t self) {
                const double dy = g.grad(self)[0];
                Tensor& dl = g.grad(logits.id_);
                for (std::size_t i = 0; i < probs.size(); ++i) {
                  dl[i] += dy * (probs[i] - (i == target ? 1.0 : 0.0));
                }
              });
}

LstmState Graph::lstm_step(LstmCell& cell, Var x, LstmState prev, const Tensor* recurrent_mask) {
  check(x);
  check(prev.h);
  check(prev.c);
  const std::size_t in = cell.input_size, hid = cell.hidden_size;
  const Tensor& xv = x.value();
  const Tensor& hv = prev.h.value();
  const Tensor& cv = prev.c.value();
  if (xv.size() != in || hv.size() != hid || cv.size() != hid) {
    throw Error(ErrorCode::kShapeMismatch, "lstm_step: input " + shape_string(xv.shape()) + ", state " +
                                               shape_string(hv.shape()) + " for cell (" + std::to_string(in) +
                                               ", " + std::to_string(hid) + ")");
  }
  if (recurrent_mask && recurrent_mask->size() != hid) {
    throw Error(ErrorCode::kShapeMismatch, "lstm_step: recurrent mask length differs from hidden size");
  }

  // a = [x ; mask * h_prev]
  Tensor a({in + hid});
  std::copy(xv.data().begin(), xv.data().end(), a.data().begin());
  for (std::size_t j = 0; j < hid; ++j) a[in + j] = hv[j] * (recurrent_mask ? (*recurrent_mask)[j] : 1.0);

  auto gate = [&](const Parameter& w, const Parameter& b) {
    Tensor z = matmul(a, w.value);
    for (std::size_t j = 0; j < hid; ++j) z[j] += b.value[j];
    return z;
  };
  Tensor i = sigmoid(gate(cell.w_input, cell.b_input));
  Tensor f = sigmoid(gate(cell.w_forget, cell.b_forget));
  Tensor o = sigmoid(gate(cell.w_output, cell.b_output));
  Tensor gc = code2seq::tanh(gate(cell.w_cell, cell.b_cell));
  Tensor c({hid});
  Tensor tc({hid});
  Tensor h({hid});
  for (std::size_t j = 0; j < hid; ++j) {
    c[j] = f[j] * cv[j] + i[j] * gc[j];
    tc[j] = bounded_tanh(c[j]);
    h[j] = o[j] * tc[j];
  }

  // Cell weights are always trainable, so both outputs require gradients.
  const bool rg = true;
  // The cell state node is pushed first; its gradient is complete by the time
  // the hidden-state node (pushed after it) runs the combined backward.
  Var c_var = push(std::move(c), rg, [](Graph&, std::int32_t) {});
  const std::int32_t c_id = c_var.id_;
  Tensor mask_copy = recurrent_mask ? *recurrent_mask : Tensor();
  LstmCell* cp = &cell;
  Var h_var = push(
      std::move(h), rg,
      [cp, x, prev, c_id, a = std::move(a), i = std::move(i), f = std::move(f), o = std::move(o),
       gc = std::move(gc), tc = std::move(tc), mask_copy = std::move(mask_copy)](Graph& g, std::int32_t self) {
        const std::size_t in = cp->input_size, hid = cp->hidden_size;
        const Tensor& dh = g.grad(self);
        const Tensor* dc_next = g.has_grad(c_id) ? &g.grad(c_id) : nullptr;
        const Tensor& c_prev = g.val(prev.c.id_);

        Tensor dz_i({hid}), dz_f({hid}), dz_o({hid}), dz_g({hid}), dc_prev({hid});
        for (std::size_t j = 0; j < hid; ++j) {
          const double dc = dh[j] * o[j] * (1.0 - tc[j] * tc[j]) + (dc_next ? (*dc_next)[j] : 0.0);
          dz_o[j] = dh[j] * tc[j] * o[j] * (1.0 - o[j]);
          dz_i[j] = dc * gc[j] * i[j] * (1.0 - i[j]);
          dz_f[j] = dc * c_prev[j] * f[j] * (1.0 - f[j]);
          dz_g[j] = dc * i[j] * (1.0 - gc[j] * gc[j]);
          dc_prev[j] = dc * f[j];
        }

        Tensor da({in + hid});
        auto gate_back = [&](Parameter& w, Parameter& b, const Tensor& dz) {
          const std::size_t rows = in + hid;
          for (std::size_t r = 0; r < rows; ++r) {
            const double ar = a[r];
            double* dwr = w.gradient.raw() + r * hid;
            const double* wr = w.value.raw() + r * hid;
            double acc = 0.0;
            for (std::size_t j = 0; j < hid; ++j) {
              dwr[j] += ar * dz[j];
              acc += wr[j] * dz[j];
            }
            da[r] += acc;
          }
          for (std::size_t j = 0; j < hid; ++j) b.gradient[j] += dz[j];
        };
        gate_back(cp->w_input, cp->b_input, dz_i);
        gate_back(cp->w_forget, cp->b_forget, dz_f);
        gate_back(cp->w_output, cp->b_output, dz_o);
        gate_back(cp->w_cell, cp->b_cell, dz_g);

        if (g.needs(x)) {
          Tensor& dx = g.grad(x.id_);
          for (std::size_t r = 0; r < in; ++r) dx[r] += da[r];
        }
        if (g.needs(prev.h)) {
          Tensor& dhp = g.grad(prev.h.id_);
          for (std::size_t j = 0; j < hid; ++j) {
            dhp[j] += da[in + j] * (mask_copy.empty() ? 1.0 : mask_copy[j]);
          }
        }
        if (g.needs(prev.c)) {
          Tensor& dcp = g.grad(prev.c.id_);
          for (std::size_t j = 0; j < hid; ++j) dcp[j] += dc_prev[j];
        }
      });
  return LstmState{h_var, c_var};
}

void Graph::backward(Var loss) {
  check(loss);
  if (!recording_) throw Error(ErrorCode::kGraphReuse, "graph was built without recording");
  if (differentiated_) throw Error(ErrorCode::kGraphReuse, "backward already ran on this graph; clear() it first");
  if (loss.value().size() != 1) throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar loss");
  differentiated_ = true;
  if (!needs(loss)) return;
  grad(loss.id_)[0] += 1.0;
  for (std::int32_t id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || !n.backward || !has_grad(id)) continue;
    n.backward(*this, id);
  }
}

}  // namespace code2seq
