#include "forge/numcore/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "forge/error.hpp"
#include "forge/numcore/ops.hpp"

namespace forge::num {

const Tensor& Var::value() const {
  if (!tape_) throw InvalidArgument("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::parameter(std::string name, Tensor value) {
  nodes_.push_back(Node{std::move(value), std::move(name), true, {}, {}});
  Var v(this, nodes_.size() - 1);
  params_.push_back(v);
  return v;
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.tape() != this) throw InvalidArgument("op mixes Vars from different tapes");
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
    n.inputs.push_back(in.id());
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw InvalidArgument("Var does not belong to this tape");
  return nodes_[v.id()];
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const Tensor& Tape::value(Var v) const { return node(v).value; }

const std::string& Tape::name(Var v) const { return node(v).name; }

void Tape::accumulate(Var target, std::span<const double> grad) {
  const auto& n = node(target);
  if (!n.requires_grad) return;
  if (grad.size() != n.value.size()) {
    throw DimensionError("gradient of size " + std::to_string(grad.size()) + " for value " + n.value.shape_string());
  }
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  auto& g = grads_[target.id()];
  if (g.empty()) {
    g.assign(grad.begin(), grad.end());
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
  }
}

void Tape::backward(Var output) {
  const auto& out = node(output);
  if (out.value.size() != 1) throw DimensionError("backward needs a scalar output, got " + out.value.shape_string());
  grads_.assign(nodes_.size(), {});
  if (!out.requires_grad) return;
  grads_[output.id()] = {1.0};
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.backward || grads_[i].empty()) continue;
    Tensor upstream(n.value.shape(), grads_[i]);
    n.backward(upstream, *this);
  }
}

Tensor Tape::grad(Var v) const {
  const auto& n = node(v);
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return Tensor(n.value.shape(), grads_[v.id()]);
  return Tensor::zeros(n.value.shape());
}

namespace {

Tape& tape_of(Var v) {
  if (!v.valid()) throw InvalidArgument("op on an unbound Var");
  return *v.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  auto& t = tape_of(a);
  Var in[] = {a, b};
  return t.record(num::matmul(a.value(), b.value()), in, [a, b](const Tensor& g, Tape& tp) {
    if (tp.requires_grad(a)) tp.accumulate(a, num::matmul(g, num::transpose(b.value())).data());
    if (tp.requires_grad(b)) tp.accumulate(b, num::matmul(num::transpose(a.value()), g).data());
  });
}

Var add(Var a, Var b) {
  auto& t = tape_of(a);
  Var in[] = {a, b};
  return t.record(num::add(a.value(), b.value()), in, [a, b](const Tensor& g, Tape& tp) {
    tp.accumulate(a, g.data());
    tp.accumulate(b, g.data());
  });
}

Var scale(Var a, double s) {
  auto& t = tape_of(a);
  Var in[] = {a};
  return t.record(num::scale(a.value(), s), in,
                  [a, s](const Tensor& g, Tape& tp) { tp.accumulate(a, num::scale(g, s).data()); });
}

Var hadamard(Var a, Var b) {
  auto& t = tape_of(a);
  Var in[] = {a, b};
  return t.record(num::hadamard(a.value(), b.value()), in, [a, b](const Tensor& g, Tape& tp) {
    if (tp.requires_grad(a)) tp.accumulate(a, num::hadamard(g, b.value()).data());
    if (tp.requires_grad(b)) tp.accumulate(b, num::hadamard(g, a.value()).data());
  });
}

Var sum(Var a) {
  auto& t = tape_of(a);
  Var in[] = {a};
  return t.record(Tensor({1}, {num::sum(a.value())}), in, [a](const Tensor& g, Tape& tp) {
    std::vector<double> d(a.value().size(), g[0]);
    tp.accumulate(a, d);
  });
}

Var weighted_sum(Var a, const Tensor& weights) {
  if (weights.shape() != a.shape()) {
    throw DimensionError("weighted_sum: " + a.value().shape_string() + " vs weights " + weights.shape_string());
  }
  auto& t = tape_of(a);
  Var in[] = {a};
  return t.record(Tensor({1}, {num::sum(num::hadamard(a.value(), weights))}), in,
                  [a, weights](const Tensor& g, Tape& tp) { tp.accumulate(a, num::scale(weights, g[0]).data()); });
}

Var softmax_last(Var x) {
  auto& t = tape_of(x);
  Var in[] = {x};
  Tensor y = num::softmax_last(x.value());
  return t.record(y, in, [x, y](const Tensor& g, Tape& tp) {
    const std::size_t n = y.shape().back();
    std::vector<double> d(y.size());
    for (std::size_t base = 0; base < y.size(); base += n) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < n; ++j) d[base + j] = y[base + j] * (g[base + j] - dot);
    }
    tp.accumulate(x, d);
  });
}

Var bilinear_resize(Var grid, std::size_t target_h, std::size_t target_w) {
  auto& t = tape_of(grid);
  Var in[] = {grid};
  Tensor y = num::bilinear_resize(grid.value(), target_h, target_w);
  return t.record(std::move(y), in, [grid, target_h, target_w](const Tensor& g, Tape& tp) {
    const auto& src = grid.value();
    const std::size_t w = src.dim(1), c = src.dim(2);
    const auto rows = half_pixel_taps(src.dim(0), target_h);
    const auto cols = half_pixel_taps(w, target_w);
    std::vector<double> d(src.size(), 0.0);
    for (std::size_t y = 0; y < target_h; ++y) {
      for (std::size_t x = 0; x < target_w; ++x) {
        const auto& ry = rows[y];
        const auto& cx = cols[x];
        const double* up = &g.data()[(y * target_w + x) * c];
        auto scatter = [&](std::size_t r, std::size_t col, double wgt) {
          double* dst = &d[(r * w + col) * c];
          for (std::size_t k = 0; k < c; ++k) dst[k] += wgt * up[k];
        };
        scatter(ry.lo, cx.lo, ry.w_lo * cx.w_lo);
        scatter(ry.lo, cx.hi, ry.w_lo * cx.w_hi);
        scatter(ry.hi, cx.lo, ry.w_hi * cx.w_lo);
        scatter(ry.hi, cx.hi, ry.w_hi * cx.w_hi);
      }
    }
    tp.accumulate(grid, d);
  });
}

Var global_mean_pool(Var grid) {
  auto& t = tape_of(grid);
  Var in[] = {grid};
  return t.record(num::global_mean_pool(grid.value()), in, [grid](const Tensor& g, Tape& tp) {
    const auto& src = grid.value();
    const std::size_t c = src.dim(2), cells = src.dim(0) * src.dim(1);
    std::vector<double> d(src.size());
    for (std::size_t p = 0; p < cells; ++p)
      for (std::size_t k = 0; k < c; ++k) d[p * c + k] = g[k] / static_cast<double>(cells);
    tp.accumulate(grid, d);
  });
}

Var concat_last(Var a, Var b) {
  auto& t = tape_of(a);
  Var in[] = {a, b};
  return t.record(num::concat_last(a.value(), b.value()), in, [a, b](const Tensor& g, Tape& tp) {
    const std::size_t ca = a.shape().back(), cb = b.shape().back();
    const std::size_t rows = a.value().size() / ca;
    std::vector<double> da(a.value().size()), db(b.value().size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < ca; ++k) da[r * ca + k] = g[r * (ca + cb) + k];
      for (std::size_t k = 0; k < cb; ++k) db[r * cb + k] = g[r * (ca + cb) + ca + k];
    }
    tp.accumulate(a, da);
    tp.accumulate(b, db);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  auto& t = tape_of(parts.front());
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (const auto& p : parts) values.push_back(p.value());
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(num::concat_rows(values), inputs, [inputs](const Tensor& g, Tape& tp) {
    std::size_t offset = 0;
    for (const auto& p : inputs) {
      const std::size_t n = p.value().size();
      tp.accumulate(p, g.data().subspan(offset, n));
      offset += n;
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  auto& t = tape_of(a);
  Var in[] = {a};
  return t.record(num::slice_rows(a.value(), begin, count), in, [a, begin](const Tensor& g, Tape& tp) {
    std::vector<double> d(a.value().size(), 0.0);
    std::copy(g.data().begin(), g.data().end(), d.begin() + static_cast<std::ptrdiff_t>(begin * a.value().dim(1)));
    tp.accumulate(a, d);
  });
}

Var repeat_rows(Var row, std::size_t n) {
  auto& t = tape_of(row);
  Var in[] = {row};
  return t.record(num::repeat_rows(row.value(), n), in, [row, n](const Tensor& g, Tape& tp) {
    const std::size_t c = row.value().size();
    std::vector<double> d(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k) d[k] += g[i * c + k];
    tp.accumulate(row, d);
  });
}

Var reshape(Var a, Shape shape) {
  auto& t = tape_of(a);
  Var in[] = {a};
  return t.record(a.value().reshaped(std::move(shape)), in,
                  [a](const Tensor& g, Tape& tp) { tp.accumulate(a, g.data()); });
}

Var add_tiled(Var grid, Var tile) {
  const auto& G = grid.value();
  const auto& P = tile.value();
  if (G.rank() != 3 || P.rank() != 3 || P.dim(0) != P.dim(1) || G.dim(2) != P.dim(2) || G.dim(0) % P.dim(0) != 0 ||
      G.dim(1) % P.dim(1) != 0) {
    throw DimensionError("add_tiled: cannot tile " + P.shape_string() + " over " + G.shape_string());
  }
  const std::size_t h = G.dim(0), w = G.dim(1), c = G.dim(2), m = P.dim(0);
  auto out = G.values();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) out[(y * w + x) * c + k] += P[((y % m) * m + (x % m)) * c + k];
  auto& t = tape_of(grid);
  Var in[] = {grid, tile};
  return t.record(Tensor(G.shape(), std::move(out)), in, [grid, tile, h, w, c, m](const Tensor& g, Tape& tp) {
    tp.accumulate(grid, g.data());
    if (!tp.requires_grad(tile)) return;
    std::vector<double> d(m * m * c, 0.0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t k = 0; k < c; ++k) d[((y % m) * m + (x % m)) * c + k] += g[(y * w + x) * c + k];
    tp.accumulate(tile, d);
  });
}

Var indexed_attention(Var queries, std::span<const Var> keys, std::span<const Var> values,
                      const std::vector<std::vector<KeyRef>>& key_sets, double logit_scale, AttentionTrace* trace) {
  const auto& Q = queries.value();
  if (Q.rank() != 2) throw DimensionError("indexed_attention: queries must be 2-d, got " + Q.shape_string());
  const std::size_t R = Q.dim(0), C = Q.dim(1);
  if (keys.size() != values.size() || keys.empty()) {
    throw DimensionError("indexed_attention: need matching, nonempty key and value sources");
  }
  if (key_sets.size() != R) {
    throw DimensionError("indexed_attention: " + std::to_string(key_sets.size()) + " key sets for " +
                         std::to_string(R) + " queries");
  }
  for (std::size_t s = 0; s < keys.size(); ++s) {
    const auto& K = keys[s].value();
    const auto& V = values[s].value();
    if (K.rank() != 2 || K.dim(1) != C || V.shape() != K.shape()) {
      throw DimensionError("indexed_attention: source " + std::to_string(s) + " keys " + K.shape_string() +
                           " / values " + V.shape_string() + " do not match query width " + std::to_string(C));
    }
  }

  std::vector<std::vector<double>> weights(R);
  std::vector<double> out(R * C, 0.0);
  if (trace) {
    trace->logits.assign(R, {});
    trace->weights.assign(R, {});
  }
  for (std::size_t r = 0; r < R; ++r) {
    const auto& set = key_sets[r];
    if (set.empty()) throw DimensionError("indexed_attention: query " + std::to_string(r) + " has no keys");
    std::vector<double> logits(set.size());
    const double* q = &Q.data()[r * C];
    for (std::size_t j = 0; j < set.size(); ++j) {
      const auto& ref = set[j];
      if (ref.source >= keys.size() || ref.row >= keys[ref.source].value().dim(0)) {
        throw DimensionError("indexed_attention: key reference out of range for query " + std::to_string(r));
      }
      const double* k = &keys[ref.source].value().data()[ref.row * C];
      double dot = 0.0;
      for (std::size_t c = 0; c < C; ++c) dot += q[c] * k[c];
      logits[j] = logit_scale * dot;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(set.size());
    double z = 0.0;
    for (std::size_t j = 0; j < set.size(); ++j) {
      w[j] = std::exp(logits[j] - mx);
      z += w[j];
    }
    for (auto& v : w) v /= z;
    for (std::size_t j = 0; j < set.size(); ++j) {
      const double* v = &values[set[j].source].value().data()[set[j].row * C];
      for (std::size_t c = 0; c < C; ++c) out[r * C + c] += w[j] * v[c];
    }
    if (trace) {
      trace->logits[r] = logits;
      trace->weights[r] = w;
    }
    weights[r] = std::move(w);
  }

  std::vector<Var> inputs{queries};
  inputs.insert(inputs.end(), keys.begin(), keys.end());
  inputs.insert(inputs.end(), values.begin(), values.end());
  std::vector<Var> key_vars(keys.begin(), keys.end()), value_vars(values.begin(), values.end());
  auto& t = tape_of(queries);
  return t.record(
      Tensor({R, C}, std::move(out)), inputs,
      [queries, key_vars, value_vars, key_sets, weights = std::move(weights), logit_scale, R, C](const Tensor& g,
                                                                                                  Tape& tp) {
        const auto& Q = queries.value();
        std::vector<double> dq(R * C, 0.0);
        std::vector<std::vector<double>> dk(key_vars.size()), dv(value_vars.size());
        for (std::size_t s = 0; s < key_vars.size(); ++s) {
          dk[s].assign(key_vars[s].value().size(), 0.0);
          dv[s].assign(value_vars[s].value().size(), 0.0);
        }
        for (std::size_t r = 0; r < R; ++r) {
          const auto& set = key_sets[r];
          const auto& w = weights[r];
          const double* gr = &g.data()[r * C];
          const double* q = &Q.data()[r * C];
          // d weight_j = g . v_j ; softmax backward ; logits = scale * q . k_j
          std::vector<double> dw(set.size());
          double dot = 0.0;
          for (std::size_t j = 0; j < set.size(); ++j) {
            const double* v = &value_vars[set[j].source].value().data()[set[j].row * C];
            double acc = 0.0;
            for (std::size_t c = 0; c < C; ++c) acc += gr[c] * v[c];
            dw[j] = acc;
            dot += acc * w[j];
          }
          for (std::size_t j = 0; j < set.size(); ++j) {
            const auto& ref = set[j];
            const double dlogit = w[j] * (dw[j] - dot) * logit_scale;
            const double* k = &key_vars[ref.source].value().data()[ref.row * C];
            double* dkr = &dk[ref.source][ref.row * C];
            double* dvr = &dv[ref.source][ref.row * C];
            for (std::size_t c = 0; c < C; ++c) {
              dq[r * C + c] += dlogit * k[c];
              dkr[c] += dlogit * q[c];
              dvr[c] += w[j] * gr[c];
            }
          }
        }
        tp.accumulate(queries, dq);
        for (std::size_t s = 0; s < key_vars.size(); ++s) {
          tp.accumulate(key_vars[s], dk[s]);
          tp.accumulate(value_vars[s], dv[s]);
        }
      });
}

}  // namespace forge::num
