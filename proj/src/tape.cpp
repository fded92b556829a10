#include "imgbk/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "imgbk/errors.hpp"
#include "imgbk/parallel.hpp"

namespace imgbk {

namespace {

double softplus(double x) {
  // log(1 + e^x) without overflow
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

ValueId Tape::push(Tensor value, std::function<void(Tape&)> vjp, const char* op,
                   std::initializer_list<ValueId> parents) {
  if (!all_finite(value)) throw NumericalError(std::string(op) + ": non-finite output");
  bool needs = parents.size() == 0;  // leaves default to tracked
  for (ValueId parent : parents) needs = needs || needs_grad(parent);
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(vjp), needs});
  return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::leaf(Tensor value) { return push(std::move(value), nullptr, "leaf"); }

ValueId Tape::constant(Tensor value) {
  ValueId id = push(std::move(value), nullptr, "constant");
  nodes_.back().needs_grad = false;
  return id;
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

const Tensor& Tape::grad(ValueId id) const {
  if (!backward_done_) throw std::logic_error("Tape::grad: backward has not run");
  return nodes_[static_cast<std::size_t>(id)].grad;
}

void Tape::backward(ValueId root) {
  const Tensor& out = value(root);
  if (out.rows() != 1 || out.cols() != 1)
    throw std::invalid_argument("Tape::backward: root must be a 1x1 scalar");
  for (auto& node : nodes_) {
    node.grad = Tensor(node.value.rows(), node.value.cols());
  }
  grad_mut(root)(0, 0) = 1.0;
  for (ValueId id = root; id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.vjp && node.needs_grad) node.vjp(*this);
  }
  backward_done_ = true;
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  Tensor out = imgbk::matmul(value(a), value(b));
  ValueId id = push(std::move(out), nullptr, "matmul", {a, b});
  nodes_.back().vjp = [a, b, id](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    const std::int64_t p = av.rows(), q = av.cols(), r = bv.cols();
    // ga += gy . b^T
    if (t.needs_grad(a))
    parallel_for(0, p, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        for (std::int64_t k = 0; k < q; ++k) {
          double acc = 0.0;
          const double* gyi = gy.data() + i * r;
          const double* bk = bv.data() + k * r;
          for (std::int64_t j = 0; j < r; ++j) acc += gyi[j] * bk[j];
          ga(i, k) += acc;
        }
      }
    });
    // gb += a^T . gy
    if (t.needs_grad(b))
    parallel_for(0, q, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t k = lo; k < hi; ++k) {
        double* gbk = gb.data() + k * r;
        for (std::int64_t i = 0; i < p; ++i) {
          const double aik = av(i, k);
          if (aik == 0.0) continue;
          const double* gyi = gy.data() + i * r;
          for (std::int64_t j = 0; j < r; ++j) gbk[j] += aik * gyi[j];
        }
      }
    });
  };
  return id;
}

ValueId Tape::add(ValueId a, ValueId b) {
  ValueId id = push(imgbk::add(value(a), value(b)), nullptr, "add", {a, b});
  nodes_.back().vjp = [a, b, id](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    const bool wa = t.needs_grad(a), wb = t.needs_grad(b);
    for (std::int64_t i = 0; i < gy.size(); ++i) {
      if (wa) ga.data()[i] += gy.data()[i];
      if (wb) gb.data()[i] += gy.data()[i];
    }
  };
  return id;
}

ValueId Tape::scale(ValueId a, double c) {
  ValueId id = push(imgbk::scale(value(a), c), nullptr, "scale", {a});
  nodes_.back().vjp = [a, c, id](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    for (std::int64_t i = 0; i < gy.size(); ++i) ga.data()[i] += c * gy.data()[i];
  };
  return id;
}

ValueId Tape::tanh(ValueId a) {
  ValueId id = push(tanh_map(value(a)), nullptr, "tanh", {a});
  nodes_.back().vjp = [a, id](Tape& t) {
    const Tensor& y = t.value(id);
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    for (std::int64_t i = 0; i < gy.size(); ++i)
      ga.data()[i] += (1.0 - y.data()[i] * y.data()[i]) * gy.data()[i];
  };
  return id;
}

ValueId Tape::sigmoid(ValueId a) {
  ValueId id = push(sigmoid_map(value(a)), nullptr, "sigmoid", {a});
  nodes_.back().vjp = [a, id](Tape& t) {
    const Tensor& y = t.value(id);
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    for (std::int64_t i = 0; i < gy.size(); ++i)
      ga.data()[i] += y.data()[i] * (1.0 - y.data()[i]) * gy.data()[i];
  };
  return id;
}

ValueId Tape::concat_cols(ValueId a, ValueId b) {
  ValueId id = push(imgbk::concat_cols(value(a), value(b)), nullptr, "concat_cols", {a, b});
  nodes_.back().vjp = [a, b, id](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    Tensor& gb = t.grad_mut(b);
    const std::int64_t ca = ga.cols(), cb = gb.cols();
    for (std::int64_t i = 0; i < gy.rows(); ++i) {
      for (std::int64_t j = 0; j < ca; ++j) ga(i, j) += gy(i, j);
      for (std::int64_t j = 0; j < cb; ++j) gb(i, j) += gy(i, ca + j);
    }
  };
  return id;
}

ValueId Tape::select_rows(ValueId a, std::vector<std::int64_t> rows) {
  ValueId id = push(imgbk::select_rows(value(a), rows), nullptr, "select_rows", {a});
  nodes_.back().vjp = [a, id, rows = std::move(rows)](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::int64_t src = static_cast<std::int64_t>(r);
      for (std::int64_t j = 0; j < gy.cols(); ++j) ga(rows[r], j) += gy(src, j);
    }
  };
  return id;
}

ValueId Tape::log_softmax_rows(ValueId a) {
  ValueId id = push(imgbk::log_softmax_rows(value(a)), nullptr, "log_softmax_rows", {a});
  nodes_.back().vjp = [a, id](Tape& t) {
    const Tensor& y = t.value(id);  // log-probabilities
    const Tensor& gy = t.grad_mut(id);
    Tensor& ga = t.grad_mut(a);
    for (std::int64_t i = 0; i < y.rows(); ++i) {
      double gsum = 0.0;
      for (std::int64_t j = 0; j < y.cols(); ++j) gsum += gy(i, j);
      for (std::int64_t j = 0; j < y.cols(); ++j)
        ga(i, j) += gy(i, j) - std::exp(y(i, j)) * gsum;
    }
  };
  return id;
}

ValueId Tape::sym_norm_aggregate(ValueId h, const Graph& g) {
  const Tensor& hv = value(h);
  if (hv.rows() != g.n_nodes) throw std::invalid_argument("sym_norm_aggregate: rows != n_nodes");
  auto inv_sqrt = std::make_shared<std::vector<double>>(static_cast<std::size_t>(g.n_nodes));
  for (std::int64_t i = 0; i < g.n_nodes; ++i)
    (*inv_sqrt)[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));

  auto apply = [&g, inv_sqrt](const Tensor& x, Tensor& out, bool accumulate) {
    const std::int64_t d = x.cols();
    parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const double si = (*inv_sqrt)[static_cast<std::size_t>(i)];
        double* oi = out.data() + i * d;
        const double self_w = si * si;
        const double* xi = x.data() + i * d;
        if (!accumulate) {
          for (std::int64_t c = 0; c < d; ++c) oi[c] = self_w * xi[c];
        } else {
          for (std::int64_t c = 0; c < d; ++c) oi[c] += self_w * xi[c];
        }
        for (std::int32_t j : g.neighbors(i)) {
          const double w = si * (*inv_sqrt)[static_cast<std::size_t>(j)];
          const double* xj = x.data() + j * d;
          for (std::int64_t c = 0; c < d; ++c) oi[c] += w * xj[c];
        }
      }
    });
  };

  Tensor out(hv.rows(), hv.cols());
  apply(hv, out, false);
  ValueId id = push(std::move(out), nullptr, "sym_norm_aggregate", {h});
  nodes_.back().vjp = [h, id, apply](Tape& t) {
    // The operator is symmetric, so the VJP applies it to the output grad.
    apply(t.grad_mut(id), t.grad_mut(h), true);
  };
  return id;
}

ValueId Tape::gated_neighbor_mean(ValueId h, ValueId alpha, const Graph& g) {
  const Tensor& hv = value(h);
  const Tensor& av = value(alpha);
  if (hv.rows() != g.n_nodes) throw std::invalid_argument("gated_neighbor_mean: rows != n_nodes");
  if (av.rows() != g.n_edge_directions() || av.cols() != 1)
    throw std::invalid_argument("gated_neighbor_mean: alpha must be E x 1");

  const std::int64_t d = hv.cols();
  Tensor out(g.n_nodes, d);
  parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const std::int64_t k = g.degree(i);
      if (k == 0) continue;  // empty neighborhood -> zero row
      double* oi = out.data() + i * d;
      for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
        const double a = av.data()[e];
        const double* hj = hv.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * d;
        for (std::int64_t c = 0; c < d; ++c) oi[c] += a * hj[c];
      }
      const double inv = 1.0 / static_cast<double>(k);
      for (std::int64_t c = 0; c < d; ++c) oi[c] *= inv;
    }
  });

  ValueId id = push(std::move(out), nullptr, "gated_neighbor_mean", {h, alpha});
  nodes_.back().vjp = [h, alpha, id, &g, d](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    const Tensor& hv2 = t.value(h);
    const Tensor& av2 = t.value(alpha);
    Tensor& gh = t.grad_mut(h);
    Tensor& galpha = t.grad_mut(alpha);
    // d/d h[j]: gather via reverse slots so each output row is written once.
    if (t.needs_grad(h))
    parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t j = lo; j < hi; ++j) {
        double* gj = gh.data() + j * d;
        for (std::int64_t e = g.csr_offsets[j]; e < g.csr_offsets[j + 1]; ++e) {
          const std::int64_t i = g.csr_neighbors[e];
          const std::int64_t fwd = g.csr_reverse_slot[e];  // slot of (i -> j)
          const double w = av2.data()[fwd] / static_cast<double>(g.degree(i));
          const double* gyi = gy.data() + i * d;
          for (std::int64_t c = 0; c < d; ++c) gj[c] += w * gyi[c];
        }
      }
    });
    // d/d alpha_e = (gy[i] . h[j]) / |N(i)|
    if (t.needs_grad(alpha))
    parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const std::int64_t k = g.degree(i);
        if (k == 0) continue;
        const double inv = 1.0 / static_cast<double>(k);
        const double* gyi = gy.data() + i * d;
        for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
          const double* hj = hv2.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * d;
          double acc = 0.0;
          for (std::int64_t c = 0; c < d; ++c) acc += gyi[c] * hj[c];
          galpha.data()[e] += acc * inv;
        }
      }
    });
  };
  return id;
}

ValueId Tape::bikernel_edge_aggregate(ValueId h, ValueId ws, ValueId wd, ValueId alpha,
                                      const Graph& g) {
  const Tensor& hv = value(h);
  const Tensor& wsv = value(ws);
  const Tensor& wdv = value(wd);
  const Tensor& av = value(alpha);
  if (hv.rows() != g.n_nodes) throw std::invalid_argument("bikernel_edge_aggregate: rows != n_nodes");
  if (wsv.rows() != hv.cols() || !wsv.same_shape(wdv))
    throw std::invalid_argument("bikernel_edge_aggregate: kernel shape mismatch");
  if (av.rows() != g.n_edge_directions() || av.cols() != 1)
    throw std::invalid_argument("bikernel_edge_aggregate: alpha must be E x 1");

  const std::int64_t din = hv.cols();
  const std::int64_t dout = wsv.cols();

  Tensor out(g.n_nodes, dout);
  parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const std::int64_t k = g.degree(i);
      if (k == 0) continue;
      double* oi = out.data() + i * dout;
      for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
        const double a = av.data()[e];
        const double b = 1.0 - a;
        const double* hj = hv.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * din;
        // message = a * (h_j ws) + (1 - a) * (h_j wd), formed per edge
        for (std::int64_t r = 0; r < din; ++r) {
          const double x = hj[r];
          if (x == 0.0) continue;
          const double* wsr = wsv.data() + r * dout;
          const double* wdr = wdv.data() + r * dout;
          for (std::int64_t c = 0; c < dout; ++c) oi[c] += x * (a * wsr[c] + b * wdr[c]);
        }
      }
      const double inv = 1.0 / static_cast<double>(k);
      for (std::int64_t c = 0; c < dout; ++c) oi[c] *= inv;
    }
  });

  ValueId id = push(std::move(out), nullptr, "bikernel_edge_aggregate", {h, ws, wd, alpha});
  nodes_.back().vjp = [h, ws, wd, alpha, id, &g, din, dout](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    const Tensor& hv2 = t.value(h);
    const Tensor& wsv2 = t.value(ws);
    const Tensor& wdv2 = t.value(wd);
    const Tensor& av2 = t.value(alpha);
    Tensor& gh = t.grad_mut(h);
    Tensor& gws = t.grad_mut(ws);
    Tensor& gwd = t.grad_mut(wd);
    Tensor& galpha = t.grad_mut(alpha);

    // Per-edge products mirror the forward pass; the kernels are re-applied
    // edge by edge, matching the edge-materialized cost of the learned path.
    // h grad, gathered over incident edges via reverse slots.
    if (t.needs_grad(h))
    parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t j = lo; j < hi; ++j) {
        double* gj = gh.data() + j * din;
        for (std::int64_t e = g.csr_offsets[j]; e < g.csr_offsets[j + 1]; ++e) {
          const std::int64_t i = g.csr_neighbors[e];
          const std::int64_t fwd = g.csr_reverse_slot[e];
          const double a = av2.data()[fwd];
          const double b = 1.0 - a;
          const double inv = 1.0 / static_cast<double>(g.degree(i));
          const double* gyi = gy.data() + i * dout;
          for (std::int64_t r = 0; r < din; ++r) {
            const double* wsr = wsv2.data() + r * dout;
            const double* wdr = wdv2.data() + r * dout;
            double acc = 0.0;
            for (std::int64_t c = 0; c < dout; ++c) acc += gyi[c] * (a * wsr[c] + b * wdr[c]);
            gj[r] += inv * acc;
          }
        }
      }
    });
    // alpha grad: ((h_j ws - h_j wd) . gy[i]) / |N(i)|
    if (t.needs_grad(alpha))
    parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const std::int64_t k = g.degree(i);
        if (k == 0) continue;
        const double inv = 1.0 / static_cast<double>(k);
        const double* gyi = gy.data() + i * dout;
        for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
          const double* hj = hv2.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * din;
          double acc = 0.0;
          for (std::int64_t r = 0; r < din; ++r) {
            const double x = hj[r];
            if (x == 0.0) continue;
            const double* wsr = wsv2.data() + r * dout;
            const double* wdr = wdv2.data() + r * dout;
            double row = 0.0;
            for (std::int64_t c = 0; c < dout; ++c) row += gyi[c] * (wsr[c] - wdr[c]);
            acc += x * row;
          }
          galpha.data()[e] += acc * inv;
        }
      }
    });
    // kernel grads: gws += sum_e (a_e / k_i) h_j^T gy[i]; serial edge walk.
    if (t.needs_grad(ws) || t.needs_grad(wd))
    for (std::int64_t i = 0; i < g.n_nodes; ++i) {
      const std::int64_t k = g.degree(i);
      if (k == 0) continue;
      const double inv = 1.0 / static_cast<double>(k);
      const double* gyi = gy.data() + i * dout;
      for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
        const double a = av2.data()[e] * inv;
        const double b = (1.0 - av2.data()[e]) * inv;
        const double* hj = hv2.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * din;
        for (std::int64_t r = 0; r < din; ++r) {
          const double x = hj[r];
          if (x == 0.0) continue;
          double* gwsr = gws.data() + r * dout;
          double* gwdr = gwd.data() + r * dout;
          const double xa = x * a;
          const double xb = x * b;
          for (std::int64_t c = 0; c < dout; ++c) {
            gwsr[c] += xa * gyi[c];
            gwdr[c] += xb * gyi[c];
          }
        }
      }
    }
  };
  return id;
}

ValueId Tape::edge_gate_logits(ValueId h, ValueId wg, const Graph& g) {
  const Tensor& hv = value(h);
  const Tensor& wgv = value(wg);
  const std::int64_t d = hv.cols();
  if (hv.rows() != g.n_nodes) throw std::invalid_argument("edge_gate_logits: rows != n_nodes");
  if (wgv.rows() != 2 * d || wgv.cols() != 1)
    throw std::invalid_argument("edge_gate_logits: wg must be (2d x 1)");

  Tensor out(g.n_edge_directions(), 1);
  parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const double* hi_ = hv.data() + i * d;
      for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
        const double* hj = hv.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * d;
        double acc = 0.0;
        for (std::int64_t r = 0; r < d; ++r) acc += hi_[r] * wgv.data()[r];
        for (std::int64_t r = 0; r < d; ++r) acc += hj[r] * wgv.data()[d + r];
        out.data()[e] = acc;
      }
    }
  });

  ValueId id = push(std::move(out), nullptr, "edge_gate_logits", {h, wg});
  nodes_.back().vjp = [h, wg, id, &g, d](Tape& t) {
    const Tensor& gy = t.grad_mut(id);
    const Tensor& hv2 = t.value(h);
    const Tensor& wgv2 = t.value(wg);
    Tensor& gh = t.grad_mut(h);
    Tensor& gwg = t.grad_mut(wg);
    // h grad: source part from own row slots, target part via reverse slots.
    if (t.needs_grad(h))
    parallel_for(0, g.n_nodes, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        double* gi = gh.data() + i * d;
        for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
          const double ge_src = gy.data()[e];                       // edge (i -> j)
          const double ge_dst = gy.data()[g.csr_reverse_slot[e]];   // edge (j -> i)
          for (std::int64_t r = 0; r < d; ++r)
            gi[r] += ge_src * wgv2.data()[r] + ge_dst * wgv2.data()[d + r];
        }
      }
    });
    if (t.needs_grad(wg)) {
      for (std::int64_t i = 0; i < g.n_nodes; ++i) {
        const double* hi_ = hv2.data() + i * d;
        for (std::int64_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e) {
          const double ge = gy.data()[e];
          if (ge == 0.0) continue;
          const double* hj = hv2.data() + static_cast<std::int64_t>(g.csr_neighbors[e]) * d;
          for (std::int64_t r = 0; r < d; ++r) {
            gwg.data()[r] += ge * hi_[r];
            gwg.data()[d + r] += ge * hj[r];
          }
        }
      }
    }
  };
  return id;
}

ValueId Tape::picked_neg_mean(ValueId logp, std::vector<std::int32_t> labels,
                              std::vector<double> weights) {
  const Tensor& lp = value(logp);
  if (lp.rows() == 0) throw std::invalid_argument("picked_neg_mean: empty input");
  if (static_cast<std::int64_t>(labels.size()) != lp.rows() || labels.size() != weights.size())
    throw std::invalid_argument("picked_neg_mean: labels/weights length mismatch");
  const double inv_n = 1.0 / static_cast<double>(lp.rows());
  double acc = 0.0;
  for (std::int64_t i = 0; i < lp.rows(); ++i) {
    const std::int32_t y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= lp.cols()) throw std::invalid_argument("picked_neg_mean: label out of range");
    acc += weights[static_cast<std::size_t>(i)] * (-lp(i, y));
  }
  Tensor out(1, 1);
  out(0, 0) = acc * inv_n;
  ValueId id = push(std::move(out), nullptr, "picked_neg_mean", {logp});
  nodes_.back().vjp = [logp, id, inv_n, labels = std::move(labels),
                       weights = std::move(weights)](Tape& t) {
    const double g = t.grad_mut(id)(0, 0);
    Tensor& glp = t.grad_mut(logp);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      glp(static_cast<std::int64_t>(i), labels[i]) -= g * weights[i] * inv_n;
    }
  };
  return id;
}

ValueId Tape::bce_logits_mean(ValueId logits, std::vector<double> targets,
                              std::vector<std::uint8_t> select) {
  const Tensor& x = value(logits);
  if (x.cols() != 1) throw std::invalid_argument("bce_logits_mean: logits must be E x 1");
  if (static_cast<std::int64_t>(targets.size()) != x.rows() || targets.size() != select.size())
    throw std::invalid_argument("bce_logits_mean: targets/select length mismatch");
  std::int64_t count = 0;
  double acc = 0.0;
  for (std::int64_t e = 0; e < x.rows(); ++e) {
    if (!select[static_cast<std::size_t>(e)]) continue;
    const double v = x.data()[e];
    acc += softplus(-v) + (1.0 - targets[static_cast<std::size_t>(e)]) * v;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("bce_logits_mean: no selected entries");
  Tensor out(1, 1);
  out(0, 0) = acc / static_cast<double>(count);
  ValueId id = push(std::move(out), nullptr, "bce_logits_mean", {logits});
  nodes_.back().vjp = [logits, id, count, targets = std::move(targets),
                       select = std::move(select)](Tape& t) {
    const double g = t.grad_mut(id)(0, 0) / static_cast<double>(count);
    const Tensor& x2 = t.value(logits);
    Tensor& gx = t.grad_mut(logits);
    for (std::size_t e = 0; e < targets.size(); ++e) {
      if (!select[e]) continue;
      gx.data()[e] += g * (stable_sigmoid(x2.data()[static_cast<std::int64_t>(e)]) - targets[e]);
    }
  };
  return id;
}

}  // namespace imgbk
