#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "imgbk/errors.hpp"
#include "imgbk/optim.hpp"
#include "imgbk/tape.hpp"
#include "test_support.hpp"

using namespace imgbk;
using imgbk::testing::random_tensor;
using imgbk::testing::toy_graph;

namespace {

// Reduce any tensor to a scalar: ones^T X ones.
ValueId sum_all(Tape& tape, ValueId x) {
  const Tensor& v = tape.value(x);
  ValueId left = tape.leaf(Tensor::full(1, v.rows(), 1.0));
  ValueId right = tape.leaf(Tensor::full(v.cols(), 1, 1.0));
  return tape.matmul(tape.matmul(left, x), right);
}

}  // namespace

TEST_CASE("backward of a plain sum gives ones") {
  Tape tape;
  Prng rng(0);
  ValueId w = tape.leaf(random_tensor(rng, 3, 2));
  ValueId f = sum_all(tape, w);
  tape.backward(f);
  const Tensor& g = tape.grad(w);
  for (std::int64_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == doctest::Approx(1.0));
}

TEST_CASE("sigmoid grad at zero is a quarter") {
  Tape tape;
  ValueId w = tape.leaf(Tensor(1, 1));  // w = 0
  const double x = 3.0;
  ValueId f = tape.scale(tape.sigmoid(w), x);
  tape.backward(f);
  CHECK(tape.grad(w)(0, 0) == doctest::Approx(0.25 * x).epsilon(1e-12));
}

TEST_CASE("backward requires a scalar root and a prior backward") {
  Tape tape;
  ValueId w = tape.leaf(Tensor(2, 2));
  CHECK_THROWS_AS(tape.backward(w), std::invalid_argument);
  CHECK_THROWS_AS(tape.grad(w), std::logic_error);
}

TEST_CASE("non-finite outputs are rejected") {
  Tape tape;
  ValueId big = tape.leaf(Tensor::full(1, 1, 1e308));
  CHECK_THROWS_AS(tape.add(big, big), NumericalError);
}

TEST_CASE("select_rows accumulates duplicate rows") {
  Tape tape;
  Prng rng(5);
  ValueId x = tape.leaf(random_tensor(rng, 3, 2));
  ValueId s = tape.select_rows(x, {1, 1});
  tape.backward(sum_all(tape, s));
  CHECK(tape.grad(x)(1, 0) == doctest::Approx(2.0));
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("backward is linear over summed subgraphs") {
  Prng rng(9);
  Tensor w0 = random_tensor(rng, 2, 2);
  Tensor x0 = random_tensor(rng, 2, 2);

  auto run = [&](int mode) {
    Tape tape;
    ValueId w = tape.leaf(w0);
    ValueId x = tape.leaf(x0);
    ValueId f = sum_all(tape, tape.matmul(w, x));
    ValueId g = sum_all(tape, tape.tanh(w));
    ValueId root = mode == 0 ? tape.add(f, g) : (mode == 1 ? f : g);
    tape.backward(root);
    return Tensor(tape.grad(w));
  };
  Tensor combined = run(0);
  Tensor fa = run(1);
  Tensor fb = run(2);
  for (std::int64_t i = 0; i < combined.size(); ++i)
    CHECK(combined.data()[i] == doctest::Approx(fa.data()[i] + fb.data()[i]).epsilon(1e-12));
}

TEST_CASE("fused edge gate equals its primitive composition") {
  Graph g = toy_graph(12, 10, 3, 2);
  Prng rng(3);
  Tensor h = random_tensor(rng, g.n_nodes, 3);
  Tensor wg = random_tensor(rng, 6, 1);

  Tape tape;
  ValueId hid = tape.leaf(h);
  ValueId wgid = tape.leaf(wg);
  ValueId fused = tape.edge_gate_logits(hid, wgid, g);

  std::vector<std::int64_t> src, dst;
  for (std::int64_t i = 0; i < g.n_nodes; ++i) {
    for (std::int32_t j : g.neighbors(i)) {
      src.push_back(i);
      dst.push_back(j);
    }
  }
  ValueId composed = tape.matmul(
      tape.concat_cols(tape.select_rows(hid, src), tape.select_rows(hid, dst)), wgid);
  CHECK(max_abs_diff(tape.value(fused), tape.value(composed)) < 1e-12);
}

// ---------------------------------------------------------------------------
// Finite-difference property checks, >= 100 randomized trials per primitive.

namespace {

constexpr int kTrials = 100;
constexpr double kTol = 1e-6;

void check_fd(const std::function<ValueId(TapeBinding&)>& build, ParamStore& store,
              std::uint64_t seed) {
  const double err = grad_check(build, store, 1e-5, 6, seed);
  CHECK(err < kTol);
}

}  // namespace

TEST_CASE("grad: matmul") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(100 + t);
    ParamStore store;
    store.add("a", random_tensor(rng, 2 + t % 3, 3));
    store.add("b", random_tensor(rng, 3, 2 + t % 2));
    check_fd([](TapeBinding& b) {
      return sum_all(b.tape, b.tape.matmul(b.param("a"), b.param("b")));
    }, store, t);
  }
}

TEST_CASE("grad: add and scale") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(200 + t);
    ParamStore store;
    store.add("a", random_tensor(rng, 3, 3));
    store.add("b", random_tensor(rng, 3, 3));
    check_fd([t](TapeBinding& b) {
      return sum_all(b.tape, b.tape.add(b.tape.scale(b.param("a"), 0.3 + t), b.param("b")));
    }, store, t);
  }
}

TEST_CASE("grad: tanh and sigmoid") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(300 + t);
    ParamStore store;
    store.add("a", random_tensor(rng, 2, 4));
    check_fd([](TapeBinding& b) {
      return sum_all(b.tape, b.tape.tanh(b.tape.sigmoid(b.param("a"))));
    }, store, t);
  }
}

TEST_CASE("grad: concat_cols and select_rows") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(400 + t);
    ParamStore store;
    store.add("a", random_tensor(rng, 4, 2));
    store.add("b", random_tensor(rng, 4, 3));
    std::vector<std::int64_t> rows{3, 0, 0, 2};
    check_fd([&rows](TapeBinding& b) {
      return sum_all(b.tape,
                     b.tape.select_rows(b.tape.concat_cols(b.param("a"), b.param("b")), rows));
    }, store, t);
  }
}

TEST_CASE("grad: log_softmax_rows") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(500 + t);
    ParamStore store;
    store.add("a", random_tensor(rng, 3, 4, 2.0));
    // weight rows unevenly so the vjp's row-sum term is exercised
    Tensor w = random_tensor(rng, 4, 1);
    check_fd([&w](TapeBinding& b) {
      return sum_all(b.tape, b.tape.matmul(b.tape.log_softmax_rows(b.param("a")), b.tape.leaf(w)));
    }, store, t);
  }
}

TEST_CASE("grad: sym_norm_aggregate") {
  for (int t = 0; t < kTrials; ++t) {
    Graph g = toy_graph(600 + t, 8, 3, 2);
    Prng rng(601 + t);
    ParamStore store;
    store.add("h", random_tensor(rng, g.n_nodes, 3));
    check_fd([&g](TapeBinding& b) {
      return sum_all(b.tape, b.tape.sym_norm_aggregate(b.param("h"), g));
    }, store, t);
  }
}

TEST_CASE("grad: gated_neighbor_mean through h and alpha") {
  for (int t = 0; t < kTrials; ++t) {
    Graph g = toy_graph(700 + t, 8, 3, 2);
    Prng rng(701 + t);
    ParamStore store;
    store.add("h", random_tensor(rng, g.n_nodes, 3));
    store.add("alpha", random_tensor(rng, g.n_edge_directions(), 1));
    check_fd([&g](TapeBinding& b) {
      return sum_all(b.tape, b.tape.gated_neighbor_mean(b.param("h"), b.param("alpha"), g));
    }, store, t);
  }
}

TEST_CASE("grad: bikernel_edge_aggregate through all inputs") {
  for (int t = 0; t < kTrials; ++t) {
    Graph g = toy_graph(800 + t, 8, 3, 2);
    Prng rng(801 + t);
    ParamStore store;
    store.add("h", random_tensor(rng, g.n_nodes, 3));
    store.add("ws", random_tensor(rng, 3, 2));
    store.add("wd", random_tensor(rng, 3, 2));
    store.add("alpha", random_tensor(rng, g.n_edge_directions(), 1));
    check_fd([&g](TapeBinding& b) {
      return sum_all(b.tape, b.tape.bikernel_edge_aggregate(b.param("h"), b.param("ws"),
                                                            b.param("wd"), b.param("alpha"), g));
    }, store, t);
  }
}

TEST_CASE("grad: edge_gate_logits") {
  for (int t = 0; t < kTrials; ++t) {
    Graph g = toy_graph(900 + t, 8, 3, 2);
    Prng rng(901 + t);
    ParamStore store;
    store.add("h", random_tensor(rng, g.n_nodes, 3));
    store.add("wg", random_tensor(rng, 6, 1));
    check_fd([&g](TapeBinding& b) {
      return sum_all(b.tape, b.tape.sigmoid(b.tape.edge_gate_logits(b.param("h"), b.param("wg"), g)));
    }, store, t);
  }
}

TEST_CASE("grad: picked_neg_mean") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(1000 + t);
    ParamStore store;
    store.add("a", random_tensor(rng, 5, 3));
    std::vector<std::int32_t> labels{0, 2, 1, 0, 2};
    std::vector<double> weights{1.0, 0.5, 2.0, 1.0, 1.5};
    check_fd([&](TapeBinding& b) {
      return b.tape.picked_neg_mean(b.tape.log_softmax_rows(b.param("a")), labels, weights);
    }, store, t);
  }
}

TEST_CASE("grad: bce_logits_mean") {
  for (int t = 0; t < kTrials; ++t) {
    Prng rng(1100 + t);
    ParamStore store;
    store.add("x", random_tensor(rng, 6, 1));
    std::vector<double> targets{1, 0, 1, 1, 0, 0};
    std::vector<std::uint8_t> select{1, 1, 0, 1, 1, 0};
    check_fd([&](TapeBinding& b) {
      return b.tape.bce_logits_mean(b.param("x"), targets, select);
    }, store, t);
  }
}

TEST_CASE("gated_neighbor_mean leaves isolated rows at zero") {
  Tensor feats(3, 2);
  Graph g = build_graph({{0, 1}}, std::move(feats), {0, 1, 0});  // node 2 isolated
  Tape tape;
  Prng rng(1);
  ValueId h = tape.leaf(random_tensor(rng, 3, 2));
  ValueId alpha = tape.leaf(Tensor::full(g.n_edge_directions(), 1, 0.7));
  ValueId out = tape.gated_neighbor_mean(h, alpha, g);
  CHECK(tape.value(out)(2, 0) == 0.0);
  CHECK(tape.value(out)(2, 1) == 0.0);
}
