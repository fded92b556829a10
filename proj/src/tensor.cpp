#include "imgbk/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "imgbk/parallel.hpp"

namespace imgbk {

Tensor::Tensor(std::int64_t rows, std::int64_t cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("Tensor: negative dimension");
  data_.assign(static_cast<std::size_t>(rows * cols), 0.0);
}

Tensor Tensor::full(std::int64_t rows, std::int64_t cols, double value) {
  Tensor t(rows, cols);
  t.fill(value);
  return t;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
  Tensor c(a.rows(), b.cols());
  const std::int64_t q = a.cols();
  const std::int64_t r = b.cols();
  parallel_for(0, a.rows(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double* ci = c.data() + i * r;
      const double* ai = a.data() + i * q;
      for (std::int64_t k = 0; k < q; ++k) {
        const double aik = ai[k];
        if (aik == 0.0) continue;  // sparse feature rows
        const double* bk = b.data() + k * r;
        for (std::int64_t j = 0; j < r; ++j) ci[j] += aik * bk[j];
      }
    }
  });
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "add: shape mismatch");
  Tensor c(a.rows(), a.cols());
  for (std::int64_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  return c;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.rows(), a.cols());
  for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * c;
  return out;
}

Tensor tanh_map(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = std::tanh(a.data()[i]);
  return out;
}

Tensor sigmoid_map(const Tensor& a) {
  Tensor out(a.rows(), a.cols());
  for (std::int64_t i = 0; i < a.size(); ++i) {
    double x = a.data()[i];
    out.data()[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "concat_cols: row counts differ");
  Tensor c(a.rows(), a.cols() + b.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), c.row(i).begin());
    std::copy(b.row(i).begin(), b.row(i).end(), c.row(i).begin() + a.cols());
  }
  return c;
}

Tensor select_rows(const Tensor& a, std::span<const std::int64_t> rows) {
  Tensor c(static_cast<std::int64_t>(rows.size()), a.cols());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    require(rows[t] >= 0 && rows[t] < a.rows(), "select_rows: index out of range");
    std::copy(a.row(rows[t]).begin(), a.row(rows[t]).end(), c.row(static_cast<std::int64_t>(t)).begin());
  }
  return c;
}

Tensor log_softmax_rows(const Tensor& a) {
  require(a.cols() >= 1, "log_softmax_rows: empty rows");
  Tensor c(a.rows(), a.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i) {
    auto in = a.row(i);
    double m = in[0];
    for (double v : in) m = std::max(m, v);
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    auto out = c.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] - lse;
  }
  return c;
}

Tensor softmax_rows(const Tensor& a) {
  Tensor lp = log_softmax_rows(a);
  for (std::int64_t i = 0; i < lp.size(); ++i) lp.data()[i] = std::exp(lp.data()[i]);
  return lp;
}

bool all_finite(const Tensor& a) {
  for (std::int64_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i])) return false;
  }
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace imgbk
