#include "imgbk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace imgbk {

double accuracy(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("accuracy: length mismatch or empty input");
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<std::vector<std::int64_t>> confusion_matrix(std::span<const std::int32_t> pred,
                                                        std::span<const std::int32_t> truth,
                                                        std::int32_t n_classes) {
  if (pred.size() != truth.size()) throw std::invalid_argument("confusion_matrix: length mismatch");
  std::vector<std::vector<std::int64_t>> conf(
      static_cast<std::size_t>(n_classes),
      std::vector<std::int64_t>(static_cast<std::size_t>(n_classes), 0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= n_classes || truth[i] < 0 || truth[i] >= n_classes)
      throw std::invalid_argument("confusion_matrix: class id out of range");
    ++conf[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return conf;
}

std::vector<double> per_class_f1(const std::vector<std::vector<std::int64_t>>& confusion) {
  const std::size_t m = confusion.size();
  std::vector<double> f1(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    std::int64_t tp = confusion[c][c];
    std::int64_t fn = 0;
    std::int64_t fp = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == c) continue;
      fn += confusion[c][k];
      fp += confusion[k][c];
    }
    const std::int64_t denom = 2 * tp + fp + fn;
    f1[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f1;
}

double macro_f1(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth,
                std::int32_t n_classes) {
  auto f1 = per_class_f1(confusion_matrix(pred, truth, n_classes));
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(n_classes);
}

namespace {

// Binary AUC via the Mann-Whitney rank statistic with midranks for ties.
double binary_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::int64_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (positive[order[k]]) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

double auc_ovr_macro(const Tensor& scores, std::span<const std::int32_t> truth,
                     std::int32_t* skipped) {
  if (static_cast<std::int64_t>(truth.size()) != scores.rows())
    throw std::invalid_argument("auc_ovr_macro: truth length != score rows");
  for (std::int64_t i = 0; i < scores.rows(); ++i) {
    double sum = 0.0;
    for (std::int64_t j = 0; j < scores.cols(); ++j) sum += scores(i, j);
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("auc_ovr_macro: score rows must sum to 1");
  }
  const auto m = static_cast<std::int32_t>(scores.cols());
  std::vector<std::int64_t> support(static_cast<std::size_t>(m), 0);
  for (std::int32_t y : truth) {
    if (y < 0 || y >= m) throw std::invalid_argument("auc_ovr_macro: class id out of range");
    ++support[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  std::int32_t used = 0;
  std::int32_t skip_count = 0;
  const auto n = static_cast<std::int64_t>(truth.size());
  for (std::int32_t c = 0; c < m; ++c) {
    const std::int64_t pos = support[static_cast<std::size_t>(c)];
    if (pos == 0) continue;  // class absent from truth: not part of the mean
    if (pos == n) {
      ++skip_count;  // no negatives
      continue;
    }
    std::vector<double> col(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> is_pos(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      col[static_cast<std::size_t>(i)] = scores(i, c);
      is_pos[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)] == c ? 1 : 0;
    }
    sum += binary_auc(col, is_pos);
    ++used;
  }
  if (skipped) {
    *skipped = skip_count;
  } else if (skip_count > 0) {
    std::cerr << "warning: " << skip_count << " class(es) skipped in AUC (no negatives)\n";
  }
  if (used == 0) throw std::invalid_argument("auc_ovr_macro: no class with both positives and negatives");
  return sum / static_cast<double>(used);
}

MetricsReport compute_metrics(const Tensor& scores, std::span<const std::int32_t> truth,
                              std::int32_t n_classes) {
  if (scores.cols() != n_classes) throw std::invalid_argument("compute_metrics: score cols != classes");
  std::vector<std::int32_t> pred(truth.size());
  for (std::int64_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;  // ties keep the lowest class id
    }
    pred[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(best);
  }
  MetricsReport report;
  report.n = static_cast<std::int64_t>(truth.size());
  report.accuracy = accuracy(pred, truth);
  report.confusion = confusion_matrix(pred, truth, n_classes);
  report.per_class_f1 = per_class_f1(report.confusion);
  report.macro_f1 = std::accumulate(report.per_class_f1.begin(), report.per_class_f1.end(), 0.0) /
                    static_cast<double>(n_classes);
  std::int32_t skipped = 0;
  report.auc_ovr_macro = auc_ovr_macro(scores, truth, &skipped);
  return report;
}

}  // namespace imgbk
