#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "imgbk/tensor.hpp"

namespace imgbk {

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double auc_ovr_macro = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [truth][pred]
  std::vector<double> per_class_f1;
  std::int64_t n = 0;  // evaluated samples
};

double accuracy(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth);

std::vector<std::vector<std::int64_t>> confusion_matrix(std::span<const std::int32_t> pred,
                                                        std::span<const std::int32_t> truth,
                                                        std::int32_t n_classes);

std::vector<double> per_class_f1(const std::vector<std::vector<std::int64_t>>& confusion);

// Unweighted mean over all n_classes of per-class F1, with 0/0 := 0.
double macro_f1(std::span<const std::int32_t> pred, std::span<const std::int32_t> truth,
                std::int32_t n_classes);

// One-vs-rest ROC AUC per class (rank statistic with tie midranks),
// unweighted mean over classes with at least one positive and one negative.
// Skipped classes are counted into *skipped when given, else warned.
double auc_ovr_macro(const Tensor& scores, std::span<const std::int32_t> truth,
                     std::int32_t* skipped = nullptr);

// Full report from row-stochastic score matrix (rows sum to 1 +/- 1e-9).
MetricsReport compute_metrics(const Tensor& scores, std::span<const std::int32_t> truth,
                              std::int32_t n_classes);

}  // namespace imgbk
